//! Framed binary persistence for models, shadow run sets, and filter models
//! (record types MODL, SHDW, FLTR on the shared framing).

use std::io::{Read, Write};

use hefl_ckks::framing::{
    read_f64, read_preamble, read_string, read_u64, record, write_f64,
    write_preamble, write_string, write_u64,
};
use hefl_ckks::{CkksError, Result};
use hefl_kernels::ChebApprox;

use crate::filter::{FilterModel, FilterStats};
use crate::learner::model::{Architecture, ModelParams, NamedTensor};
use crate::shadow::{ShadowRunSet, ShadowSample};
use crate::spca::{SpcaMode, SpcaModel};
use crate::svm::SvmModel;

fn write_f64_vec<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    write_u64(w, v.len() as u64)?;
    let mut bytes = Vec::with_capacity(v.len() * 8);
    for &x in v {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

fn read_f64_vec<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let len = read_u64(r)? as usize;
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk"))).collect())
}

pub fn write_model<W: Write>(w: &mut W, m: &ModelParams) -> Result<()> {
    write_preamble(w, record::MODEL)?;
    write_string(w, &m.arch.id())?;
    write_u64(w, m.tensors.len() as u64)?;
    for t in &m.tensors {
        write_string(w, &t.name)?;
        write_u64(w, t.shape.len() as u64)?;
        for &s in &t.shape {
            write_u64(w, s as u64)?;
        }
        write_f64_vec(w, &t.data)?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<ModelParams> {
    read_preamble(r, record::MODEL)?;
    let arch = Architecture::parse(&read_string(r)?)
        .map_err(|e| CkksError::Framing(e.to_string()))?;
    let count = read_u64(r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name = read_string(r)?;
        let rank = read_u64(r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(r)? as usize);
        }
        let data = read_f64_vec(r)?;
        tensors.push(NamedTensor { name, shape, data });
    }
    Ok(ModelParams { arch, tensors })
}

pub fn write_shadow<W: Write>(w: &mut W, s: &ShadowRunSet) -> Result<()> {
    write_preamble(w, record::SHADOW)?;
    write_string(w, &s.arch.id())?;
    write_string(w, &s.property)?;
    write_u64(w, u64::from(s.run_count))?;
    write_u64(w, u64::from(s.epoch_count))?;
    write_u64(w, s.excluded_runs.len() as u64)?;
    for &r in &s.excluded_runs {
        write_u64(w, u64::from(r))?;
    }
    write_u64(w, s.samples.len() as u64)?;
    for sample in &s.samples {
        write_u64(w, u64::from(sample.run))?;
        write_u64(w, u64::from(sample.epoch))?;
        write_u64(w, u64::from(sample.honest))?;
        write_f64_vec(w, &sample.delta)?;
    }
    Ok(())
}

pub fn read_shadow<R: Read>(r: &mut R) -> Result<ShadowRunSet> {
    read_preamble(r, record::SHADOW)?;
    let arch = Architecture::parse(&read_string(r)?)
        .map_err(|e| CkksError::Framing(e.to_string()))?;
    let property = read_string(r)?;
    let run_count = read_u64(r)? as u32;
    let epoch_count = read_u64(r)? as u32;
    let excl = read_u64(r)? as usize;
    let mut excluded_runs = Vec::with_capacity(excl);
    for _ in 0..excl {
        excluded_runs.push(read_u64(r)? as u32);
    }
    let n = read_u64(r)? as usize;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let run = read_u64(r)? as u32;
        let epoch = read_u64(r)? as u32;
        let honest = read_u64(r)? != 0;
        let delta = read_f64_vec(r)?;
        samples.push(ShadowSample { delta, honest, run, epoch });
    }
    Ok(ShadowRunSet { arch, property, samples, run_count, epoch_count, excluded_runs })
}

fn mode_tag(mode: SpcaMode) -> u64 {
    match mode {
        SpcaMode::Blended => 0,
        SpcaMode::PureBarshan => 1,
        SpcaMode::CorrRankedPca => 2,
    }
}

fn mode_from(tag: u64) -> Result<SpcaMode> {
    Ok(match tag {
        0 => SpcaMode::Blended,
        1 => SpcaMode::PureBarshan,
        2 => SpcaMode::CorrRankedPca,
        t => return Err(CkksError::Framing(format!("unknown spca mode {t}"))),
    })
}

pub fn write_filter<W: Write>(w: &mut W, f: &FilterModel) -> Result<()> {
    write_preamble(w, record::FILTER)?;
    write_string(w, &f.property)?;
    write_string(w, &f.layer)?;
    // spca
    write_u64(w, f.spca.dim as u64)?;
    write_u64(w, f.spca.input_dim as u64)?;
    write_u64(w, mode_tag(f.spca.mode))?;
    write_u64(w, f.spca.variance_filled as u64)?;
    write_f64_vec(w, &f.spca.mean)?;
    write_f64_vec(w, &f.spca.eigenvalues)?;
    write_u64(w, f.spca.projection.len() as u64)?;
    for row in &f.spca.projection {
        write_f64_vec(w, row)?;
    }
    // svm
    write_u64(w, f.svm.support_vectors.len() as u64)?;
    for sv in &f.svm.support_vectors {
        write_f64_vec(w, sv)?;
    }
    write_f64_vec(w, &f.svm.dual_coef)?;
    write_f64(w, f.svm.bias)?;
    write_u64(w, f.svm.degree as u64)?;
    write_f64(w, f.svm.gamma)?;
    write_f64(w, f.svm.coef0)?;
    // cheb + scalars
    write_f64(w, f.cheb.steepness)?;
    write_f64(w, f.cheb.interval.0)?;
    write_f64(w, f.cheb.interval.1)?;
    write_u64(w, f.cheb.degree as u64)?;
    write_f64_vec(w, &f.cheb.coeffs)?;
    write_f64(w, f.cheb.max_error)?;
    write_f64(w, f.cheb.error_target)?;
    write_f64(w, f.boundary)?;
    write_f64(w, f.sigmoid_scale)?;
    write_f64(w, f.prescale)?;
    write_f64(w, f.f1_holdout)?;
    write_f64(w, f.stats.mu_h)?;
    write_f64(w, f.stats.sigma_h)?;
    write_f64(w, f.stats.mu_b)?;
    write_f64(w, f.stats.sigma_b)?;
    Ok(())
}

pub fn read_filter<R: Read>(r: &mut R) -> Result<FilterModel> {
    read_preamble(r, record::FILTER)?;
    let property = read_string(r)?;
    let layer = read_string(r)?;
    let dim = read_u64(r)? as usize;
    let input_dim = read_u64(r)? as usize;
    let mode = mode_from(read_u64(r)?)?;
    let variance_filled = read_u64(r)? as usize;
    let mean = read_f64_vec(r)?;
    let eigenvalues = read_f64_vec(r)?;
    let rows = read_u64(r)? as usize;
    let mut projection = Vec::with_capacity(rows);
    for _ in 0..rows {
        projection.push(read_f64_vec(r)?);
    }
    let spca = SpcaModel { projection, mean, dim, input_dim, mode, variance_filled, eigenvalues };

    let n_sv = read_u64(r)? as usize;
    let mut support_vectors = Vec::with_capacity(n_sv);
    for _ in 0..n_sv {
        support_vectors.push(read_f64_vec(r)?);
    }
    let dual_coef = read_f64_vec(r)?;
    let bias = read_f64(r)?;
    let degree = read_u64(r)? as usize;
    let gamma = read_f64(r)?;
    let coef0 = read_f64(r)?;
    let svm = SvmModel { support_vectors, dual_coef, bias, degree, gamma, coef0 };

    let steepness = read_f64(r)?;
    let interval = (read_f64(r)?, read_f64(r)?);
    let cheb_degree = read_u64(r)? as usize;
    let coeffs = read_f64_vec(r)?;
    let max_error = read_f64(r)?;
    let error_target = read_f64(r)?;
    let cheb = ChebApprox { steepness, interval, degree: cheb_degree, coeffs, max_error, error_target };

    Ok(FilterModel {
        property,
        layer,
        spca,
        svm,
        cheb,
        boundary: read_f64(r)?,
        sigmoid_scale: read_f64(r)?,
        prescale: read_f64(r)?,
        f1_holdout: read_f64(r)?,
        stats: FilterStats {
            mu_h: read_f64(r)?,
            sigma_h: read_f64(r)?,
            mu_b: read_f64(r)?,
            sigma_b: read_f64(r)?,
        },
    })
}

// round-trip checks live in tests/filter_pipeline.rs alongside the users
