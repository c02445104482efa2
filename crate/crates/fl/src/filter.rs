//! Filter models (SPCA projection + SVM + smooth threshold) and their
//! compilation into homomorphic form.
//!
//! The compiled pipeline follows six steps: (1) plaintext-matrix
//! encrypted-vector SPCA projection with mean subtraction, (2)
//! support-vector matvec, (3) kernel constant add and exponentiation,
//! (4) slotwise multiply by alpha_i y_i, (5) TotalSum plus bias and boundary,
//! (6) Chebyshev sigmoid. The result is the reliability score replicated in
//! every slot.
//!
//! Score-range control: holdout decision values are linearly pre-scaled so
//! the 1st..99th percentile band lands inside 80% of the sigmoid argument
//! interval; the steepness factor and the pre-scale fold into the polynomial
//! argument map, costing no extra level.

use hefl_ckks::{Ciphertext, CkksError, Context, EvalKeys};
use hefl_common::stats::{mean, percentile, std_dev};
use hefl_kernels::{
    cheb_eval_depth, eval_chebyshev, mat_vec, matvec_rotation_steps, mirror, total_sum,
    total_sum_steps, ChebApprox, PlainMatrix,
};
use thiserror::Error;

use crate::shadow::ShadowDataset;
use crate::spca::{fit_spca, SpcaMode, SpcaModel};
use crate::svm::{f1_score, train_svm, SvmConfig, SvmError, SvmModel};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Spca(#[from] crate::spca::SpcaError),
    #[error("pipeline needs {needed} levels but the parameters provide {available}")]
    DepthOverflow { needed: usize, available: usize },
    #[error(transparent)]
    Ckks(#[from] CkksError),
}

/// Filter-score statistics over honest / Byzantine holdout populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterStats {
    pub mu_h: f64,
    pub sigma_h: f64,
    pub mu_b: f64,
    pub sigma_b: f64,
}

#[derive(Debug, Clone)]
pub struct FilterModel {
    pub property: String,
    pub layer: String,
    pub spca: SpcaModel,
    pub svm: SvmModel,
    pub cheb: ChebApprox,
    /// Boundary shift B in decision-value units (0 = neutral).
    pub boundary: f64,
    /// Sigmoid steepness k.
    pub sigmoid_scale: f64,
    /// Linear pre-scale mapping decision values into the argument interval.
    pub prescale: f64,
    pub f1_holdout: f64,
    pub stats: FilterStats,
}

#[derive(Debug, Clone)]
pub struct FilterTrainConfig {
    pub dim: usize,
    pub degree: usize,
    pub spca_mode: SpcaMode,
    pub svm_c: f64,
    pub sigmoid_scale: f64,
    pub cheb_degree: usize,
    pub interval: (f64, f64),
    pub boundary: f64,
    pub seed: u64,
}

impl Default for FilterTrainConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            degree: 1,
            spca_mode: SpcaMode::Blended,
            svm_c: 1.0,
            sigmoid_scale: 20.0,
            cheb_degree: 32,
            interval: (-15.0, 15.0),
            boundary: 0.0,
            seed: 1,
        }
    }
}

impl FilterModel {
    /// Training-path score: SPCA projection, SVM decision, boundary, then
    /// the clamped scaled sigmoid approximation.
    pub fn score_plain(&self, delta_layer: &[f64]) -> f64 {
        let d = self.svm.decision(&self.spca.project(delta_layer)) + self.boundary;
        self.cheb.eval_scaled(self.prescale * d)
    }

    pub fn decision_value(&self, delta_layer: &[f64]) -> f64 {
        self.svm.decision(&self.spca.project(delta_layer)) + self.boundary
    }
}

/// Train a filter on a per-layer shadow dataset (run-grouped 80/20 split).
pub fn train_filter(
    shadow: &ShadowDataset,
    cfg: &FilterTrainConfig,
) -> Result<FilterModel, FilterError> {
    let (train, holdout) = shadow.split_by_run();
    let spca = fit_spca(&train.features, &train.labels, cfg.dim, cfg.spca_mode, cfg.seed)?;
    let x_train: Vec<Vec<f64>> = train.features.iter().map(|f| spca.project(f)).collect();
    let svm_cfg = SvmConfig { c: cfg.svm_c, degree: cfg.degree, seed: cfg.seed, ..Default::default() };
    let svm = train_svm(&x_train, &train.labels, &svm_cfg)?;

    let x_hold: Vec<Vec<f64>> = holdout.features.iter().map(|f| spca.project(f)).collect();
    let preds: Vec<u8> = x_hold.iter().map(|x| svm.predict(x)).collect();
    let f1_holdout = f1_score(&preds, &holdout.labels);

    // pre-scale from the holdout decision spread (boundary included)
    let decisions: Vec<f64> = x_hold.iter().map(|x| svm.decision(x) + cfg.boundary).collect();
    let p1 = percentile(&decisions, 1.0);
    let p99 = percentile(&decisions, 99.0);
    let span = p1.abs().max(p99.abs()).max(1e-9);
    let prescale = 0.8 * cfg.interval.1 / (cfg.sigmoid_scale * span);

    let cheb = ChebApprox::sigmoid(cfg.sigmoid_scale, cfg.interval, cfg.cheb_degree)?;

    // holdout filter-score statistics
    let score = |d: f64| cheb.eval_scaled(prescale * d);
    let honest: Vec<f64> = decisions
        .iter()
        .zip(&holdout.labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&d, _)| score(d))
        .collect();
    let byz: Vec<f64> = decisions
        .iter()
        .zip(&holdout.labels)
        .filter(|(_, &l)| l == 0)
        .map(|(&d, _)| score(d))
        .collect();
    let stats = FilterStats {
        mu_h: mean(&honest),
        sigma_h: std_dev(&honest),
        mu_b: mean(&byz),
        sigma_b: std_dev(&byz),
    };

    Ok(FilterModel {
        property: shadow.property.clone(),
        layer: shadow.layer.clone(),
        spca,
        svm,
        cheb,
        boundary: cfg.boundary,
        sigmoid_scale: cfg.sigmoid_scale,
        prescale,
        f1_holdout,
        stats,
    })
}

/// Levels the compiled pipeline consumes: SPCA matvec (1) + SV matvec (1) +
/// exponentiation + dual multiply (1) + sigmoid.
pub fn pipeline_depth(kernel_degree: usize, cheb_degree: usize) -> usize {
    let pow_depth = match kernel_degree {
        0 | 1 => 0,
        2 => 1,
        3 | 4 => 2,
        d => (usize::BITS - (d - 1).leading_zeros()) as usize,
    };
    3 + pow_depth + cheb_eval_depth(cheb_degree)
}

#[derive(Debug)]
pub struct CompiledFilter {
    pub property: String,
    pub layer: String,
    spca_matrix: PlainMatrix,
    spca_bias: Vec<f64>,
    sv_matrix: PlainMatrix,
    kernel_const: f64,
    degree: usize,
    dual_mask: Vec<f64>,
    bias_plus_boundary: f64,
    cheb: ChebApprox,
    arg_scale: f64,
    /// slots / rows_padded of the SV matrix (slot-copy count).
    copies: f64,
    pub levels_required: usize,
    pub input_len: usize,
    pub input_period: usize,
}

impl CompiledFilter {
    /// Rotation steps the encrypted evaluation needs under `slots`.
    pub fn rotation_steps(&self, slots: usize) -> Vec<usize> {
        let mut steps = matvec_rotation_steps(self.spca_matrix.cols_padded, slots);
        steps.extend(matvec_rotation_steps(self.sv_matrix.cols_padded, slots));
        steps.extend(total_sum_steps(slots));
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    /// Six-step encrypted pipeline; input encrypts the layer delta replicated
    /// at `input_period`. Output: the filter score in every slot.
    pub fn eval_encrypted(
        &self,
        ctx: &Context,
        keys: &EvalKeys,
        ct_delta: &Ciphertext,
    ) -> Result<Ciphertext, FilterError> {
        if ct_delta.level < self.levels_required {
            return Err(FilterError::DepthOverflow {
                needed: self.levels_required,
                available: ct_delta.level,
            });
        }
        // (1) SPCA projection + mean subtraction
        let projected = mat_vec(ctx, keys, &self.spca_matrix, ct_delta)?;
        let bias_rep = replicate(&self.spca_bias, self.spca_matrix.rows_padded, ctx.params.slots);
        let projected = hefl_ckks::add_plain(ctx, &projected, &bias_rep)?;
        // (2) support-vector matvec (gamma folded into the rows)
        let k_pre = mat_vec(ctx, keys, &self.sv_matrix, &projected)?;
        // (3) kernel constant and exponentiation
        let mut k = hefl_ckks::add_const(ctx, &k_pre, self.kernel_const)?;
        k = match self.degree {
            1 => k,
            2 => hefl_ckks::square(ctx, keys, &k)?,
            3 => {
                let sq = hefl_ckks::square(ctx, keys, &k)?;
                hefl_ckks::mult(ctx, keys, &sq, &k)?
            }
            4 => {
                let sq = hefl_ckks::square(ctx, keys, &k)?;
                hefl_ckks::square(ctx, keys, &sq)?
            }
            d => {
                return Err(FilterError::Ckks(CkksError::Framing(format!(
                    "unsupported kernel degree {d}"
                ))))
            }
        };
        // (4) slotwise multiply by alpha_i y_i (plus slot-copy compensation)
        let mask_rep = replicate(&self.dual_mask, self.sv_matrix.rows_padded, ctx.params.slots);
        let weighted = hefl_ckks::mult_plain(ctx, &k, &mask_rep)?;
        // (5) TotalSum + bias + boundary
        let summed = total_sum(ctx, keys, &weighted)?;
        let shifted = hefl_kernels::boundary_shift(ctx, &summed, self.bias_plus_boundary)?;
        // (6) Chebyshev sigmoid with the steepness/pre-scale folded in
        let (p, _report) = eval_chebyshev(ctx, keys, &shifted, &self.cheb, self.arg_scale)?;
        Ok(p)
    }

    /// Plaintext mirror of the six-step pipeline. Shares no code with the
    /// SVM/SPCA training path: plain matvec + explicit sums + Clenshaw.
    pub fn eval_mirror(&self, delta_layer: &[f64]) -> f64 {
        let mut input = vec![0.0; self.input_period];
        input[..delta_layer.len()].copy_from_slice(delta_layer);
        // (1)
        let m = &self.spca_matrix;
        let mut projected: Vec<f64> = (0..m.rows_padded)
            .map(|r| (0..m.cols_padded).map(|c| m.at_padded(r, c) * input[c % self.input_period]).sum())
            .collect();
        for (p, b) in projected.iter_mut().zip(&self.spca_bias) {
            *p += b;
        }
        // (2)
        let sv = &self.sv_matrix;
        let k_pre: Vec<f64> = (0..sv.rows_padded)
            .map(|r| {
                (0..sv.cols_padded)
                    .map(|c| sv.at_padded(r, c) * projected[c % projected.len()])
                    .sum()
            })
            .collect();
        // (3) + (4)
        let weighted: Vec<f64> = k_pre
            .iter()
            .zip(&self.dual_mask)
            .map(|(&kp, &w)| (kp + self.kernel_const).powi(self.degree as i32) * w)
            .collect();
        // (5): TotalSum over all slots repeats the block `copies` times; the
        // mask bakes in the 1/copies compensation
        let block_sum: f64 = weighted.iter().sum();
        let total = block_sum * self.copies;
        let shifted = total + self.bias_plus_boundary;
        // (6)
        mirror::clenshaw(
            &self.cheb.coeffs,
            self.cheb.interval.0,
            self.cheb.interval.1,
            self.arg_scale * shifted,
        )
    }
}

fn replicate(block: &[f64], period: usize, slots: usize) -> Vec<f64> {
    (0..slots).map(|i| if i % period < block.len() { block[i % period] } else { 0.0 }).collect()
}

/// Compile a trained filter for the given parameters. Fails with the level
/// requirement when the budget is too small.
pub fn compile_filter(fm: &FilterModel, ctx: &Context) -> Result<CompiledFilter, FilterError> {
    let levels_required = pipeline_depth(fm.svm.degree, fm.cheb.degree);
    let available = ctx.params.max_level;
    if levels_required > available {
        return Err(FilterError::DepthOverflow { needed: levels_required, available });
    }
    let d = fm.spca.input_dim;
    let dim = fm.spca.dim;
    let slots = ctx.params.slots;

    let proj_flat: Vec<f64> = fm.spca.projection.iter().flatten().cloned().collect();
    let spca_matrix = PlainMatrix::new(dim, d, &proj_flat)?;
    let spca_bias = fm.spca.centering_bias();

    let n_sv = fm.svm.n_sv();
    let sv_flat: Vec<f64> = fm
        .svm
        .support_vectors
        .iter()
        .flat_map(|sv| sv.iter().map(|&x| fm.svm.gamma * x))
        .collect();
    let sv_matrix = PlainMatrix::new(n_sv, dim, &sv_flat)?;

    // TotalSum adds every replicated copy of the n_sv block; compensate in
    // the dual-coefficient mask so the final sum is the block sum once.
    let copies = slots as f64 / sv_matrix.rows_padded as f64;
    let mut dual_mask = vec![0.0f64; sv_matrix.rows_padded];
    for (m, &c) in dual_mask.iter_mut().zip(&fm.svm.dual_coef) {
        *m = c / copies;
    }

    Ok(CompiledFilter {
        property: fm.property.clone(),
        layer: fm.layer.clone(),
        spca_matrix,
        spca_bias,
        sv_matrix,
        kernel_const: fm.svm.coef0,
        degree: fm.svm.degree,
        dual_mask,
        bias_plus_boundary: fm.svm.bias + fm.boundary,
        cheb: fm.cheb.clone(),
        arg_scale: fm.sigmoid_scale * fm.prescale,
        copies,
        levels_required,
        input_len: d,
        input_period: d.next_power_of_two(),
    })
}
