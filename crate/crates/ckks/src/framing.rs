//! Shared binary framing.
//!
//! Every persisted artifact starts with the magic "HEFL", a u16 format
//! version and a 4-byte record type. Ring objects add a fixed sub-header
//! {logN u8, level u8, scale-log u8, prime count u8} followed by
//! little-endian u64 coefficient words per RNS limb. Scales may drift off
//! powers of two during evaluation, so the exact f64 scale follows the
//! sub-header; the scale-log byte is the rounded log2 for indexing.

use std::io::{Read, Write};

use crate::cipher::Ciphertext;
use crate::error::{CkksError, Result};
use crate::params::CkksParams;
use crate::poly::RnsPoly;

pub const MAGIC: &[u8; 4] = b"HEFL";
pub const FORMAT_VERSION: u16 = 1;

pub mod record {
    pub const CIPHERTEXT: &[u8; 4] = b"CTXT";
    pub const SECRET_KEY: &[u8; 4] = b"SECK";
    pub const SHARE: &[u8; 4] = b"SHAR";
    pub const MODEL: &[u8; 4] = b"MODL";
    pub const SHADOW: &[u8; 4] = b"SHDW";
    pub const FILTER: &[u8; 4] = b"FLTR";
}

pub fn write_preamble<W: Write>(w: &mut W, record_type: &[u8; 4]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(record_type)?;
    Ok(())
}

pub fn read_preamble<R: Read>(r: &mut R, expect_type: &[u8; 4]) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CkksError::Framing("bad magic".into()));
    }
    let mut ver = [0u8; 2];
    r.read_exact(&mut ver)?;
    if u16::from_le_bytes(ver) != FORMAT_VERSION {
        return Err(CkksError::Framing(format!(
            "unsupported format version {}",
            u16::from_le_bytes(ver)
        )));
    }
    let mut ty = [0u8; 4];
    r.read_exact(&mut ty)?;
    if &ty != expect_type {
        return Err(CkksError::Framing(format!(
            "record type {:?}, expected {:?}",
            String::from_utf8_lossy(&ty),
            String::from_utf8_lossy(expect_type)
        )));
    }
    Ok(())
}

pub fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    write_u64(w, bytes.len() as u64)?;
    w.write_all(bytes)?;
    Ok(())
}

pub fn read_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let len = read_u64(r)? as usize;
    if len > (1 << 33) {
        return Err(CkksError::Framing(format!("unreasonable byte length {len}")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    write_bytes(w, s.as_bytes())
}

pub fn read_string<R: Read>(r: &mut R) -> Result<String> {
    String::from_utf8(read_bytes(r)?).map_err(|_| CkksError::Framing("invalid utf-8".into()))
}

/// Ring-object sub-header as specified: logN, level, scale-log, prime count,
/// then the exact f64 scale.
pub fn write_ring_header<W: Write>(
    w: &mut W,
    params: &CkksParams,
    level: usize,
    scale: f64,
) -> Result<()> {
    w.write_all(&[
        params.log_n,
        level as u8,
        scale.log2().round().clamp(0.0, 255.0) as u8,
        (level + 1) as u8,
    ])?;
    write_f64(w, scale)?;
    Ok(())
}

pub struct RingHeader {
    pub log_n: u8,
    pub level: usize,
    pub scale: f64,
    pub prime_count: usize,
}

pub fn read_ring_header<R: Read>(r: &mut R) -> Result<RingHeader> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    let scale = read_f64(r)?;
    Ok(RingHeader {
        log_n: b[0],
        level: b[1] as usize,
        scale,
        prime_count: b[3] as usize,
    })
}

pub fn write_poly<W: Write>(w: &mut W, poly: &RnsPoly) -> Result<()> {
    for limb in &poly.limbs {
        for &c in limb {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_poly<R: Read>(r: &mut R, n: usize, num_limbs: usize) -> Result<RnsPoly> {
    let mut limbs = Vec::with_capacity(num_limbs);
    for _ in 0..num_limbs {
        let mut limb = vec![0u64; n];
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf)?;
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            limb[i] = u64::from_le_bytes(chunk.try_into().expect("chunk size"));
        }
        limbs.push(limb);
    }
    Ok(RnsPoly { n, limbs })
}

pub fn write_ciphertext<W: Write>(w: &mut W, params: &CkksParams, ct: &Ciphertext) -> Result<()> {
    write_preamble(w, record::CIPHERTEXT)?;
    write_ring_header(w, params, ct.level, ct.scale)?;
    write_poly(w, &ct.c0)?;
    write_poly(w, &ct.c1)?;
    Ok(())
}

pub fn read_ciphertext<R: Read>(r: &mut R, params: &CkksParams) -> Result<Ciphertext> {
    read_preamble(r, record::CIPHERTEXT)?;
    let h = read_ring_header(r)?;
    if h.log_n != params.log_n {
        return Err(CkksError::Framing(format!(
            "ciphertext logN {} does not match params logN {}",
            h.log_n, params.log_n
        )));
    }
    let c0 = read_poly(r, params.n, h.prime_count)?;
    let c1 = read_poly(r, params.n, h.prime_count)?;
    Ok(Ciphertext { c0, c1, level: h.level, scale: h.scale })
}

/// Serialized size in bytes of one ring object body (no headers).
pub fn poly_wire_bytes(n: usize, num_limbs: usize) -> usize {
    n * num_limbs * 8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{decrypt_values, encrypt_values, Context};
    use crate::key::KeyMaterial;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn ciphertext_roundtrip_bitexact() {
        let params = crate::params::CkksParams::custom(8, 2).unwrap();
        let ctx = Context::new(params);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let km = KeyMaterial::generate(&ctx.params, &[], &mut rng);
        let v: Vec<f64> = (0..ctx.params.slots).map(|i| (i as f64).sin()).collect();
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();

        let mut buf = Vec::new();
        write_ciphertext(&mut buf, &ctx.params, &ct).unwrap();
        let back = read_ciphertext(&mut &buf[..], &ctx.params).unwrap();
        assert_eq!(back.c0, ct.c0);
        assert_eq!(back.c1, ct.c1);
        assert_eq!(back.level, ct.level);
        assert_eq!(back.scale, ct.scale);
        let out = decrypt_values(&ctx, &km.secret, &back);
        assert!((out[1] - v[1]).abs() < 1e-3);
    }

    #[test]
    fn wrong_record_type_rejected() {
        let mut buf = Vec::new();
        write_preamble(&mut buf, record::MODEL).unwrap();
        let err = read_preamble(&mut &buf[..], record::CIPHERTEXT);
        assert!(matches!(err, Err(CkksError::Framing(_))));
    }
}
