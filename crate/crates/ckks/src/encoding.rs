//! Packed-slot encoding via the canonical embedding.
//!
//! A real vector of up to N/2 values maps to a ring element whose evaluations
//! at the odd powers ζ^{5^j} carry the slots. The special FFT follows the
//! classic HEAAN index scheme (rotation group generated by 5 mod 2N), which
//! makes slot rotation correspond to the automorphism X -> X^{5^k}.

use crate::error::{CkksError, Result};
use crate::params::CkksParams;
use crate::poly::RnsPoly;

#[derive(Debug, Clone)]
pub struct Plaintext {
    pub poly: RnsPoly,
    pub level: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cpx {
    re: f64,
    im: f64,
}

impl Cpx {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Precomputed embedding tables for one ring degree.
#[derive(Debug)]
pub struct Embedding {
    n: usize,
    slots: usize,
    rot_group: Vec<usize>,
    ksi: Vec<Cpx>, // ksi[k] = exp(2*pi*i*k / 2N)
}

impl Embedding {
    pub fn new(n: usize) -> Self {
        let slots = n / 2;
        let m = 2 * n;
        let mut rot_group = Vec::with_capacity(slots);
        let mut five = 1usize;
        for _ in 0..slots {
            rot_group.push(five);
            five = (five * 5) % m;
        }
        let ksi = (0..=m)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Cpx::new(ang.cos(), ang.sin())
            })
            .collect();
        Self { n, slots, rot_group, ksi }
    }

    fn bit_reverse(vals: &mut [Cpx]) {
        let n = vals.len();
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() as usize >> (usize::BITS - bits);
            if i < j {
                vals.swap(i, j);
            }
        }
    }

    /// Coefficient representation -> slot values.
    fn fft_special(&self, vals: &mut [Cpx]) {
        let n = vals.len();
        let m = 2 * self.n;
        Self::bit_reverse(vals);
        let mut len = 2;
        while len <= n {
            let lenh = len >> 1;
            let lenq = len << 2;
            let mut i = 0;
            while i < n {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * (m / lenq);
                    let u = vals[i + j];
                    let v = vals[i + j + lenh].mul(self.ksi[idx]);
                    vals[i + j] = u.add(v);
                    vals[i + j + lenh] = u.sub(v);
                }
                i += len;
            }
            len <<= 1;
        }
    }

    /// Slot values -> coefficient representation.
    fn fft_special_inv(&self, vals: &mut [Cpx]) {
        let n = vals.len();
        let m = 2 * self.n;
        let mut len = n;
        while len >= 2 {
            let lenh = len >> 1;
            let lenq = len << 2;
            let mut i = 0;
            while i < n {
                for j in 0..lenh {
                    let idx = (lenq - (self.rot_group[j] % lenq)) * (m / lenq);
                    let u = vals[i + j].add(vals[i + j + lenh]);
                    let v = vals[i + j].sub(vals[i + j + lenh]).mul(self.ksi[idx]);
                    vals[i + j] = u;
                    vals[i + j + lenh] = v;
                }
                i += len;
            }
            len >>= 1;
        }
        Self::bit_reverse(vals);
        let inv = 1.0 / n as f64;
        for v in vals.iter_mut() {
            v.re *= inv;
            v.im *= inv;
        }
    }

    /// Real slot vector -> signed integer coefficients at the given scale.
    pub fn encode_coeffs(&self, values: &[f64], scale: f64) -> Vec<i64> {
        debug_assert!(values.len() <= self.slots);
        let mut vals = vec![Cpx::new(0.0, 0.0); self.slots];
        for (i, &v) in values.iter().enumerate() {
            vals[i] = Cpx::new(v, 0.0);
        }
        self.fft_special_inv(&mut vals);
        let mut coeffs = vec![0i64; self.n];
        for i in 0..self.slots {
            coeffs[i] = (vals[i].re * scale).round() as i64;
            coeffs[i + self.slots] = (vals[i].im * scale).round() as i64;
        }
        coeffs
    }

    /// Signed coefficients -> real slot values at the given scale.
    pub fn decode_coeffs(&self, coeffs: &[i64], scale: f64) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        let inv = 1.0 / scale;
        let mut vals: Vec<Cpx> = (0..self.slots)
            .map(|i| Cpx::new(coeffs[i] as f64 * inv, coeffs[i + self.slots] as f64 * inv))
            .collect();
        self.fft_special(&mut vals);
        vals.iter().map(|c| c.re).collect()
    }
}

/// Encode a real vector (length <= slots, zero-padded) at an arbitrary
/// positive scale and level. The scale is a free real parameter so that
/// kernel code can target exact post-rescale scales.
pub fn encode(
    emb: &Embedding,
    params: &CkksParams,
    values: &[f64],
    level: usize,
    scale: f64,
) -> Result<Plaintext> {
    if values.len() > params.slots {
        return Err(CkksError::TooManySlots { len: values.len(), slots: params.slots });
    }
    let max_abs = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    // Keep |scale * v| comfortably under the level-0 reconstruction bound:
    // decode reads at most two limbs, so coefficients must stay below
    // q_0 * q_1 / 4 (or q_0 / 4 at level 0).
    let bound = if level == 0 {
        params.prime(0) as f64 / 4.0
    } else {
        params.prime(0) as f64 * params.prime(1) as f64 / 4.0
    };
    if max_abs * scale >= bound {
        return Err(CkksError::EncodingRange { max_abs });
    }
    let coeffs = emb.encode_coeffs(values, scale);
    Ok(Plaintext { poly: RnsPoly::from_signed_coeffs(&coeffs, params, level), level, scale })
}

/// Encode `values` cyclically repeated to fill all slots. The replication
/// period must be a power of two so rotations wrap consistently.
pub fn encode_replicated(
    emb: &Embedding,
    params: &CkksParams,
    values: &[f64],
    period: usize,
    level: usize,
    scale: f64,
) -> Result<Plaintext> {
    if values.len() > period || !period.is_power_of_two() || period > params.slots {
        return Err(CkksError::BadReplication { len: period, slots: params.slots });
    }
    let mut full = vec![0.0f64; params.slots];
    for i in 0..params.slots {
        let j = i % period;
        full[i] = if j < values.len() { values[j] } else { 0.0 };
    }
    encode(emb, params, &full, level, scale)
}

/// Decode a plaintext back to the full slot vector.
///
/// Coefficients are reconstructed from the lowest one or two RNS limbs, which
/// is exact while |coefficient| < q_0*q_1/2 (q_0/2 at level 0) -- ample for
/// every circuit here; garbage ciphertexts simply decode to garbage.
pub fn decode(emb: &Embedding, params: &CkksParams, pt: &Plaintext) -> Vec<f64> {
    let coeff_limbs = pt.poly.to_coeff_limbs(params);
    let q0 = params.prime(0);
    let coeffs: Vec<i64> = if coeff_limbs.len() == 1 {
        coeff_limbs[0]
            .iter()
            .map(|&c| if c > q0 / 2 { c as i64 - q0 as i64 } else { c as i64 })
            .collect()
    } else {
        let q1 = params.prime(1);
        let q0_inv_mod_q1 = crate::zq::inv_mod(q0 % q1, q1);
        let q0q1 = q0 as u128 * q1 as u128;
        let half = q0q1 / 2;
        coeff_limbs[0]
            .iter()
            .zip(&coeff_limbs[1])
            .map(|(&c0, &c1)| {
                // Garner lift to x mod q0*q1 with x ≡ c0 (q0), x ≡ c1 (q1)
                let t = crate::zq::mul_mod(crate::zq::sub_mod(c1, c0 % q1, q1), q0_inv_mod_q1, q1);
                let x = c0 as u128 + q0 as u128 * t as u128;
                if x > half {
                    -((q0q1 - x) as f64) as i64
                } else {
                    x as i64
                }
            })
            .collect()
    };
    emb.decode_coeffs(&coeffs, pt.scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_within_1e6() {
        let params = CkksParams::custom(10, 2).unwrap();
        let emb = Embedding::new(params.n);
        let scale = params.scale; // 2^40
        let mut values = vec![0.0f64; params.slots];
        for (i, v) in values.iter_mut().enumerate() {
            *v = ((i * 37 % 101) as f64 / 50.5) - 1.0;
        }
        let pt = encode(&emb, &params, &values, params.max_level, scale).unwrap();
        let back = decode(&emb, &params, &pt);
        let err = values.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        assert!(err < 1e-6, "roundtrip error {err}");
    }

    #[test]
    fn unit_vector_and_constant() {
        let params = CkksParams::custom(9, 1).unwrap();
        let emb = Embedding::new(params.n);
        let mut e0 = vec![0.0; params.slots];
        e0[0] = 1.0;
        let pt = encode(&emb, &params, &e0, 1, params.scale).unwrap();
        let back = decode(&emb, &params, &pt);
        assert!((back[0] - 1.0).abs() < 1e-6);
        assert!(back[1..].iter().all(|&x| x.abs() < 1e-6));

        let c = vec![0.75; params.slots];
        let pt = encode(&emb, &params, &c, 1, params.scale).unwrap();
        let back = decode(&emb, &params, &pt);
        assert!(back.iter().all(|&x| (x - 0.75).abs() < 1e-6));
    }

    #[test]
    fn shorter_vectors_zero_pad() {
        let params = CkksParams::custom(9, 1).unwrap();
        let emb = Embedding::new(params.n);
        let pt = encode(&emb, &params, &[1.0, 2.0], 1, params.scale).unwrap();
        let back = decode(&emb, &params, &pt);
        assert!((back[0] - 1.0).abs() < 1e-6 && (back[1] - 2.0).abs() < 1e-6);
        assert!(back[2..].iter().all(|&x| x.abs() < 1e-6));
    }

    #[test]
    fn oversized_vector_rejected() {
        let params = CkksParams::custom(8, 1).unwrap();
        let emb = Embedding::new(params.n);
        let v = vec![0.0; params.slots + 1];
        assert!(matches!(
            encode(&emb, &params, &v, 1, params.scale),
            Err(CkksError::TooManySlots { .. })
        ));
    }

    #[test]
    fn slot_product_matches_negacyclic_poly_product() {
        // Encoding is a ring homomorphism: slotwise product corresponds to
        // polynomial product mod X^N + 1. Checked against a naive negacyclic
        // multiply on integer coefficients.
        let params = CkksParams::custom(8, 2).unwrap();
        let emb = Embedding::new(params.n);
        let n = params.n;
        // modest scale keeps the integer product inside i64
        let scale = (1u64 << 20) as f64;
        let a: Vec<f64> = (0..params.slots).map(|i| ((i % 7) as f64 - 3.0) / 4.0).collect();
        let b: Vec<f64> = (0..params.slots).map(|i| ((i % 5) as f64 - 2.0) / 3.0).collect();
        let ca = emb.encode_coeffs(&a, scale);
        let cb = emb.encode_coeffs(&b, scale);
        let mut prod = vec![0i128; n];
        for i in 0..n {
            for j in 0..n {
                let p = ca[i] as i128 * cb[j] as i128;
                if i + j < n {
                    prod[i + j] += p;
                } else {
                    prod[i + j - n] -= p;
                }
            }
        }
        let prod_i64: Vec<i64> = prod.iter().map(|&x| x as i64).collect();
        let got = emb.decode_coeffs(&prod_i64, scale * scale);
        for i in 0..params.slots {
            assert!((got[i] - a[i] * b[i]).abs() < 1e-4, "slot {i}: {} vs {}", got[i], a[i] * b[i]);
        }
    }
}
