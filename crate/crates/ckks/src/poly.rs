//! RNS ring elements. Limbs hold the residues of one polynomial modulo each
//! chain prime. Ciphertext and key material keep their limbs in evaluation
//! (NTT) order; coefficient order appears only transiently inside rescale,
//! key switching and automorphisms.

use crate::params::CkksParams;
use crate::zq::{add_mod, inv_mod, mul_mod, sub_mod};

#[derive(Debug, Clone, PartialEq)]
pub struct RnsPoly {
    pub n: usize,
    /// limbs[i] is the residue polynomial mod modulus_chain[i].
    pub limbs: Vec<Vec<u64>>,
}

impl RnsPoly {
    pub fn zero(n: usize, num_limbs: usize) -> Self {
        Self { n, limbs: vec![vec![0u64; n]; num_limbs] }
    }

    pub fn level(&self) -> usize {
        self.limbs.len() - 1
    }

    /// Reduce signed coefficients into every prime and move to eval order.
    pub fn from_signed_coeffs(coeffs: &[i64], params: &CkksParams, level: usize) -> Self {
        let n = params.n;
        debug_assert_eq!(coeffs.len(), n);
        let mut limbs = Vec::with_capacity(level + 1);
        for idx in 0..=level {
            let q = params.prime(idx);
            let mut limb: Vec<u64> = coeffs.iter().map(|&c| c.rem_euclid(q as i64) as u64).collect();
            params.table(idx).forward(&mut limb);
            limbs.push(limb);
        }
        Self { n, limbs }
    }

    /// Limbs back in coefficient order (all of them).
    pub fn to_coeff_limbs(&self, params: &CkksParams) -> Vec<Vec<u64>> {
        let mut out = self.limbs.clone();
        for (idx, limb) in out.iter_mut().enumerate() {
            params.table(idx).inverse(limb);
        }
        out
    }

    pub fn add_assign(&mut self, rhs: &Self, params: &CkksParams) {
        debug_assert_eq!(self.limbs.len(), rhs.limbs.len());
        for (idx, (a, b)) in self.limbs.iter_mut().zip(&rhs.limbs).enumerate() {
            let q = params.prime(idx);
            for (x, &y) in a.iter_mut().zip(b) {
                *x = add_mod(*x, y, q);
            }
        }
    }

    pub fn sub_assign(&mut self, rhs: &Self, params: &CkksParams) {
        debug_assert_eq!(self.limbs.len(), rhs.limbs.len());
        for (idx, (a, b)) in self.limbs.iter_mut().zip(&rhs.limbs).enumerate() {
            let q = params.prime(idx);
            for (x, &y) in a.iter_mut().zip(b) {
                *x = sub_mod(*x, y, q);
            }
        }
    }

    pub fn negate(&mut self, params: &CkksParams) {
        for (idx, a) in self.limbs.iter_mut().enumerate() {
            let q = params.prime(idx);
            for x in a.iter_mut() {
                *x = if *x == 0 { 0 } else { q - *x };
            }
        }
    }

    /// Pointwise product in eval order.
    pub fn mul(&self, rhs: &Self, params: &CkksParams) -> Self {
        debug_assert_eq!(self.limbs.len(), rhs.limbs.len());
        let limbs = self
            .limbs
            .iter()
            .zip(&rhs.limbs)
            .enumerate()
            .map(|(idx, (a, b))| {
                let q = params.prime(idx);
                a.iter().zip(b).map(|(&x, &y)| mul_mod(x, y, q)).collect()
            })
            .collect();
        Self { n: self.n, limbs }
    }

    pub fn mul_acc(&mut self, a: &Self, b: &Self, params: &CkksParams) {
        debug_assert_eq!(a.limbs.len(), b.limbs.len());
        debug_assert_eq!(self.limbs.len(), a.limbs.len());
        for idx in 0..self.limbs.len() {
            let q = params.prime(idx);
            let dst = &mut self.limbs[idx];
            for ((x, &u), &v) in dst.iter_mut().zip(&a.limbs[idx]).zip(&b.limbs[idx]) {
                *x = add_mod(*x, mul_mod(u, v, q), q);
            }
        }
    }

    /// Drop limbs above `level` (modulus reduction; plaintext and scale are
    /// unchanged).
    pub fn drop_to_level(&mut self, level: usize) {
        self.limbs.truncate(level + 1);
    }

    /// Exact RNS division by the top prime with centered rounding: level
    /// decreases by one, the encoded scale divides by q_top.
    pub fn rescale(&self, params: &CkksParams) -> Self {
        let l = self.level();
        assert!(l >= 1, "rescale requires level >= 1");
        let q_top = params.prime(l);
        let mut top = self.limbs[l].clone();
        params.table(l).inverse(&mut top);

        let half = q_top / 2;
        let mut limbs = Vec::with_capacity(l);
        for idx in 0..l {
            let q = params.prime(idx);
            let qt_inv = inv_mod(q_top % q, q);
            // delta = centered(top) mod q, in coefficient order
            let mut delta: Vec<u64> = top
                .iter()
                .map(|&c| {
                    if c > half {
                        // c - q_top is negative
                        (q - ((q_top - c) % q)) % q
                    } else {
                        c % q
                    }
                })
                .collect();
            params.table(idx).forward(&mut delta);
            let limb: Vec<u64> = self.limbs[idx]
                .iter()
                .zip(&delta)
                .map(|(&x, &d)| mul_mod(sub_mod(x, d, q), qt_inv, q))
                .collect();
            limbs.push(limb);
        }
        Self { n: self.n, limbs }
    }

    /// Apply the Galois automorphism X -> X^g (coefficient-order permutation
    /// with negacyclic sign), staying in eval order externally.
    pub fn automorphism(&self, g: usize, params: &CkksParams) -> Self {
        let n = self.n;
        let two_n = 2 * n;
        let mut limbs = Vec::with_capacity(self.limbs.len());
        for (idx, limb) in self.limbs.iter().enumerate() {
            let q = params.prime(idx);
            let mut coeffs = limb.clone();
            params.table(idx).inverse(&mut coeffs);
            let mut out = vec![0u64; n];
            for (i, &c) in coeffs.iter().enumerate() {
                let j = (i * g) % two_n;
                if j < n {
                    out[j] = c;
                } else {
                    out[j - n] = if c == 0 { 0 } else { q - c };
                }
            }
            params.table(idx).forward(&mut out);
            limbs.push(out);
        }
        Self { n, limbs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CkksParams;

    #[test]
    fn rescale_divides_constants() {
        // A constant polynomial c*q_top rescales to the constant c.
        let params = CkksParams::custom(8, 2).unwrap();
        let l = params.max_level;
        let q_top = params.prime(l);
        let c = 12345i64;
        let mut coeffs = vec![0i64; params.n];
        coeffs[0] = c * q_top as i64;
        let p = RnsPoly::from_signed_coeffs(&coeffs, &params, l);
        let r = p.rescale(&params);
        assert_eq!(r.level(), l - 1);
        let back = r.to_coeff_limbs(&params);
        for (idx, limb) in back.iter().enumerate() {
            let q = params.prime(idx);
            assert_eq!(limb[0], (c as u64) % q);
            assert!(limb[1..].iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn automorphism_is_signed_permutation() {
        let params = CkksParams::custom(8, 1).unwrap();
        let n = params.n;
        // X^1 under g: X -> X^g lands on X^g.
        let mut coeffs = vec![0i64; n];
        coeffs[1] = 1;
        let p = RnsPoly::from_signed_coeffs(&coeffs, &params, 0);
        let g = 5usize;
        let out = p.automorphism(g, &params).to_coeff_limbs(&params);
        assert_eq!(out[0][g], 1);
        // X^{n-1} maps to X^{(n-1)g mod 2n} with sign flip when it wraps.
        let mut coeffs = vec![0i64; n];
        coeffs[n - 1] = 1;
        let p = RnsPoly::from_signed_coeffs(&coeffs, &params, 0);
        let out = p.automorphism(g, &params).to_coeff_limbs(&params);
        let j = ((n - 1) * g) % (2 * n);
        let q = params.prime(0);
        if j < n {
            assert_eq!(out[0][j], 1);
        } else {
            assert_eq!(out[0][j - n], q - 1);
        }
    }
}
