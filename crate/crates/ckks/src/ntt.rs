//! Negacyclic number-theoretic transform over Z_q[X]/(X^N + 1).
//!
//! Forward is Cooley-Tukey decimation-in-time on the 2N-th root ψ, inverse is
//! Gentleman-Sande with ψ^{-1}; both keep the ψ-powers folded into the
//! butterflies so no separate pre/post scaling by powers of ψ is needed.
//! Twiddles are stored in bit-reversed order with Shoup companions.

use crate::zq::{add_mod, inv_mod, mul_mod_shoup, primitive_2n_root, shoup_precompute, sub_mod};

#[derive(Debug, Clone)]
pub struct NttTable {
    pub q: u64,
    n: usize,
    psi_rev: Vec<u64>,
    psi_rev_shoup: Vec<u64>,
    ipsi_rev: Vec<u64>,
    ipsi_rev_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    x.reverse_bits() >> (usize::BITS - bits)
}

impl NttTable {
    pub fn new(q: u64, n: usize) -> Self {
        assert!(n.is_power_of_two());
        assert_eq!((q - 1) % (2 * n as u64), 0, "q must be 1 mod 2N");
        let psi = primitive_2n_root(q, n as u64);
        let ipsi = inv_mod(psi, q);
        let bits = n.trailing_zeros();
        let mut psi_rev = vec![0u64; n];
        let mut ipsi_rev = vec![0u64; n];
        let mut p = 1u64;
        let mut ip = 1u64;
        for i in 0..n {
            psi_rev[bit_reverse(i, bits)] = p;
            ipsi_rev[bit_reverse(i, bits)] = ip;
            p = crate::zq::mul_mod(p, psi, q);
            ip = crate::zq::mul_mod(ip, ipsi, q);
        }
        let psi_rev_shoup = psi_rev.iter().map(|&w| shoup_precompute(w, q)).collect();
        let ipsi_rev_shoup = ipsi_rev.iter().map(|&w| shoup_precompute(w, q)).collect();
        let n_inv = inv_mod(n as u64, q);
        Self {
            q,
            n,
            psi_rev,
            psi_rev_shoup,
            ipsi_rev,
            ipsi_rev_shoup,
            n_inv,
            n_inv_shoup: shoup_precompute(n_inv, q),
        }
    }

    /// In-place forward NTT: coefficient order in, evaluation order out.
    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q;
        let mut t = self.n;
        let mut m = 1usize;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let w = self.psi_rev[m + i];
                let ws = self.psi_rev_shoup[m + i];
                let j1 = 2 * i * t;
                for j in j1..j1 + t {
                    let u = a[j];
                    let v = mul_mod_shoup(a[j + t], w, ws, q);
                    a[j] = add_mod(u, v, q);
                    a[j + t] = sub_mod(u, v, q);
                }
            }
            m <<= 1;
        }
    }

    /// In-place inverse NTT: evaluation order in, coefficient order out.
    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q;
        let mut t = 1usize;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            let mut j1 = 0usize;
            for i in 0..h {
                let w = self.ipsi_rev[h + i];
                let ws = self.ipsi_rev_shoup[h + i];
                for j in j1..j1 + t {
                    let u = a[j];
                    let v = a[j + t];
                    a[j] = add_mod(u, v, q);
                    a[j + t] = mul_mod_shoup(sub_mod(u, v, q), w, ws, q);
                }
                j1 += 2 * t;
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = mul_mod_shoup(*x, self.n_inv, self.n_inv_shoup, q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zq::{mul_mod, prev_ntt_prime};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn naive_negacyclic_mul(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
        let n = a.len();
        let mut out = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                let p = mul_mod(a[i], b[j], q);
                let k = i + j;
                if k < n {
                    out[k] = add_mod(out[k], p, q);
                } else {
                    out[k - n] = sub_mod(out[k - n], p, q);
                }
            }
        }
        out
    }

    #[test]
    fn roundtrip_identity() {
        let n = 256;
        let q = prev_ntt_prime(1 << 40, 2 * n as u64).unwrap();
        let table = NttTable::new(q, n);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let orig: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        let mut a = orig.clone();
        table.forward(&mut a);
        table.inverse(&mut a);
        assert_eq!(a, orig);
    }

    #[test]
    fn pointwise_is_negacyclic_mul() {
        let n = 128;
        let q = prev_ntt_prime(1 << 40, 2 * n as u64).unwrap();
        let table = NttTable::new(q, n);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        let b: Vec<u64> = (0..n).map(|_| rng.gen_range(0..q)).collect();
        let expect = naive_negacyclic_mul(&a, &b, q);

        let mut fa = a.clone();
        let mut fb = b.clone();
        table.forward(&mut fa);
        table.forward(&mut fb);
        let mut fc: Vec<u64> = fa.iter().zip(&fb).map(|(&x, &y)| mul_mod(x, y, q)).collect();
        table.inverse(&mut fc);
        assert_eq!(fc, expect);
    }
}
