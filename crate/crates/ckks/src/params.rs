//! Parameter generation: RNS modulus chains of NTT-friendly primes plus an
//! auxiliary key-switching prime, with the two benchmark presets P1 and P2.

use std::sync::Arc;

use crate::error::{CkksError, Result};
use crate::ntt::NttTable;
use crate::zq::{next_ntt_prime, prev_ntt_prime};

/// Security levels from the source material are documentation only; nothing
/// here estimates or enforces them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// logN = 14, 340 modulus bits, L = 11, sigma = 3.19 (~135-bit doc level).
    P1,
    /// logN = 15, 500 modulus bits, L = 12, sigma = 3.19 (~206-bit doc level).
    P2,
}

impl std::str::FromStr for Preset {
    type Err = CkksError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(Preset::P1),
            "P2" => Ok(Preset::P2),
            other => Err(CkksError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug)]
pub struct CkksParams {
    pub log_n: u8,
    pub n: usize,
    pub slots: usize,
    /// q_0 .. q_L, least-significant first. Fresh ciphertexts live at level L
    /// (all primes); rescaling drops the highest remaining prime.
    pub modulus_chain: Vec<u64>,
    /// Bit size used for each chain prime when the chain was generated.
    pub chain_bits: Vec<u8>,
    /// Auxiliary key-switching prime P.
    pub aux_modulus: u64,
    pub aux_modulus_bits: u8,
    pub scale: f64,
    pub scale_log: u8,
    pub max_level: usize,
    pub noise_std_dev: f64,
    pub(crate) ntt: Vec<NttTable>,
    pub(crate) ntt_aux: NttTable,
}

pub type Params = Arc<CkksParams>;

impl CkksParams {
    pub fn preset(p: Preset) -> Result<Params> {
        match p {
            // 32 + 11 * 28 = 340 total modulus bits, 12 primes -> L = 11.
            Preset::P1 => Self::custom_chain(14, 32, 28, 11, 60, 3.19),
            // 56 + 12 * 37 = 500 total modulus bits, 13 primes -> L = 12.
            Preset::P2 => Self::custom_chain(15, 56, 37, 12, 60, 3.19),
        }
    }

    /// Desk-scale custom parameters: a 50-bit base prime plus `depth` scale
    /// primes near 2^40.
    pub fn custom(log_n: u8, depth: usize) -> Result<Params> {
        Self::custom_chain(log_n, 50, 40, depth, 60, 3.19)
    }

    pub fn custom_chain(
        log_n: u8,
        base_bits: u8,
        scale_bits: u8,
        depth: usize,
        aux_bits: u8,
        noise_std_dev: f64,
    ) -> Result<Params> {
        if !(8..=15).contains(&log_n) {
            return Err(CkksError::InvalidRingDegree(log_n));
        }
        if depth < 1 {
            return Err(CkksError::InvalidDepth(depth));
        }
        let n = 1usize << log_n;
        let step = 2 * n as u64; // primes must be 1 mod 2N

        let mut chain = Vec::with_capacity(depth + 1);
        let mut chain_bits = Vec::with_capacity(depth + 1);
        let base = prev_ntt_prime(1u64 << base_bits, step)
            .ok_or(CkksError::PrimeGeneration { bits: base_bits, step })?;
        chain.push(base);
        chain_bits.push(base_bits);

        // Scale primes sit just above 2^scale_bits, keeping scale < q_i and
        // the per-rescale scale drift at ~2N / 2^scale_bits.
        let mut cursor = (1u64 << scale_bits) + 1;
        for _ in 0..depth {
            let p = next_ntt_prime(cursor, step)
                .ok_or(CkksError::PrimeGeneration { bits: scale_bits, step })?;
            cursor = p + 1;
            if chain.contains(&p) {
                return Err(CkksError::PrimeGeneration { bits: scale_bits, step });
            }
            chain.push(p);
            chain_bits.push(scale_bits);
        }

        let scale = (1u64 << scale_bits) as f64;
        let min_prime = *chain.iter().min().expect("nonempty chain");
        if scale >= min_prime as f64 {
            return Err(CkksError::ScaleTooLarge { scale_log: scale_bits, min_prime });
        }

        let aux = prev_ntt_prime(1u64 << aux_bits, step)
            .ok_or(CkksError::PrimeGeneration { bits: aux_bits, step })?;

        let ntt = chain.iter().map(|&q| NttTable::new(q, n)).collect();
        let ntt_aux = NttTable::new(aux, n);

        Ok(Arc::new(CkksParams {
            log_n,
            n,
            slots: n / 2,
            modulus_chain: chain,
            chain_bits,
            aux_modulus: aux,
            aux_modulus_bits: aux_bits,
            scale,
            scale_log: scale_bits,
            max_level: depth,
            noise_std_dev,
            ntt,
            ntt_aux,
        }))
    }

    /// Sum of the nominal bit sizes of the chain primes.
    pub fn total_modulus_bits(&self) -> u32 {
        self.chain_bits.iter().map(|&b| u32::from(b)).sum()
    }

    pub fn prime(&self, idx: usize) -> u64 {
        self.modulus_chain[idx]
    }

    pub(crate) fn table(&self, idx: usize) -> &NttTable {
        &self.ntt[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zq::is_prime;

    #[test]
    fn preset_p1_matches_published_values() {
        let p = CkksParams::preset(Preset::P1).unwrap();
        assert_eq!(p.log_n, 14);
        assert_eq!(p.total_modulus_bits(), 340);
        assert_eq!(p.max_level, 11);
        assert!((p.noise_std_dev - 3.19).abs() < 1e-12);
        assert_eq!(p.modulus_chain.len(), 12);
    }

    #[test]
    fn preset_p2_matches_published_values() {
        let p = CkksParams::preset(Preset::P2).unwrap();
        assert_eq!(p.log_n, 15);
        assert_eq!(p.total_modulus_bits(), 500);
        assert_eq!(p.max_level, 12);
    }

    #[test]
    fn custom_chain_primes_satisfy_congruence() {
        let p = CkksParams::custom(12, 4).unwrap();
        assert_eq!(p.modulus_chain.len(), 5);
        for &q in &p.modulus_chain {
            assert!(is_prime(q));
            assert_eq!(q % (1 << 13), 1, "prime {q} not 1 mod 2^13");
            assert!(p.scale < q as f64);
        }
        assert!(is_prime(p.aux_modulus));
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(matches!(CkksParams::custom(7, 2), Err(CkksError::InvalidRingDegree(7))));
        assert!(matches!(CkksParams::custom(12, 0), Err(CkksError::InvalidDepth(0))));
    }
}
