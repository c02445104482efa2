//! t-out-of-n collaborative decryption for the CKKS secret key: additive
//! ternary shares re-shared through Shamir polynomials over each RNS prime
//! field, with Lagrange reconstruction of t-out-of-t additive keys at
//! decryption time. Message exchange runs through an inspectable in-process
//! mailbox so bandwidth accounting can be cross-checked against the formula.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::Rng;
use thiserror::Error;

use hefl_ckks::cipher::{Ciphertext, Context};
use hefl_ckks::key::{
    sample_gaussian_coeffs, sample_ternary, GaussianSampler, PublicKey, SecretKey,
};
use hefl_ckks::params::CkksParams;
use hefl_ckks::poly::RnsPoly;
use hefl_ckks::zq::{add_mod, inv_mod, mul_mod, pow_mod, sub_mod};
use hefl_ckks::Plaintext;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("invalid threshold config: {0}")]
    InvalidConfig(String),
    #[error("active set of size {have} is below the decryption threshold {need}")]
    ActiveSetTooSmall { have: usize, need: usize },
    #[error("worker {0} is not in the active set")]
    NotInActiveSet(usize),
    #[error("need at least {need} distinct partial decryptions, got {have}")]
    InsufficientPartials { need: usize, have: usize },
    #[error("partial decryptions reference different ciphertexts")]
    CiphertextMismatch,
    #[error("duplicate partial decryption from worker {0}")]
    DuplicatePartial(usize),
}

pub type Result<T> = std::result::Result<T, ThresholdError>;

#[derive(Debug, Clone, Copy)]
pub struct ThresholdConfig {
    pub n: usize,
    pub tau: usize,
    pub collusion_bound: usize,
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.tau < 1 || self.tau > self.n {
            return Err(ThresholdError::InvalidConfig(format!(
                "need 1 <= tau <= n, got tau={} n={}",
                self.tau, self.n
            )));
        }
        if self.tau <= self.collusion_bound {
            return Err(ThresholdError::InvalidConfig(format!(
                "tau={} must exceed the collusion bound {}",
                self.tau, self.collusion_bound
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgKind {
    /// Collective public-key contribution b_i.
    PkShare,
    /// Shamir evaluation S_i(alpha_j) sent from i to j.
    ShamirEval,
    /// Partial decryption broadcast among the active set.
    PartialDec,
}

#[derive(Debug, Clone, Copy)]
pub struct Message {
    pub from: usize,
    /// None = broadcast to the group.
    pub to: Option<usize>,
    pub kind: MsgKind,
    /// Information content in bits (N coefficients at log2(Q_level) bits).
    pub bits: u64,
}

/// In-process message log standing in for the network.
#[derive(Debug, Default)]
pub struct Mailbox {
    log: Mutex<Vec<Message>>,
}

impl Mailbox {
    pub fn post(&self, m: Message) {
        self.log.lock().expect("mailbox poisoned").push(m);
    }

    pub fn messages(&self) -> Vec<Message> {
        self.log.lock().expect("mailbox poisoned").clone()
    }

    pub fn total_bits(&self, kind: MsgKind) -> u64 {
        self.log
            .lock()
            .expect("mailbox poisoned")
            .iter()
            .filter(|m| m.kind == kind)
            .map(|m| m.bits)
            .sum()
    }
}

/// Nominal bit content of one ring element at the given level.
fn poly_info_bits(params: &CkksParams, level: usize) -> u64 {
    let logq: u64 = params.chain_bits[..=level].iter().map(|&b| u64::from(b)).sum();
    params.n as u64 * logq
}

#[derive(Debug, Clone)]
pub struct SecretKeyShare {
    pub worker_id: usize,
    /// This worker's additive key s_i (ternary, same distribution as a
    /// single-party secret).
    pub additive: Vec<i64>,
    /// Evaluations received from every peer: i -> S_i(alpha_j), j = self.
    pub received: BTreeMap<usize, RnsPoly>,
    /// Aggregated Shamir share T(alpha_j) = sum_i S_i(alpha_j).
    pub aggregate: RnsPoly,
    /// Distinct nonzero public point alpha_j.
    pub public_point: u64,
}

#[derive(Debug, Clone)]
pub struct PartialDecryption {
    pub worker_id: usize,
    pub poly: RnsPoly,
    pub smudging_noise_log: u32,
    level: usize,
    ct_tag: u64,
}

fn ciphertext_tag(ct: &Ciphertext) -> u64 {
    // cheap fingerprint to catch accidental mixing of partials
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &c in ct.c1.limbs[0].iter().take(64) {
        h = (h ^ c).wrapping_mul(0x1000_0000_01b3);
    }
    h ^ (ct.level as u64)
}

pub struct ThresholdSetup {
    pub public_key: PublicKey,
    pub shares: Vec<SecretKeyShare>,
    pub config: ThresholdConfig,
    /// Combined secret, retained only for oracle/test use in the simulator.
    pub combined_secret: SecretKey,
}

/// Run the simulated setup: collective public key from additive ternary keys,
/// then Shamir re-sharing of each additive key through the mailbox.
pub fn threshold_setup<R: Rng>(
    ctx: &Context,
    config: ThresholdConfig,
    mailbox: &Mailbox,
    rng: &mut R,
) -> Result<ThresholdSetup> {
    config.validate()?;
    let params = &ctx.params;
    let n_workers = config.n;
    let gauss = GaussianSampler::new(params.noise_std_dev);

    // Distinct nonzero public points; chain primes far exceed n, so the
    // small integers 1..=n stay distinct and invertible in every field.
    let points: Vec<u64> = (1..=n_workers as u64).collect();

    // Additive keys and the collective public key under a common reference a.
    let additive: Vec<Vec<i64>> = (0..n_workers).map(|_| sample_ternary(params.n, rng)).collect();
    let mut combined = vec![0i64; params.n];
    for s in &additive {
        for (c, &x) in combined.iter_mut().zip(s) {
            *c += x;
        }
    }
    let combined_secret = SecretKey::from_signed(combined, params);

    let a = {
        let limbs = (0..=params.max_level)
            .map(|idx| {
                let q = params.prime(idx);
                (0..params.n).map(|_| rng.gen_range(0..q)).collect()
            })
            .collect();
        RnsPoly { n: params.n, limbs }
    };
    let mut b_total = RnsPoly::zero(params.n, params.max_level + 1);
    for (i, s_i) in additive.iter().enumerate() {
        let s_poly = RnsPoly::from_signed_coeffs(s_i, params, params.max_level);
        let e = RnsPoly::from_signed_coeffs(
            &sample_gaussian_coeffs(params.n, &gauss, rng),
            params,
            params.max_level,
        );
        let mut b_i = a.mul(&s_poly, params);
        b_i.negate(params);
        b_i.add_assign(&e, params);
        mailbox.post(Message {
            from: i,
            to: None,
            kind: MsgKind::PkShare,
            bits: poly_info_bits(params, params.max_level),
        });
        b_total.add_assign(&b_i, params);
    }
    let public_key = PublicKey { b: b_total, a };

    // Shamir re-sharing: worker i samples S_i(x) = s_i + sum c_k x^k with
    // ring-element coefficients, arithmetic coefficient-wise per prime field.
    let mut evals: Vec<BTreeMap<usize, RnsPoly>> = vec![BTreeMap::new(); n_workers];
    for (i, s_i) in additive.iter().enumerate() {
        let s_poly = RnsPoly::from_signed_coeffs(s_i, params, params.max_level);
        let coeffs: Vec<RnsPoly> = (1..config.tau)
            .map(|_| {
                let limbs = (0..=params.max_level)
                    .map(|idx| {
                        let q = params.prime(idx);
                        (0..params.n).map(|_| rng.gen_range(0..q)).collect()
                    })
                    .collect();
                RnsPoly { n: params.n, limbs }
            })
            .collect();
        for (j, &alpha) in points.iter().enumerate() {
            // S_i(alpha) = s_i + sum_k c_k * alpha^k, per prime field
            let mut eval = s_poly.clone();
            for (idx, limb) in eval.limbs.iter_mut().enumerate() {
                let q = params.prime(idx);
                for (k, c) in coeffs.iter().enumerate() {
                    let apow = pow_mod(alpha, (k + 1) as u64, q);
                    for (x, &ck) in limb.iter_mut().zip(&c.limbs[idx]) {
                        *x = add_mod(*x, mul_mod(ck, apow, q), q);
                    }
                }
            }
            if i != j {
                mailbox.post(Message {
                    from: i,
                    to: Some(j),
                    kind: MsgKind::ShamirEval,
                    bits: poly_info_bits(params, params.max_level),
                });
            }
            evals[j].insert(i, eval);
        }
    }

    let shares = (0..n_workers)
        .map(|j| {
            let mut aggregate = RnsPoly::zero(params.n, params.max_level + 1);
            for eval in evals[j].values() {
                aggregate.add_assign(eval, params);
            }
            SecretKeyShare {
                worker_id: j,
                additive: additive[j].clone(),
                received: evals[j].clone(),
                aggregate,
                public_point: points[j],
            }
        })
        .collect();

    Ok(ThresholdSetup { public_key, shares, config, combined_secret })
}

/// Lagrange coefficient at zero for point alpha_j over the active points,
/// computed in each prime field of the chain up to `level`.
fn lagrange_at_zero(
    params: &CkksParams,
    level: usize,
    active_points: &[u64],
    j_point: u64,
) -> Vec<u64> {
    (0..=level)
        .map(|idx| {
            let q = params.prime(idx);
            let mut num = 1u64;
            let mut den = 1u64;
            for &alpha in active_points {
                if alpha == j_point {
                    continue;
                }
                num = mul_mod(num, alpha % q, q);
                den = mul_mod(den, sub_mod(alpha % q, j_point % q, q), q);
            }
            mul_mod(num, inv_mod(den, q), q)
        })
        .collect()
}

/// Default smudging noise: 40 bits below the ciphertext scale, floored at
/// 2^3 so the partials stay statistically hiding even for small scales.
pub fn default_smudging_log(scale: f64) -> u32 {
    (scale.log2() - 40.0).max(3.0) as u32
}

/// One worker's lambda-weighted contribution <c_1, s'_j> plus smudging noise.
pub fn partial_decrypt<R: Rng>(
    ctx: &Context,
    share: &SecretKeyShare,
    active_set: &[usize],
    ct: &Ciphertext,
    config: &ThresholdConfig,
    rng: &mut R,
) -> Result<PartialDecryption> {
    if active_set.len() < config.tau {
        return Err(ThresholdError::ActiveSetTooSmall {
            have: active_set.len(),
            need: config.tau,
        });
    }
    if !active_set.contains(&share.worker_id) {
        return Err(ThresholdError::NotInActiveSet(share.worker_id));
    }
    Ok(partial_decrypt_unchecked(ctx, share, active_set, ct, rng))
}

/// The raw share computation without quorum validation. Exposed so failure
/// analyses (too-few shares must decrypt to garbage) can exercise it.
pub fn partial_decrypt_unchecked<R: Rng>(
    ctx: &Context,
    share: &SecretKeyShare,
    active_set: &[usize],
    ct: &Ciphertext,
    rng: &mut R,
) -> PartialDecryption {
    let params = &ctx.params;
    let level = ct.level;
    let active_points: Vec<u64> = active_set.iter().map(|&w| w as u64 + 1).collect();
    let lambda = lagrange_at_zero(params, level, &active_points, share.public_point);

    // s'_j = lambda_j * T(alpha_j), truncated to the ciphertext level
    let mut s_prime = share.aggregate.clone();
    s_prime.drop_to_level(level);
    for (idx, limb) in s_prime.limbs.iter_mut().enumerate() {
        let q = params.prime(idx);
        let l = lambda[idx];
        for x in limb.iter_mut() {
            *x = mul_mod(*x, l, q);
        }
    }

    let mut poly = ct.c1.mul(&s_prime, params);
    let smudging_log = default_smudging_log(ct.scale);
    let smudge_sigma = (1u64 << smudging_log) as f64;
    let smudge = GaussianSampler::new(smudge_sigma);
    let e = RnsPoly::from_signed_coeffs(
        &sample_gaussian_coeffs(params.n, &smudge, rng),
        params,
        level,
    );
    poly.add_assign(&e, params);

    PartialDecryption {
        worker_id: share.worker_id,
        poly,
        smudging_noise_log: smudging_log,
        level,
        ct_tag: ciphertext_tag(ct),
    }
}

/// Combine >= tau distinct partials into the plaintext.
pub fn combine(
    ctx: &Context,
    partials: &[PartialDecryption],
    ct: &Ciphertext,
    config: &ThresholdConfig,
) -> Result<Plaintext> {
    let mut seen = std::collections::BTreeSet::new();
    for p in partials {
        if !seen.insert(p.worker_id) {
            return Err(ThresholdError::DuplicatePartial(p.worker_id));
        }
        if p.ct_tag != ciphertext_tag(ct) || p.level != ct.level {
            return Err(ThresholdError::CiphertextMismatch);
        }
    }
    if partials.len() < config.tau {
        return Err(ThresholdError::InsufficientPartials {
            need: config.tau,
            have: partials.len(),
        });
    }
    Ok(combine_unchecked(ctx, partials, ct))
}

/// c_0 + sum of partials, with no quorum validation (analysis helper).
pub fn combine_unchecked(
    ctx: &Context,
    partials: &[PartialDecryption],
    ct: &Ciphertext,
) -> Plaintext {
    let params = &ctx.params;
    let mut m = ct.c0.clone();
    for p in partials {
        m.add_assign(&p.poly, params);
    }
    Plaintext { poly: m, level: ct.level, scale: ct.scale }
}

/// Full collaborative decryption among `active_set`, posting the partial
/// broadcasts to the mailbox (tau * (tau - 1) transmissions).
pub fn collaborative_decrypt<R: Rng>(
    ctx: &Context,
    setup: &ThresholdSetup,
    active_set: &[usize],
    ct: &Ciphertext,
    mailbox: &Mailbox,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let partials: Vec<PartialDecryption> = active_set
        .iter()
        .map(|&w| partial_decrypt(ctx, &setup.shares[w], active_set, ct, &setup.config, rng))
        .collect::<Result<_>>()?;
    for p in &partials {
        for &other in active_set {
            if other != p.worker_id {
                mailbox.post(Message {
                    from: p.worker_id,
                    to: Some(other),
                    kind: MsgKind::PartialDec,
                    bits: poly_info_bits(&ctx.params, ct.level),
                });
            }
        }
    }
    let pt = combine(ctx, &partials, ct, &setup.config)?;
    Ok(ctx.decode(&pt))
}

/// Collaborative-decryption bandwidth in bits:
/// tau * (tau - 1) * N * log2(Q) * ciphertext_count.
pub fn decrypt_bandwidth_bits(log_n: u32, log2_q: u32, tau: u64, ciphertext_count: u64) -> u64 {
    let n = 1u64 << log_n;
    tau * tau.saturating_sub(1) * n * u64::from(log2_q) * ciphertext_count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_formula_reference_row() {
        // logN=14, log2Q=60, tau=10, one ciphertext: 88,473,600 bits
        let bits = decrypt_bandwidth_bits(14, 60, 10, 1);
        assert_eq!(bits, 88_473_600);
        // 11.06 MB in bytes
        assert_eq!(bits / 8, 11_059_200);
        // tau = 1: nothing to exchange
        assert_eq!(decrypt_bandwidth_bits(14, 60, 1, 1), 0);
        // linear in N: logN=15 doubles the logN=14 value
        assert_eq!(decrypt_bandwidth_bits(15, 60, 10, 1), 2 * bits);
    }

    #[test]
    fn bandwidth_monotone() {
        let base = decrypt_bandwidth_bits(13, 50, 5, 2);
        assert!(decrypt_bandwidth_bits(14, 50, 5, 2) > base);
        assert!(decrypt_bandwidth_bits(13, 60, 5, 2) > base);
        assert!(decrypt_bandwidth_bits(13, 50, 6, 2) > base);
        assert!(decrypt_bandwidth_bits(13, 50, 5, 3) > base);
    }

    #[test]
    fn config_validation() {
        assert!(ThresholdConfig { n: 5, tau: 3, collusion_bound: 2 }.validate().is_ok());
        // tau = 1 rejected when the collusion bound is 1
        assert!(ThresholdConfig { n: 5, tau: 1, collusion_bound: 1 }.validate().is_err());
        assert!(ThresholdConfig { n: 5, tau: 6, collusion_bound: 0 }.validate().is_err());
    }
}
