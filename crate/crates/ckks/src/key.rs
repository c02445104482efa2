//! Key material: ternary secret, RLWE public key, and RNS key-switching keys
//! (one digit per chain prime, auxiliary modulus P) used for relinearization
//! and rotations.

use std::collections::BTreeMap;

use rand::Rng;

use crate::params::CkksParams;
use crate::poly::RnsPoly;
use crate::zq::{add_mod, inv_mod, mul_mod, sub_mod};

/// Discrete Gaussian over Z via a cumulative table (CDT), tail cut at 8 sigma.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    support: Vec<i64>,
    cdf: Vec<f64>,
}

impl GaussianSampler {
    pub fn new(sigma: f64) -> Self {
        let tail = (8.0 * sigma).ceil() as i64;
        let mut support = Vec::new();
        let mut weights = Vec::new();
        for x in -tail..=tail {
            support.push(x);
            weights.push((-((x * x) as f64) / (2.0 * sigma * sigma)).exp());
        }
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Self { support, cdf }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c < u).min(self.support.len() - 1);
        self.support[idx]
    }
}

pub fn sample_ternary<R: Rng>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-1i64..=1)).collect()
}

pub fn sample_gaussian_coeffs<R: Rng>(n: usize, g: &GaussianSampler, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| g.sample(rng)).collect()
}

/// Ring element carried on the extended basis {q_0..q_L, P}, eval order.
#[derive(Debug, Clone)]
pub struct ExtPoly {
    pub chain: RnsPoly,
    pub aux: Vec<u64>,
}

impl ExtPoly {
    fn zero(params: &CkksParams) -> Self {
        Self { chain: RnsPoly::zero(params.n, params.max_level + 1), aux: vec![0; params.n] }
    }

    fn from_signed(coeffs: &[i64], params: &CkksParams) -> Self {
        let chain = RnsPoly::from_signed_coeffs(coeffs, params, params.max_level);
        let p = params.aux_modulus;
        let mut aux: Vec<u64> = coeffs.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect();
        params.ntt_aux.forward(&mut aux);
        Self { chain, aux }
    }

    fn uniform<R: Rng>(params: &CkksParams, rng: &mut R) -> Self {
        let n = params.n;
        let limbs = (0..=params.max_level)
            .map(|idx| {
                let q = params.prime(idx);
                (0..n).map(|_| rng.gen_range(0..q)).collect()
            })
            .collect();
        let p = params.aux_modulus;
        let aux = (0..n).map(|_| rng.gen_range(0..p)).collect();
        Self { chain: RnsPoly { n, limbs }, aux }
    }
}

/// One (b_j, a_j) pair per decomposition digit.
#[derive(Debug, Clone)]
pub struct KeySwitchKey {
    pub digits: Vec<(ExtPoly, ExtPoly)>,
}

#[derive(Debug, Clone)]
pub struct SecretKey {
    /// Ternary coefficients (sum of ternaries under threshold setup).
    pub signed: Vec<i64>,
    /// Eval-order residues at full level, for decryption.
    pub poly: RnsPoly,
}

impl SecretKey {
    pub fn from_signed(signed: Vec<i64>, params: &CkksParams) -> Self {
        let poly = RnsPoly::from_signed_coeffs(&signed, params, params.max_level);
        Self { signed, poly }
    }
}

#[derive(Debug, Clone)]
pub struct PublicKey {
    pub b: RnsPoly,
    pub a: RnsPoly,
}

/// Evaluation keys a server needs; contains no secret.
#[derive(Debug)]
pub struct EvalKeys {
    pub relin: KeySwitchKey,
    pub rotations: BTreeMap<usize, KeySwitchKey>,
}

#[derive(Debug)]
pub struct KeyMaterial {
    pub secret: SecretKey,
    pub public: PublicKey,
    pub eval: EvalKeys,
}

/// Galois element for a left rotation by `step`: X -> X^{5^step mod 2N}.
pub fn galois_element(step: usize, n: usize) -> usize {
    let m = 2 * n;
    let mut g = 1usize;
    for _ in 0..step {
        g = (g * 5) % m;
    }
    g
}

/// Apply X -> X^g to signed coefficients (exact, for secret keys).
fn automorphism_signed(coeffs: &[i64], g: usize) -> Vec<i64> {
    let n = coeffs.len();
    let two_n = 2 * n;
    let mut out = vec![0i64; n];
    for (i, &c) in coeffs.iter().enumerate() {
        let j = (i * g) % two_n;
        if j < n {
            out[j] = c;
        } else {
            out[j - n] = -c;
        }
    }
    out
}

impl KeyMaterial {
    /// Fresh ternary secret plus public/evaluation keys. `rot_steps` lists the
    /// slot-rotation steps that kernels will use.
    pub fn generate<R: Rng>(params: &CkksParams, rot_steps: &[usize], rng: &mut R) -> Self {
        let secret = sample_ternary(params.n, rng);
        Self::from_signed_secret(params, secret, rot_steps, rng)
    }

    pub fn from_signed_secret<R: Rng>(
        params: &CkksParams,
        signed: Vec<i64>,
        rot_steps: &[usize],
        rng: &mut R,
    ) -> Self {
        let gauss = GaussianSampler::new(params.noise_std_dev);
        let secret = SecretKey::from_signed(signed, params);
        let public = gen_public_key(params, &secret, &gauss, rng);
        let relin = gen_relin_key(params, &secret, &gauss, rng);
        let mut rotations = BTreeMap::new();
        for &step in rot_steps {
            if step == 0 || rotations.contains_key(&step) {
                continue;
            }
            rotations.insert(step, gen_rotation_key(params, &secret, step, &gauss, rng));
        }
        KeyMaterial { secret, public, eval: EvalKeys { relin, rotations } }
    }

    /// Add rotation keys after the fact (e.g. once kernel shapes are known).
    pub fn ensure_rotation_keys<R: Rng>(
        &mut self,
        params: &CkksParams,
        steps: &[usize],
        rng: &mut R,
    ) {
        let gauss = GaussianSampler::new(params.noise_std_dev);
        for &step in steps {
            if step == 0 || self.eval.rotations.contains_key(&step) {
                continue;
            }
            self.eval
                .rotations
                .insert(step, gen_rotation_key(params, &self.secret, step, &gauss, rng));
        }
    }
}

pub fn gen_public_key<R: Rng>(
    params: &CkksParams,
    sk: &SecretKey,
    gauss: &GaussianSampler,
    rng: &mut R,
) -> PublicKey {
    let n = params.n;
    let level = params.max_level;
    let a = {
        let limbs = (0..=level)
            .map(|idx| {
                let q = params.prime(idx);
                (0..n).map(|_| rng.gen_range(0..q)).collect()
            })
            .collect();
        RnsPoly { n, limbs }
    };
    let e = RnsPoly::from_signed_coeffs(&sample_gaussian_coeffs(n, gauss, rng), params, level);
    // b = -a*s + e
    let mut b = a.mul(&sk.poly, params);
    b.negate(params);
    b.add_assign(&e, params);
    PublicKey { b, a }
}

/// Key-switch key taking a ciphertext component decryptable under `target`
/// back to `sk`. Digit j carries P*target on its own limb.
fn gen_ksk<R: Rng>(
    params: &CkksParams,
    sk: &SecretKey,
    target: &RnsPoly,
    gauss: &GaussianSampler,
    rng: &mut R,
) -> KeySwitchKey {
    let n = params.n;
    let sk_ext = ExtPoly::from_signed(&sk.signed, params);
    let digits = (0..=params.max_level)
        .map(|j| {
            let a = ExtPoly::uniform(params, rng);
            let e_signed = sample_gaussian_coeffs(n, gauss, rng);
            let e = ExtPoly::from_signed(&e_signed, params);
            // b = -a*s + e on the extended basis
            let mut b = ExtPoly::zero(params);
            b.chain = a.chain.mul(&sk_ext.chain, params);
            b.chain.negate(params);
            b.chain.add_assign(&e.chain, params);
            let p_aux = params.aux_modulus;
            for (x, (&ai, &si)) in b.aux.iter_mut().zip(a.aux.iter().zip(&sk_ext.aux)) {
                let prod = mul_mod(ai, si, p_aux);
                *x = if prod == 0 { 0 } else { p_aux - prod };
            }
            for (x, &ei) in b.aux.iter_mut().zip(&e.aux) {
                *x = add_mod(*x, ei, p_aux);
            }
            // + (P mod q_j) * target on limb j only
            let qj = params.prime(j);
            let p_mod = params.aux_modulus % qj;
            for (x, &t) in b.chain.limbs[j].iter_mut().zip(&target.limbs[j]) {
                *x = add_mod(*x, mul_mod(p_mod, t, qj), qj);
            }
            (b, a)
        })
        .collect();
    KeySwitchKey { digits }
}

pub fn gen_relin_key<R: Rng>(
    params: &CkksParams,
    sk: &SecretKey,
    gauss: &GaussianSampler,
    rng: &mut R,
) -> KeySwitchKey {
    let s2 = sk.poly.mul(&sk.poly, params);
    gen_ksk(params, sk, &s2, gauss, rng)
}

pub fn gen_rotation_key<R: Rng>(
    params: &CkksParams,
    sk: &SecretKey,
    step: usize,
    gauss: &GaussianSampler,
    rng: &mut R,
) -> KeySwitchKey {
    let g = galois_element(step, params.n);
    let s_rot = automorphism_signed(&sk.signed, g);
    let target = RnsPoly::from_signed_coeffs(&s_rot, params, params.max_level);
    gen_ksk(params, sk, &target, gauss, rng)
}

/// Switch `c` (eval order, any level) to the base key: returns (u0, u1) with
/// u0 + u1*s = c*target + small noise.
pub fn key_switch(c: &RnsPoly, ksk: &KeySwitchKey, params: &CkksParams) -> (RnsPoly, RnsPoly) {
    let l = c.level();
    let n = c.n;
    let coeff_digits = c.to_coeff_limbs(params);

    let mut acc0_chain = RnsPoly::zero(n, l + 1);
    let mut acc1_chain = RnsPoly::zero(n, l + 1);
    let mut acc0_aux = vec![0u64; n];
    let mut acc1_aux = vec![0u64; n];
    let p_aux = params.aux_modulus;

    for (j, digit) in coeff_digits.iter().enumerate() {
        let (ref b, ref a) = ksk.digits[j];
        // Lift the digit (< q_j) into every modulus and multiply-accumulate.
        for t in 0..=l {
            let q = params.prime(t);
            let mut lifted: Vec<u64> = digit.iter().map(|&d| d % q).collect();
            params.table(t).forward(&mut lifted);
            let acc0 = &mut acc0_chain.limbs[t];
            let acc1 = &mut acc1_chain.limbs[t];
            for i in 0..n {
                acc0[i] = add_mod(acc0[i], mul_mod(lifted[i], b.chain.limbs[t][i], q), q);
                acc1[i] = add_mod(acc1[i], mul_mod(lifted[i], a.chain.limbs[t][i], q), q);
            }
        }
        let mut lifted: Vec<u64> = digit.iter().map(|&d| d % p_aux).collect();
        params.ntt_aux.forward(&mut lifted);
        for i in 0..n {
            acc0_aux[i] = add_mod(acc0_aux[i], mul_mod(lifted[i], b.aux[i], p_aux), p_aux);
            acc1_aux[i] = add_mod(acc1_aux[i], mul_mod(lifted[i], a.aux[i], p_aux), p_aux);
        }
    }

    (mod_down_by_aux(acc0_chain, acc0_aux, params), mod_down_by_aux(acc1_chain, acc1_aux, params))
}

/// Divide by P with centered rounding: (x - [x]_P) / P on each chain limb.
fn mod_down_by_aux(chain: RnsPoly, mut aux: Vec<u64>, params: &CkksParams) -> RnsPoly {
    let p = params.aux_modulus;
    params.ntt_aux.inverse(&mut aux);
    let half = p / 2;
    let n = chain.n;
    let mut out = Vec::with_capacity(chain.limbs.len());
    for (idx, limb) in chain.limbs.iter().enumerate() {
        let q = params.prime(idx);
        let p_inv = inv_mod(p % q, q);
        let mut delta: Vec<u64> = aux
            .iter()
            .map(|&c| if c > half { (q - ((p - c) % q)) % q } else { c % q })
            .collect();
        params.table(idx).forward(&mut delta);
        let new_limb: Vec<u64> = limb
            .iter()
            .zip(&delta)
            .map(|(&x, &d)| mul_mod(sub_mod(x, d, q), p_inv, q))
            .collect();
        out.push(new_limb);
    }
    RnsPoly { n, limbs: out }
}
