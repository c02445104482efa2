//! Ciphertexts and the leveled operation set: add/sub/negate, plaintext and
//! ciphertext multiplication (tensor -> relinearize -> rescale), rotations,
//! and modulus switching for level alignment.
//!
//! Binary operations auto-align levels by switching the higher operand down.
//! Scales must already match (relative 1e-9); multiplication helpers target
//! exact scales by encoding plaintext operands at the prime being dropped.

use rand::Rng;

use crate::encoding::{decode, encode, encode_replicated, Embedding, Plaintext};
use crate::error::{CkksError, Result};
use crate::key::{
    key_switch, sample_gaussian_coeffs, sample_ternary, EvalKeys, GaussianSampler, KeySwitchKey,
    PublicKey, SecretKey,
};
use crate::params::Params;
use crate::poly::RnsPoly;

/// Shared immutable context: parameters plus embedding tables.
#[derive(Debug)]
pub struct Context {
    pub params: Params,
    pub emb: Embedding,
}

impl Context {
    pub fn new(params: Params) -> Self {
        let emb = Embedding::new(params.n);
        Self { params, emb }
    }

    pub fn encode(&self, values: &[f64], level: usize, scale: f64) -> Result<Plaintext> {
        encode(&self.emb, &self.params, values, level, scale)
    }

    pub fn encode_replicated(
        &self,
        values: &[f64],
        period: usize,
        level: usize,
        scale: f64,
    ) -> Result<Plaintext> {
        encode_replicated(&self.emb, &self.params, values, period, level, scale)
    }

    pub fn decode(&self, pt: &Plaintext) -> Vec<f64> {
        decode(&self.emb, &self.params, pt)
    }
}

#[derive(Debug, Clone)]
pub struct Ciphertext {
    pub c0: RnsPoly,
    pub c1: RnsPoly,
    pub level: usize,
    pub scale: f64,
}

impl Ciphertext {
    pub fn slot_count(&self, ctx: &Context) -> usize {
        ctx.params.slots
    }
}

const SCALE_MATCH_REL: f64 = 1e-9;

fn check_scales(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > SCALE_MATCH_REL * a.abs().max(b.abs()) {
        return Err(CkksError::ScaleMismatch(a, b));
    }
    Ok(())
}

pub fn encrypt<R: Rng>(ctx: &Context, pk: &PublicKey, pt: &Plaintext, rng: &mut R) -> Ciphertext {
    let params = &ctx.params;
    let gauss = GaussianSampler::new(params.noise_std_dev);
    let v_signed = sample_ternary(params.n, rng);
    let v = RnsPoly::from_signed_coeffs(&v_signed, params, pt.level);
    let e0 = RnsPoly::from_signed_coeffs(&sample_gaussian_coeffs(params.n, &gauss, rng), params, pt.level);
    let e1 = RnsPoly::from_signed_coeffs(&sample_gaussian_coeffs(params.n, &gauss, rng), params, pt.level);

    let mut b = pk.b.clone();
    b.drop_to_level(pt.level);
    let mut a = pk.a.clone();
    a.drop_to_level(pt.level);

    let mut c0 = b.mul(&v, params);
    c0.add_assign(&e0, params);
    c0.add_assign(&pt.poly, params);
    let mut c1 = a.mul(&v, params);
    c1.add_assign(&e1, params);

    Ciphertext { c0, c1, level: pt.level, scale: pt.scale }
}

pub fn decrypt(ctx: &Context, sk: &SecretKey, ct: &Ciphertext) -> Plaintext {
    let params = &ctx.params;
    let mut s = sk.poly.clone();
    s.drop_to_level(ct.level);
    let mut m = ct.c1.mul(&s, params);
    m.add_assign(&ct.c0, params);
    Plaintext { poly: m, level: ct.level, scale: ct.scale }
}

/// Encrypt a real vector at the top level with the default scale.
pub fn encrypt_values<R: Rng>(
    ctx: &Context,
    pk: &PublicKey,
    values: &[f64],
    rng: &mut R,
) -> Result<Ciphertext> {
    let pt = ctx.encode(values, ctx.params.max_level, ctx.params.scale)?;
    Ok(encrypt(ctx, pk, &pt, rng))
}

pub fn decrypt_values(ctx: &Context, sk: &SecretKey, ct: &Ciphertext) -> Vec<f64> {
    ctx.decode(&decrypt(ctx, sk, ct))
}

/// Drop moduli down to `level` (plaintext and scale unchanged).
pub fn mod_switch_to(ct: &Ciphertext, level: usize) -> Ciphertext {
    assert!(level <= ct.level);
    let mut out = ct.clone();
    out.c0.drop_to_level(level);
    out.c1.drop_to_level(level);
    out.level = level;
    out
}

fn aligned(a: &Ciphertext, b: &Ciphertext) -> (Ciphertext, Ciphertext) {
    let level = a.level.min(b.level);
    (mod_switch_to(a, level), mod_switch_to(b, level))
}

pub fn add(ctx: &Context, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    check_scales(a.scale, b.scale)?;
    let (mut x, y) = aligned(a, b);
    x.c0.add_assign(&y.c0, &ctx.params);
    x.c1.add_assign(&y.c1, &ctx.params);
    Ok(x)
}

pub fn sub(ctx: &Context, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    check_scales(a.scale, b.scale)?;
    let (mut x, y) = aligned(a, b);
    x.c0.sub_assign(&y.c0, &ctx.params);
    x.c1.sub_assign(&y.c1, &ctx.params);
    Ok(x)
}

pub fn negate(ctx: &Context, a: &Ciphertext) -> Ciphertext {
    let mut out = a.clone();
    out.c0.negate(&ctx.params);
    out.c1.negate(&ctx.params);
    out
}

/// Plaintext addition; the plaintext is re-encoded at the ciphertext's exact
/// level and scale, so no level is consumed and no noise is added.
pub fn add_plain(ctx: &Context, a: &Ciphertext, values: &[f64]) -> Result<Ciphertext> {
    let pt = ctx.encode(values, a.level, a.scale)?;
    let mut out = a.clone();
    out.c0.add_assign(&pt.poly, &ctx.params);
    Ok(out)
}

/// Add the same constant to every slot (no level cost).
pub fn add_const(ctx: &Context, a: &Ciphertext, c: f64) -> Result<Ciphertext> {
    let vals = vec![c; ctx.params.slots];
    add_plain(ctx, a, &vals)
}

pub fn sub_plain(ctx: &Context, a: &Ciphertext, values: &[f64]) -> Result<Ciphertext> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    add_plain(ctx, a, &neg)
}

/// Multiply by an already-encoded plaintext without rescaling. The caller
/// controls the plaintext scale (kernels exploit this to land on exact
/// post-rescale scales). Output scale is the product of both scales.
pub fn mult_plain_lazy(ctx: &Context, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    if pt.level != a.level {
        return Err(CkksError::ParamsMismatch);
    }
    let params = &ctx.params;
    Ok(Ciphertext {
        c0: a.c0.mul(&pt.poly, params),
        c1: a.c1.mul(&pt.poly, params),
        level: a.level,
        scale: a.scale * pt.scale,
    })
}

/// Rescale once: divide out the top prime, consuming one level.
pub fn rescale(ctx: &Context, a: &Ciphertext) -> Result<Ciphertext> {
    if a.level == 0 {
        return Err(CkksError::LevelExhausted { needed: 1, have: 0 });
    }
    let q_top = ctx.params.prime(a.level) as f64;
    Ok(Ciphertext {
        c0: a.c0.rescale(&ctx.params),
        c1: a.c1.rescale(&ctx.params),
        level: a.level - 1,
        scale: a.scale / q_top,
    })
}

/// Slotwise multiply by a plaintext vector, consuming exactly one level. The
/// plaintext is encoded at scale q_level so the output scale equals the input
/// scale exactly.
pub fn mult_plain(ctx: &Context, a: &Ciphertext, values: &[f64]) -> Result<Ciphertext> {
    if a.level == 0 {
        return Err(CkksError::LevelExhausted { needed: 1, have: 0 });
    }
    let pt_scale = ctx.params.prime(a.level) as f64;
    let pt = ctx.encode(values, a.level, pt_scale)?;
    let prod = mult_plain_lazy(ctx, a, &pt)?;
    rescale(ctx, &prod)
}

/// Multiply every slot by the same plaintext constant (one level).
pub fn mult_const(ctx: &Context, a: &Ciphertext, c: f64) -> Result<Ciphertext> {
    let vals = vec![c; ctx.params.slots];
    mult_plain(ctx, a, &vals)
}

/// Ciphertext multiplication: tensor product, relinearization with the relin
/// key, then one rescale. Consumes exactly one level.
pub fn mult(ctx: &Context, keys: &EvalKeys, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    let (a, b) = aligned(a, b);
    if a.level == 0 {
        return Err(CkksError::LevelExhausted { needed: 1, have: 0 });
    }
    let params = &ctx.params;

    let d0 = a.c0.mul(&b.c0, params);
    let mut d1 = a.c0.mul(&b.c1, params);
    d1.add_assign(&a.c1.mul(&b.c0, params), params);
    let d2 = a.c1.mul(&b.c1, params);

    let (r0, r1) = key_switch(&d2, &keys.relin, params);
    let mut c0 = d0;
    c0.add_assign(&r0, params);
    let mut c1 = d1;
    c1.add_assign(&r1, params);

    let t = Ciphertext { c0, c1, level: a.level, scale: a.scale * b.scale };
    rescale(ctx, &t)
}

/// Square a ciphertext (same cost shape as `mult`).
pub fn square(ctx: &Context, keys: &EvalKeys, a: &Ciphertext) -> Result<Ciphertext> {
    mult(ctx, keys, a, a)
}

/// Cyclic left rotation of the slot vector by `k`. Level and scale unchanged.
pub fn rotate(ctx: &Context, keys: &EvalKeys, a: &Ciphertext, k: usize) -> Result<Ciphertext> {
    let slots = ctx.params.slots;
    let k = k % slots;
    if k == 0 {
        return Ok(a.clone());
    }
    let ksk = keys.rotations.get(&k).ok_or(CkksError::MissingRotationKey(k))?;
    rotate_with_key(ctx, ksk, a, k)
}

pub fn rotate_with_key(
    ctx: &Context,
    ksk: &KeySwitchKey,
    a: &Ciphertext,
    k: usize,
) -> Result<Ciphertext> {
    let params = &ctx.params;
    let g = crate::key::galois_element(k, params.n);
    let r0 = a.c0.automorphism(g, params);
    let r1 = a.c1.automorphism(g, params);
    let (u0, u1) = key_switch(&r1, ksk, params);
    let mut c0 = r0;
    c0.add_assign(&u0, params);
    Ok(Ciphertext { c0, c1: u1, level: a.level, scale: a.scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CkksParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(depth: usize) -> (Context, crate::key::KeyMaterial, ChaCha20Rng) {
        let params = CkksParams::custom(9, depth).unwrap();
        let ctx = Context::new(params);
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let km = crate::key::KeyMaterial::generate(&ctx.params, &[1, 2, 5], &mut rng);
        (ctx, km, rng)
    }

    fn ramp(ctx: &Context) -> Vec<f64> {
        (0..ctx.params.slots).map(|i| ((i % 17) as f64 - 8.0) / 8.0).collect()
    }

    #[test]
    fn encrypt_decrypt_roundtrip() {
        let (ctx, km, mut rng) = setup(2);
        let v = ramp(&ctx);
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        let out = decrypt_values(&ctx, &km.secret, &ct);
        let err = v.iter().zip(&out).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        assert!(err < 1e-3, "fresh decrypt error {err}");
    }

    #[test]
    fn add_and_negate() {
        let (ctx, km, mut rng) = setup(2);
        let v = ramp(&ctx);
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        let sum = add(&ctx, &ct, &negate(&ctx, &ct)).unwrap();
        let out = decrypt_values(&ctx, &km.secret, &sum);
        assert!(out.iter().all(|x| x.abs() < 1e-3));
    }

    #[test]
    fn mult_ct_ct_matches_mirror_and_consumes_level() {
        let (ctx, km, mut rng) = setup(2);
        let v = ramp(&ctx);
        let w: Vec<f64> = v.iter().map(|x| 1.0 - x / 2.0).collect();
        let ca = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        let cb = encrypt_values(&ctx, &km.public, &w, &mut rng).unwrap();
        let prod = mult(&ctx, &km.eval, &ca, &cb).unwrap();
        assert_eq!(prod.level, ca.level - 1);
        let out = decrypt_values(&ctx, &km.secret, &prod);
        for i in 0..ctx.params.slots {
            assert!((out[i] - v[i] * w[i]).abs() < 1e-2, "slot {i}");
        }
    }

    #[test]
    fn mult_plain_identity_keeps_value() {
        let (ctx, km, mut rng) = setup(2);
        let v = ramp(&ctx);
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        let ones = vec![1.0; ctx.params.slots];
        let out_ct = mult_plain(&ctx, &ct, &ones).unwrap();
        assert_eq!(out_ct.level, ct.level - 1);
        // scale-exact: plaintext encoded at q_level makes the scales match
        assert!((out_ct.scale - ct.scale).abs() < 1e-6 * ct.scale);
        let out = decrypt_values(&ctx, &km.secret, &out_ct);
        for i in 0..ctx.params.slots {
            assert!((out[i] - v[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn rotation_shifts_slots() {
        let (ctx, km, mut rng) = setup(1);
        let slots = ctx.params.slots;
        let mut v = vec![0.0f64; slots];
        v[0] = 1.0;
        v[1] = 2.0;
        v[2] = 3.0;
        v[3] = 4.0;
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        let rot = rotate(&ctx, &km.eval, &ct, 1).unwrap();
        assert_eq!(rot.level, ct.level);
        let out = decrypt_values(&ctx, &km.secret, &rot);
        // left rotation: out[i] = v[i+1]
        assert!((out[0] - 2.0).abs() < 1e-2);
        assert!((out[1] - 3.0).abs() < 1e-2);
        assert!((out[2] - 4.0).abs() < 1e-2);
        assert!((out[slots - 1] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn level_exhaustion_is_an_error() {
        let (ctx, km, mut rng) = setup(1);
        let v = ramp(&ctx);
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        let once = mult(&ctx, &km.eval, &ct, &ct).unwrap();
        assert_eq!(once.level, 0);
        let twice = mult(&ctx, &km.eval, &once, &once);
        assert!(matches!(twice, Err(CkksError::LevelExhausted { .. })));
    }

    #[test]
    fn missing_rotation_key_reported() {
        let (ctx, km, mut rng) = setup(1);
        let ct = encrypt_values(&ctx, &km.public, &[1.0], &mut rng).unwrap();
        assert!(matches!(
            rotate(&ctx, &km.eval, &ct, 3),
            Err(CkksError::MissingRotationKey(3))
        ));
    }

    #[test]
    fn same_seed_same_keys() {
        let params = CkksParams::custom(8, 1).unwrap();
        let mut r1 = ChaCha20Rng::seed_from_u64(5);
        let mut r2 = ChaCha20Rng::seed_from_u64(5);
        let k1 = crate::key::KeyMaterial::generate(&params, &[], &mut r1);
        let k2 = crate::key::KeyMaterial::generate(&params, &[], &mut r2);
        assert_eq!(k1.public.b, k2.public.b);
        assert_eq!(k1.public.a, k2.public.a);
        assert_eq!(k1.secret.signed, k2.secret.signed);
    }
}
