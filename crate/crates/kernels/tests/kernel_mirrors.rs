//! Homomorphic kernels against their plaintext mirrors, plus the level and
//! multiplication-count accounting invariants.

use hefl_ckks::cipher::{decrypt_values, encrypt, Context};
use hefl_ckks::key::KeyMaterial;
use hefl_ckks::params::CkksParams;
use hefl_kernels::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Fixture {
    ctx: Context,
    km: KeyMaterial,
    rng: ChaCha20Rng,
}

fn fixture(log_n: u8, depth: usize, matvec_cols: &[usize]) -> Fixture {
    let params = CkksParams::custom(log_n, depth).unwrap();
    let ctx = Context::new(params);
    let mut rng = ChaCha20Rng::seed_from_u64(4242);
    let mut steps: Vec<usize> = total_sum_steps(ctx.params.slots);
    for &c in matvec_cols {
        steps.extend(matvec_rotation_steps(c, ctx.params.slots));
    }
    let km = KeyMaterial::generate(&ctx.params, &steps, &mut rng);
    Fixture { ctx, km, rng }
}

fn encrypt_replicated(f: &mut Fixture, v: &[f64], period: usize) -> hefl_ckks::Ciphertext {
    let (level, scale) = (f.ctx.params.max_level, f.ctx.params.scale);
    let pt = f.ctx.encode_replicated(v, period, level, scale).unwrap();
    encrypt(&f.ctx, &f.km.public, &pt, &mut f.rng)
}

#[test]
fn matvec_identity_and_all_ones() {
    let mut f = fixture(10, 2, &[4]);
    // identity: output equals input slots
    let eye = PlainMatrix::new(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.]).unwrap();
    let v = [0.5, -0.25, 0.75, 1.0];
    let ct = encrypt_replicated(&mut f, &v, 4);
    let out_ct = mat_vec(&f.ctx, &f.km.eval, &eye, &ct).unwrap();
    assert_eq!(out_ct.level, ct.level - 1);
    let out = decrypt_values(&f.ctx, &f.km.secret, &out_ct);
    for i in 0..4 {
        assert!((out[i] - v[i]).abs() < 1e-2, "slot {i}");
    }

    // all-ones 4x4 with v=(1,2,3,4) -> (10,10,10,10)
    let ones = PlainMatrix::new(4, 4, &[1.0; 16]).unwrap();
    let ct = encrypt_replicated(&mut f, &[1., 2., 3., 4.], 4);
    let out = decrypt_values(&f.ctx, &f.km.secret, &mat_vec(&f.ctx, &f.km.eval, &ones, &ct).unwrap());
    for i in 0..4 {
        assert!((out[i] - 10.0).abs() < 1e-2, "slot {i}: {}", out[i]);
    }
}

#[test]
fn matvec_random_rectangular_matches_mirror() {
    let mut f = fixture(10, 2, &[64]);
    let (rows, cols) = (8usize, 64usize);
    let m: Vec<f64> = (0..rows * cols).map(|i| (((i * 31 + 7) % 17) as f64 - 8.0) / 16.0).collect();
    let a = PlainMatrix::new(rows, cols, &m).unwrap();
    let v: Vec<f64> = (0..cols).map(|i| (((i * 13 + 3) % 11) as f64 - 5.0) / 5.0).collect();

    let ct = encrypt_replicated(&mut f, &v, 64);
    let out = decrypt_values(&f.ctx, &f.km.secret, &mat_vec(&f.ctx, &f.km.eval, &a, &ct).unwrap());
    let expect = mirror::mat_vec_dense(rows, cols, &m, &v);
    for r in 0..rows {
        assert!((out[r] - expect[r]).abs() < 1e-2, "row {r}: {} vs {}", out[r], expect[r]);
        // replication with period rows_padded
        assert!((out[r + 8] - expect[r]).abs() < 1e-2);
    }
}

#[test]
fn matvec_tall_matrix_supported() {
    // n_sv x dim shape: more rows than columns, few diagonals
    let mut f = fixture(10, 2, &[8]);
    let (rows, cols) = (16usize, 8usize);
    let m: Vec<f64> = (0..rows * cols).map(|i| ((i % 7) as f64 - 3.0) / 6.0).collect();
    let a = PlainMatrix::new(rows, cols, &m).unwrap();
    let v: Vec<f64> = (0..cols).map(|i| ((i % 5) as f64 - 2.0) / 4.0).collect();
    let ct = encrypt_replicated(&mut f, &v, 8);
    let out = decrypt_values(&f.ctx, &f.km.secret, &mat_vec(&f.ctx, &f.km.eval, &a, &ct).unwrap());
    let expect = mirror::mat_vec_dense(rows, cols, &m, &v);
    for r in 0..rows {
        assert!((out[r] - expect[r]).abs() < 1e-2, "row {r}");
    }
}

#[test]
fn matvec_linearity() {
    let mut f = fixture(10, 2, &[8]);
    let a = PlainMatrix::new(4, 8, &(0..32).map(|i| ((i % 9) as f64 - 4.0) / 8.0).collect::<Vec<_>>()).unwrap();
    let v: Vec<f64> = (0..8).map(|i| (i as f64 - 4.0) / 8.0).collect();
    let w: Vec<f64> = (0..8).map(|i| ((7 - i) as f64 - 3.0) / 8.0).collect();
    let vw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();

    let ct_vw = encrypt_replicated(&mut f, &vw, 8);
    let ct_v = encrypt_replicated(&mut f, &v, 8);
    let ct_w = encrypt_replicated(&mut f, &w, 8);

    let lhs = decrypt_values(&f.ctx, &f.km.secret, &mat_vec(&f.ctx, &f.km.eval, &a, &ct_vw).unwrap());
    let mv = mat_vec(&f.ctx, &f.km.eval, &a, &ct_v).unwrap();
    let mw = mat_vec(&f.ctx, &f.km.eval, &a, &ct_w).unwrap();
    let rhs = decrypt_values(&f.ctx, &f.km.secret, &hefl_ckks::add(&f.ctx, &mv, &mw).unwrap());
    for i in 0..4 {
        assert!((lhs[i] - rhs[i]).abs() < 2e-2, "slot {i}");
    }
}

#[test]
fn total_sum_replicates_and_is_rotation_invariant() {
    let mut f = fixture(9, 1, &[]);
    let slots = f.ctx.params.slots;

    // one-hot: all slots become 1
    let mut v = vec![0.0; slots];
    v[0] = 1.0;
    let ct = encrypt_replicated(&mut f, &v, slots);
    let s = total_sum(&f.ctx, &f.km.eval, &ct).unwrap();
    assert_eq!(s.level, ct.level);
    let out = decrypt_values(&f.ctx, &f.km.secret, &s);
    assert!(out.iter().all(|&x| (x - 1.0).abs() < 2e-2));

    // 1..8 then zeros: every slot 36
    let mut v = vec![0.0; slots];
    for i in 0..8 {
        v[i] = (i + 1) as f64;
    }
    let ct = encrypt_replicated(&mut f, &v, slots);
    let s = total_sum(&f.ctx, &f.km.eval, &ct).unwrap();
    let out = decrypt_values(&f.ctx, &f.km.secret, &s);
    assert!(out.iter().all(|&x| (x - 36.0).abs() < 5e-2), "slot0 {}", out[0]);

    // rotation invariance of the replicated sum
    let rot = hefl_ckks::rotate(&f.ctx, &f.km.eval, &s, 1).unwrap();
    let out_rot = decrypt_values(&f.ctx, &f.km.secret, &rot);
    for i in 0..slots {
        assert!((out_rot[i] - out[i]).abs() < 5e-2);
    }

    // applying TotalSum twice scales by the slot count
    let s2 = total_sum(&f.ctx, &f.km.eval, &s).unwrap();
    let out2 = decrypt_values(&f.ctx, &f.km.secret, &s2);
    let expect = 36.0 * slots as f64;
    assert!(out2.iter().all(|&x| (x - expect).abs() < expect * 1e-2));
}

#[test]
fn chebyshev_encrypted_matches_clenshaw_mirror() {
    let mut f = fixture(10, 9, &[]);
    let approx = ChebApprox::sigmoid(1.0, (-15.0, 15.0), 32).unwrap();
    let slots = f.ctx.params.slots;
    let v: Vec<f64> = (0..slots).map(|i| -10.0 + 20.0 * (i as f64) / (slots as f64 - 1.0)).collect();
    let ct = encrypt_replicated(&mut f, &v, slots);

    let (out_ct, report) = eval_chebyshev(&f.ctx, &f.km.eval, &ct, &approx, 1.0).unwrap();
    assert_eq!(report.levels_consumed, cheb_eval_depth(32));
    assert!(report.levels_consumed <= 8, "depth {}", report.levels_consumed);
    assert!(report.ct_mults <= 12, "ct mults {}", report.ct_mults);

    let out = decrypt_values(&f.ctx, &f.km.secret, &out_ct);
    let mut worst = 0.0f64;
    for i in 0..slots {
        let expect = approx.eval_argument(v[i]);
        worst = worst.max((out[i] - expect).abs());
    }
    assert!(worst < 2e-2, "worst HE-vs-Clenshaw error {worst}");
}

#[test]
fn chebyshev_constant_poly() {
    let mut f = fixture(9, 3, &[]);
    let approx = ChebApprox {
        steepness: 1.0,
        interval: (-1.0, 1.0),
        degree: 0,
        coeffs: vec![0.625],
        max_error: 0.0,
        error_target: 1e-2,
    };
    let slots = f.ctx.params.slots;
    let ct = encrypt_replicated(&mut f, &[0.3], slots);
    let (out_ct, report) = eval_chebyshev(&f.ctx, &f.km.eval, &ct, &approx, 1.0).unwrap();
    assert_eq!(report.levels_consumed, 0);
    assert_eq!(out_ct.level, ct.level);
    let out = decrypt_values(&f.ctx, &f.km.secret, &out_ct);
    assert!((out[7] - 0.625).abs() < 1e-6);
}

#[test]
fn boundary_shift_costs_nothing() {
    let mut f = fixture(9, 1, &[]);
    let v = vec![0.125; f.ctx.params.slots];
    let slots = f.ctx.params.slots;
    let ct = encrypt_replicated(&mut f, &v, slots);
    // B = 0 is the identity
    let same = boundary_shift(&f.ctx, &ct, 0.0).unwrap();
    assert_eq!(same.level, ct.level);
    let out = decrypt_values(&f.ctx, &f.km.secret, &same);
    assert!((out[0] - 0.125).abs() < 1e-3);
    // negative boundary pulls a borderline score down
    let shifted = boundary_shift(&f.ctx, &ct, -0.5).unwrap();
    assert_eq!(shifted.level, ct.level);
    let out = decrypt_values(&f.ctx, &f.km.secret, &shifted);
    assert!((out[0] + 0.375).abs() < 1e-3);
}

#[test]
fn enc_inverse_matches_mirror_and_handles_domain() {
    let mut f = fixture(10, 6, &[]);
    let cfg = InverseConfig::default();
    let (c0, c1) = cfg.init_coefficients();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for _ in 0..5 {
        let s: f64 = rng.gen_range(0.25..0.95);
        let ct = encrypt_replicated(&mut f, &[s], 1); // replicated everywhere
        let inv = enc_inverse(&f.ctx, &f.km.eval, &ct, &cfg).unwrap();
        assert_eq!(inv.level, ct.level - cfg.levels_required());
        let out = decrypt_values(&f.ctx, &f.km.secret, &inv);
        let expect = mirror::inverse_iteration(s, c0, c1, cfg.iterations);
        assert!((out[3] - expect).abs() < 1e-2, "S={s}: {} vs {expect}", out[3]);
    }
}

#[test]
fn enc_inverse_level_exhaustion() {
    let mut f = fixture(9, 3, &[]);
    let ct = encrypt_replicated(&mut f, &[0.5], 1);
    let cfg = InverseConfig::default(); // needs 5 levels, we have 3
    assert!(matches!(
        enc_inverse(&f.ctx, &f.km.eval, &ct, &cfg),
        Err(hefl_ckks::CkksError::LevelExhausted { .. })
    ));
}
