use hefl_ckks::*;
use rand::SeedableRng;

fn main() {
    let t0 = std::time::Instant::now();
    let params = CkksParams::preset(Preset::P1).unwrap();
    let ctx = Context::new(params);
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
    let km = KeyMaterial::generate(&ctx.params, &[1], &mut rng);
    println!("keygen: {:?}", t0.elapsed());

    let v: Vec<f64> = (0..ctx.params.slots).map(|i| 0.9 + 0.05 * ((i % 3) as f64)).collect();
    let t1 = std::time::Instant::now();
    let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
    println!("encrypt: {:?}", t1.elapsed());
    let out = decrypt_values(&ctx, &km.secret, &ct);
    let err = v.iter().zip(&out).map(|(a,b)| (a-b).abs()).fold(0.0f64, f64::max);
    println!("fresh decrypt max err: {err:.3e}");

    let factor = encrypt_values(&ctx, &km.public, &vec![1.0; ctx.params.slots], &mut rng).unwrap();
    let t2 = std::time::Instant::now();
    let mut acc = ct.clone();
    for i in 0..11 {
        acc = mult(&ctx, &km.eval, &acc, &factor).unwrap();
        if i == 0 { println!("first mult: {:?}", t2.elapsed()); }
    }
    println!("11 mults: {:?}, final level {}", t2.elapsed(), acc.level);
    let out = decrypt_values(&ctx, &km.secret, &acc);
    let err = v.iter().zip(&out).map(|(a,b)| (a-b).abs()).fold(0.0f64, f64::max);
    println!("depth-11 max err vs v: {err:.3e}");
    let t3 = std::time::Instant::now();
    let rot = rotate(&ctx, &km.eval, &ct, 1).unwrap();
    println!("rotate at top level: {:?} (level {})", t3.elapsed(), rot.level);
    assert!(matches!(mult(&ctx, &km.eval, &acc, &acc), Err(CkksError::LevelExhausted{..})));
    println!("12th mult raises LevelExhausted: ok");
    println!("total: {:?}", t0.elapsed());
}
