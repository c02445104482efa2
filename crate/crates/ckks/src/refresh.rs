//! Trusted refresh oracle.
//!
//! Decrypt-and-re-encrypt stand-in for ciphertext refreshing. This is NOT
//! cryptographic bootstrapping: it holds the secret key and exists only for
//! simulation and tests. Every call is logged with a configurable synthetic
//! latency so cost reports can account for the operation without ever
//! claiming it was measured.

use std::sync::Mutex;

use rand::Rng;

use crate::cipher::{decrypt_values, encrypt, Ciphertext, Context};
use crate::error::Result;
use crate::key::{PublicKey, SecretKey};

/// Default synthetic latency, from the reported ~30 s refresh at logN = 14.
pub const DEFAULT_REFRESH_SECONDS: f64 = 30.0;

#[derive(Debug)]
pub struct RefreshOracle {
    secret: SecretKey,
    pub synthetic_seconds_per_call: f64,
    log: Mutex<Vec<f64>>,
}

impl RefreshOracle {
    pub fn new(secret: SecretKey, synthetic_seconds_per_call: f64) -> Self {
        Self { secret, synthetic_seconds_per_call, log: Mutex::new(Vec::new()) }
    }

    /// Re-encrypt the ciphertext's current value at the top level. The
    /// synthetic latency is recorded, never slept.
    pub fn refresh<R: Rng>(
        &self,
        ctx: &Context,
        pk: &PublicKey,
        ct: &Ciphertext,
        rng: &mut R,
    ) -> Result<Ciphertext> {
        let values = decrypt_values(ctx, &self.secret, ct);
        let pt = ctx.encode(&values, ctx.params.max_level, ctx.params.scale)?;
        self.log.lock().expect("refresh log poisoned").push(self.synthetic_seconds_per_call);
        Ok(encrypt(ctx, pk, &pt, rng))
    }

    pub fn calls(&self) -> usize {
        self.log.lock().expect("refresh log poisoned").len()
    }

    /// Total synthetic seconds across all calls (for the cost model only).
    pub fn synthetic_seconds(&self) -> f64 {
        self.log.lock().expect("refresh log poisoned").iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{encrypt_values, mult_const};
    use crate::key::KeyMaterial;
    use crate::params::CkksParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn refresh_restores_level_and_value() {
        let params = CkksParams::custom(9, 3).unwrap();
        let ctx = Context::new(params);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let km = KeyMaterial::generate(&ctx.params, &[], &mut rng);
        let oracle = RefreshOracle::new(km.secret.clone(), DEFAULT_REFRESH_SECONDS);

        let v: Vec<f64> = (0..ctx.params.slots).map(|i| (i % 5) as f64 / 5.0).collect();
        let ct = encrypt_values(&ctx, &km.public, &v, &mut rng).unwrap();
        // burn all levels
        let mut low = ct;
        for _ in 0..ctx.params.max_level {
            low = mult_const(&ctx, &low, 1.0).unwrap();
        }
        assert_eq!(low.level, 0);

        let fresh = oracle.refresh(&ctx, &km.public, &low, &mut rng).unwrap();
        assert_eq!(fresh.level, ctx.params.max_level);
        let out = decrypt_values(&ctx, &km.secret, &fresh);
        for i in 0..ctx.params.slots {
            assert!((out[i] - v[i]).abs() < 1e-3, "slot {i}: {} vs {}", out[i], v[i]);
        }

        // idempotent on value, and the ledger records the configured latency
        let again = oracle.refresh(&ctx, &km.public, &fresh, &mut rng).unwrap();
        let out2 = decrypt_values(&ctx, &km.secret, &again);
        for i in 0..ctx.params.slots {
            assert!((out2[i] - v[i]).abs() < 1e-3);
        }
        assert_eq!(oracle.calls(), 2);
        assert!((oracle.synthetic_seconds() - 60.0).abs() < 1e-12);
    }
}
