//! Newton-Raphson encrypted inversion of a scalar S replicated in all slots.
//!
//! The iteration x_{k+1} = x_k (2 - S x_k) squares the residual 1 - S x_k,
//! so convergence is governed entirely by the initial guess:
//!
//! * `PaperAffine`: x_0 = 4 - 4S, the degree-1 Taylor expansion of 1/S at
//!   S = 1/2. Accurate mid-interval but degenerate as S -> 1, where x_0 -> 0
//!   is a spurious fixed point.
//! * `MinimaxAffine` (default): x_0 = 160/41 - (128/41) S, the equioscillating
//!   affine initializer over [1/4, 1]; the residual is bounded by 9/41
//!   everywhere, giving worst-case error (9/41)^(2^k)/S -- below 1e-2 on the
//!   whole domain at k = 2.
//!
//! Cost: 1 level for the init (plaintext multiply) plus 2 levels per
//! iteration.

use hefl_ckks::{Ciphertext, CkksError, Context, EvalKeys};

use crate::Result;

pub const MINIMAX_C0: f64 = 160.0 / 41.0;
pub const MINIMAX_C1: f64 = -128.0 / 41.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseInit {
    /// x_0 = 4 - 4S (degree-1 Taylor at S = 1/2).
    PaperAffine,
    /// x_0 = 160/41 - (128/41) S (equioscillating over [1/4, 1]).
    MinimaxAffine,
}

#[derive(Debug, Clone, Copy)]
pub struct InverseConfig {
    /// Newton-Raphson iteration count k (>= 1).
    pub iterations: usize,
    pub init: InverseInit,
    /// Domain the initializer is tuned for; callers keep S inside it.
    pub domain: (f64, f64),
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self { iterations: 2, init: InverseInit::MinimaxAffine, domain: (0.25, 1.0) }
    }
}

impl InverseConfig {
    pub fn paper_faithful() -> Self {
        Self { iterations: 2, init: InverseInit::PaperAffine, domain: (0.25, 1.0) }
    }

    pub fn init_coefficients(&self) -> (f64, f64) {
        match self.init {
            InverseInit::PaperAffine => (4.0, -4.0),
            InverseInit::MinimaxAffine => (MINIMAX_C0, MINIMAX_C1),
        }
    }

    /// Levels consumed: init (1) + two multiplications per iteration.
    pub fn levels_required(&self) -> usize {
        1 + 2 * self.iterations
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(CkksError::Framing("inverse iterations must be >= 1".into()));
        }
        if !(self.domain.0 > 0.0 && self.domain.1 <= 1.0 && self.domain.0 < self.domain.1) {
            return Err(CkksError::Framing(format!(
                "inverse domain ({}, {}) must sit inside (0, 1]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(())
    }
}

/// Approximate 1/S homomorphically. `ct_s` must encrypt S (replicated in the
/// slots of interest) with S in cfg.domain.
pub fn enc_inverse(
    ctx: &Context,
    keys: &EvalKeys,
    ct_s: &Ciphertext,
    cfg: &InverseConfig,
) -> Result<Ciphertext> {
    cfg.validate()?;
    let needed = cfg.levels_required();
    if ct_s.level < needed {
        return Err(CkksError::LevelExhausted { needed, have: ct_s.level });
    }
    let (c0, c1) = cfg.init_coefficients();

    // x_0 = c0 + c1 * S  (one plaintext multiply)
    let mut x = hefl_ckks::add_const(ctx, &hefl_ckks::mult_const(ctx, ct_s, c1)?, c0)?;

    for _ in 0..cfg.iterations {
        // t = 2 - S * x_k
        let sx = hefl_ckks::mult(ctx, keys, ct_s, &x)?;
        let t = hefl_ckks::add_const(ctx, &hefl_ckks::negate(ctx, &sx), 2.0)?;
        // x_{k+1} = x_k * t
        x = hefl_ckks::mult(ctx, keys, &x, &t)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror;

    #[test]
    fn fixed_point_at_half() {
        // S = 1/2: x_0 = 4 - 4*0.5 = 2 = 1/S exactly, a fixed point.
        let cfg = InverseConfig::paper_faithful();
        for k in 1..=4 {
            let v = mirror::inverse_iteration(0.5, 4.0, -4.0, k);
            assert!((v - 2.0).abs() < 1e-15, "k={k}: {v}");
        }
    }

    #[test]
    fn hand_iterated_value_at_three_quarters() {
        // x_0 = 1, x_1 = 1.25, x_2 = 1.328125
        let v = mirror::inverse_iteration(0.75, 4.0, -4.0, 2);
        assert_eq!(v, 1.328125);
        assert!((1.0 / 0.75 - v).abs() < 5.3e-3);
        let _ = InverseConfig::default();
    }

    #[test]
    fn minimax_init_worst_case_below_target() {
        let cfg = InverseConfig::default();
        let (c0, c1) = cfg.init_coefficients();
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let s = 0.25 + 0.75 * i as f64 / 1000.0;
            let v = mirror::inverse_iteration(s, c0, c1, 2);
            worst = worst.max((1.0 / s - v).abs());
        }
        assert!(worst < 1e-2, "worst-case error {worst}");
    }

    #[test]
    fn residual_decreases_monotonically_with_iterations() {
        for &(c0, c1) in &[(4.0, -4.0), (MINIMAX_C0, MINIMAX_C1)] {
            for i in 0..=20 {
                let s = 0.25 + 0.70 * i as f64 / 20.0;
                let mut prev = f64::MAX;
                for k in 1..=4 {
                    let v = mirror::inverse_iteration(s, c0, c1, k);
                    let resid = (s * v - 1.0).abs();
                    assert!(resid <= prev + 1e-15, "s={s} k={k}");
                    prev = resid;
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = InverseConfig { iterations: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = InverseConfig { domain: (0.0, 1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(InverseConfig::default().levels_required(), 5);
    }
}
