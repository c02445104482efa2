//! Homomorphic linear-algebra and nonlinear-approximation kernels: diagonal
//! (baby-step/giant-step) plaintext-matrix times encrypted-vector products,
//! TotalSum slot replication, Chebyshev sigmoid evaluation via
//! Paterson-Stockmeyer, plaintext boundary shifts, and Newton-Raphson
//! encrypted inversion. Every kernel has an independent plaintext mirror in
//! [`mirror`].

pub mod cheb;
pub mod inverse;
pub mod matrix;
pub mod mirror;

use hefl_ckks::{Ciphertext, CkksError, Context};

pub use cheb::{cheb_eval_ct_mults, cheb_eval_depth, eval_chebyshev, ChebApprox, ChebEvalReport};
pub use inverse::{enc_inverse, InverseConfig, InverseInit};
pub use matrix::{mat_vec, matvec_rotation_steps, total_sum, total_sum_steps, PlainMatrix};

pub type Result<T> = std::result::Result<T, CkksError>;

/// Shift the pre-threshold score by a plaintext boundary constant. Pure
/// ciphertext-plaintext addition: no level consumed, no noise added.
pub fn boundary_shift(ctx: &Context, ct: &Ciphertext, b: f64) -> Result<Ciphertext> {
    hefl_ckks::add_const(ctx, ct, b)
}

/// Add with tolerance for the small scale drift that Chebyshev ladders pick
/// up from scale primes sitting near (not at) the target scale. The result
/// keeps the first operand's scale; the relative value error is bounded by
/// the drift, which stays below `REL_TOL` by parameter construction.
pub(crate) fn add_drift(ctx: &Context, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    const REL_TOL: f64 = 1e-3;
    let rel = (a.scale - b.scale).abs() / a.scale.max(b.scale);
    if rel > REL_TOL {
        return Err(CkksError::ScaleMismatch(a.scale, b.scale));
    }
    let level = a.level.min(b.level);
    let mut x = hefl_ckks::mod_switch_to(a, level);
    let y = hefl_ckks::mod_switch_to(b, level);
    x.c0.add_assign(&y.c0, &ctx.params);
    x.c1.add_assign(&y.c1, &ctx.params);
    Ok(x)
}

pub(crate) fn sub_drift(ctx: &Context, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    add_drift(ctx, a, &hefl_ckks::negate(ctx, b))
}
