//! Chebyshev approximation of the logistic sigmoid and its encrypted
//! evaluation with the Paterson-Stockmeyer baby-step/giant-step scheme.
//!
//! The approximation targets sigma(y) on the argument interval [a, b]; the
//! steepness factor k scales the raw score into that argument upstream
//! (y = k*x), so one table serves every steepness as long as the score is
//! pre-scaled into [a/k, b/k]. Interpolation uses Chebyshev nodes with the
//! cosine-sum formula, and encrypted evaluation works in the Chebyshev basis
//! throughout for stability at degree 32.
//!
//! Scale management: leaf sums and recombinations encode their plaintext
//! factors at scales chosen so every addition matches exactly; only the
//! T_{i+j} = 2 T_i T_j - T_k ladder uses drift-tolerant subtraction (the
//! rescale prime is near, not at, the working scale).

use std::collections::BTreeMap;

use hefl_ckks::{mod_switch_to, mult_plain_lazy, rescale, Ciphertext, CkksError, Context, EvalKeys};

use crate::{add_drift, mirror, sub_drift, Result};

pub const DEFAULT_ERROR_TARGET: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct ChebApprox {
    /// Steepness applied to the score before the polynomial argument.
    pub steepness: f64,
    /// Argument interval of the approximated sigmoid.
    pub interval: (f64, f64),
    pub degree: usize,
    /// Chebyshev-basis coefficients on [a, b].
    pub coeffs: Vec<f64>,
    /// Dense-grid max |p(y) - sigma(y)| over [a, b].
    pub max_error: f64,
    /// Requested bound; `meets_target` reports whether max_error satisfies it.
    pub error_target: f64,
}

fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

impl ChebApprox {
    /// Interpolate sigma on [a, b] at degree+1 Chebyshev nodes.
    pub fn sigmoid(steepness: f64, interval: (f64, f64), degree: usize) -> Result<Self> {
        Self::of_function(sigmoid, steepness, interval, degree)
    }

    pub fn of_function(
        f: impl Fn(f64) -> f64,
        steepness: f64,
        interval: (f64, f64),
        degree: usize,
    ) -> Result<Self> {
        let (a, b) = interval;
        if degree < 2 || !(a < 0.0 && 0.0 < b) {
            return Err(CkksError::Framing(format!(
                "need degree >= 2 and an interval containing 0, got deg {degree} on [{a}, {b}]"
            )));
        }
        let m = degree + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|i| {
                let t = (std::f64::consts::PI * (i as f64 + 0.5) / m as f64).cos();
                0.5 * (b - a) * t + 0.5 * (a + b)
            })
            .collect();
        let fv: Vec<f64> = nodes.iter().map(|&y| f(y)).collect();
        let mut coeffs = vec![0.0f64; m];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &v) in fv.iter().enumerate() {
                acc += v * (std::f64::consts::PI * j as f64 * (i as f64 + 0.5) / m as f64).cos();
            }
            *c = 2.0 * acc / m as f64;
        }
        coeffs[0] *= 0.5;

        let mut max_error = 0.0f64;
        let grid = 10_000;
        for i in 0..=grid {
            let y = a + (b - a) * i as f64 / grid as f64;
            let err = (mirror::clenshaw(&coeffs, a, b, y) - f(y)).abs();
            max_error = max_error.max(err);
        }
        Ok(Self {
            steepness,
            interval,
            degree,
            coeffs,
            max_error,
            error_target: DEFAULT_ERROR_TARGET,
        })
    }

    pub fn meets_target(&self) -> bool {
        self.max_error <= self.error_target
    }

    /// Polynomial value at a raw argument y (no clamping): the mirror of the
    /// encrypted evaluation path.
    pub fn eval_argument(&self, y: f64) -> f64 {
        mirror::clenshaw(&self.coeffs, self.interval.0, self.interval.1, y)
    }

    /// Filter-facing evaluation of sigma(k*x) with saturation at the
    /// interval ends (the encrypted path instead guarantees range by
    /// pre-scaling).
    pub fn eval_scaled(&self, x: f64) -> f64 {
        let y = (self.steepness * x).clamp(self.interval.0, self.interval.1);
        self.eval_argument(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChebEvalReport {
    pub levels_consumed: usize,
    pub ct_mults: usize,
    pub pt_mults: usize,
}

/// Baby-step count: smallest power of two with m^2 >= degree + 1.
fn baby_count(degree: usize) -> usize {
    let mut m = 1usize;
    while m * m < degree + 1 {
        m <<= 1;
    }
    m
}

/// Divide p (Chebyshev basis) by T_g: p = q * T_g + r with deg r < g.
fn cheb_divmod(coeffs: &[f64], g: usize) -> (Vec<f64>, Vec<f64>) {
    let d = coeffs.len() - 1;
    debug_assert!(d >= g);
    let mut r = coeffs.to_vec();
    let mut q = vec![0.0f64; d - g + 1];
    for i in ((g + 1)..=d).rev() {
        let ci = r[i];
        if ci != 0.0 {
            q[i - g] = 2.0 * ci;
            r[i] = 0.0;
            let j = (2 * g as i64 - i as i64).unsigned_abs() as usize;
            r[j] -= ci;
        }
    }
    q[0] = r[g];
    r[g] = 0.0;
    r.truncate(g);
    if r.is_empty() {
        r.push(0.0);
    }
    (q, r)
}

fn effective_degree(coeffs: &[f64]) -> usize {
    let mut d = coeffs.len() - 1;
    while d > 0 && coeffs[d] == 0.0 {
        d -= 1;
    }
    d
}

/// Levels of the power ladder T_1, T_2, ..., relative to a start level l0.
/// T_1 costs one level (the affine argument map); T_{a+b} sits one below
/// min(T_a, T_b).
fn ladder_levels(degree: usize, l0: usize) -> BTreeMap<usize, usize> {
    let m = baby_count(degree);
    let mut lev = BTreeMap::new();
    lev.insert(1usize, l0 - 1);
    let mut targets: Vec<usize> = (2..m.min(degree + 1)).collect();
    let mut g = m;
    while g <= degree {
        targets.push(g);
        g <<= 1;
    }
    for j in targets {
        let (a, b) = split_index(j);
        let la = lev[&a];
        let lb = if b == 0 { usize::MAX } else { lev[&b] };
        lev.insert(j, la.min(lb) - 1);
    }
    lev
}

/// T_j = 2 T_a T_b - T_{a-b}; returns (a, b) with a >= b, a + b = j.
fn split_index(j: usize) -> (usize, usize) {
    let a = j.div_ceil(2);
    (a, j - a)
}

/// Highest level the recursive evaluation of a (sub)polynomial can deliver.
fn node_max_level(deg: usize, m: usize, lev: &BTreeMap<usize, usize>) -> usize {
    if deg < m {
        // leaf: all babies aligned to the deepest baby, one rescale
        let baby_min = (1..m).map(|j| lev[&j]).min().expect("baby ladder nonempty");
        return baby_min - 1;
    }
    let g = largest_giant(deg, m);
    let qdeg = deg - g;
    let l_in = if qdeg == 0 { lev[&g] } else { node_max_level(qdeg, m, lev).min(lev[&g]) };
    l_in - 1
}

fn largest_giant(deg: usize, m: usize) -> usize {
    let mut g = m;
    while g * 2 <= deg {
        g *= 2;
    }
    g
}

/// Static depth estimator: levels consumed by `eval_chebyshev` for a given
/// polynomial degree (deterministic, independent of coefficients).
pub fn cheb_eval_depth(degree: usize) -> usize {
    if degree == 0 {
        return 0;
    }
    let l0 = 64usize;
    let m = baby_count(degree);
    let lev = ladder_levels(degree, l0);
    l0 - node_max_level(degree, m, &lev)
}

/// Upper bound on ciphertext-ciphertext multiplications (ladder + giants +
/// recombinations with dense coefficients).
pub fn cheb_eval_ct_mults(degree: usize) -> usize {
    if degree <= 1 {
        return 0;
    }
    let m = baby_count(degree);
    let ladder = ladder_levels(degree, 64).len() - 1; // each entry beyond T_1 is one ct mult
    fn rec(deg: usize, m: usize) -> usize {
        if deg < m {
            return 0;
        }
        let g = largest_giant(deg, m);
        let q = deg - g;
        let node = if q == 0 { 0 } else { 1 + rec(q, m) };
        node + rec(g - 1, m)
    }
    ladder + rec(degree, m)
}

struct EvalEnv<'a> {
    ctx: &'a Context,
    keys: &'a EvalKeys,
    m: usize,
    t: BTreeMap<usize, Ciphertext>,
    ct_mults: usize,
    pt_mults: usize,
}

impl<'a> EvalEnv<'a> {
    fn t_at(&self, j: usize, level: usize) -> Ciphertext {
        mod_switch_to(&self.t[&j], level)
    }

    /// Constant "encryption" (c1 = 0) at an exact level and scale.
    fn trivial_const(&self, c: f64, level: usize, scale: f64) -> Result<Ciphertext> {
        let vals = vec![c; self.ctx.params.slots];
        let pt = self.ctx.encode(&vals, level, scale)?;
        let zero = hefl_ckks::poly::RnsPoly::zero(self.ctx.params.n, level + 1);
        Ok(Ciphertext { c0: pt.poly, c1: zero, level, scale })
    }

    /// Leaf: sum_{j<=deg} c_j T_j at exactly (target_level, target_scale).
    fn leaf(&mut self, coeffs: &[f64], target_level: usize, target_scale: f64) -> Result<Ciphertext> {
        let deg = effective_degree(coeffs);
        if deg == 0 {
            return self.trivial_const(coeffs[0], target_level, target_scale);
        }
        let lin = target_level + 1;
        let q_in = self.ctx.params.prime(lin) as f64;
        let mut acc: Option<Ciphertext> = None;
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            if c == 0.0 {
                continue;
            }
            let tj = self.t_at(j, lin);
            let pt_scale = target_scale * q_in / tj.scale;
            let vals = vec![c; self.ctx.params.slots];
            let pt = self.ctx.encode(&vals, lin, pt_scale)?;
            let term = mult_plain_lazy(self.ctx, &tj, &pt)?;
            self.pt_mults += 1;
            acc = Some(match acc {
                None => term,
                Some(s) => add_drift(self.ctx, &s, &term)?,
            });
        }
        let mut out = rescale(self.ctx, &acc.expect("deg >= 1 leaf"))?;
        // exact by construction; land precisely on the target scale
        out.scale = target_scale;
        if coeffs[0] != 0.0 {
            out = hefl_ckks::add_const(self.ctx, &out, coeffs[0])?;
        }
        Ok(out)
    }

    fn node(&mut self, coeffs: &[f64], target_level: usize, target_scale: f64) -> Result<Ciphertext> {
        let deg = effective_degree(coeffs);
        if deg < self.m {
            return self.leaf(coeffs, target_level, target_scale);
        }
        let g = largest_giant(deg, self.m);
        let (q, r) = cheb_divmod(coeffs, g);
        let lin = target_level + 1;
        let tg = self.t_at(g, lin);
        let q_in = self.ctx.params.prime(lin) as f64;

        let term = if effective_degree(&q) == 0 {
            // constant quotient: plaintext multiply
            let pt_scale = target_scale * q_in / tg.scale;
            let vals = vec![q[0]; self.ctx.params.slots];
            let pt = self.ctx.encode(&vals, lin, pt_scale)?;
            self.pt_mults += 1;
            let mut t = rescale(self.ctx, &mult_plain_lazy(self.ctx, &tg, &pt)?)?;
            t.scale = target_scale;
            t
        } else {
            let q_target_scale = target_scale * q_in / tg.scale;
            let q_ct = self.node(&q, lin, q_target_scale)?;
            self.ct_mults += 1;
            let mut t = hefl_ckks::mult(self.ctx, self.keys, &q_ct, &tg)?;
            t.scale = target_scale;
            t
        };
        if r.iter().all(|&c| c == 0.0) {
            return Ok(term);
        }
        let r_ct = self.node(&r, target_level, target_scale)?;
        hefl_ckks::add(self.ctx, &term, &r_ct)
    }
}

/// Evaluate `approx`'s polynomial at y = input_scale * x, where x is the
/// encrypted value, via Paterson-Stockmeyer over the Chebyshev basis.
/// The steepness factor folds into the affine argument map of T_1, so it
/// consumes no extra level. Output scale is the params default scale.
pub fn eval_chebyshev(
    ctx: &Context,
    keys: &EvalKeys,
    ct: &Ciphertext,
    approx: &ChebApprox,
    input_scale: f64,
) -> Result<(Ciphertext, ChebEvalReport)> {
    let degree = effective_degree(&approx.coeffs);
    let depth = cheb_eval_depth(degree);
    if ct.level < depth {
        return Err(CkksError::LevelExhausted { needed: depth, have: ct.level });
    }
    let start_level = ct.level;
    let (a, b) = approx.interval;

    if degree == 0 {
        let env = EvalEnv { ctx, keys, m: 1, t: BTreeMap::new(), ct_mults: 0, pt_mults: 0 };
        let out = env.trivial_const(approx.coeffs[0], ct.level, ctx.params.scale)?;
        return Ok((out, ChebEvalReport { levels_consumed: 0, ct_mults: 0, pt_mults: 0 }));
    }

    let m = baby_count(degree);
    let mut env = EvalEnv { ctx, keys, m, t: BTreeMap::new(), ct_mults: 0, pt_mults: 0 };

    // T_1 = (2*input_scale*x - (a+b)) / (b-a): one plaintext multiply.
    let alpha = 2.0 * input_scale / (b - a);
    let beta = -(a + b) / (b - a);
    let t1 = {
        let scaled = hefl_ckks::mult_const(ctx, ct, alpha)?;
        env.pt_mults += 1;
        hefl_ckks::add_const(ctx, &scaled, beta)?
    };
    env.t.insert(1, t1);

    // Ladder T_2..T_{m-1} plus giants: T_{a+b} = 2 T_a T_b - T_{a-b}.
    let mut targets: Vec<usize> = (2..m.min(degree + 1)).collect();
    let mut gg = m;
    while gg <= degree {
        targets.push(gg);
        gg <<= 1;
    }
    for j in targets {
        let (ia, ib) = split_index(j);
        let ta = env.t[&ia].clone();
        let prod = if ia == ib {
            hefl_ckks::square(ctx, keys, &ta)?
        } else {
            hefl_ckks::mult(ctx, keys, &ta, &env.t[&ib])?
        };
        env.ct_mults += 1;
        let doubled = add_drift(ctx, &prod, &prod)?;
        let tj = if ia == ib {
            // 2 T_a^2 - 1
            hefl_ckks::add_const(ctx, &doubled, -1.0)?
        } else {
            // 2 T_a T_b - T_{a-b}, drift-tolerant subtraction
            sub_drift(ctx, &doubled, &env.t[&(ia - ib)])?
        };
        env.t.insert(j, tj);
    }

    let lev = ladder_levels(degree, start_level);
    for (j, ct_j) in &env.t {
        debug_assert_eq!(ct_j.level, lev[j], "ladder level mismatch at T_{j}");
    }
    let root_level = node_max_level(degree, m, &lev);
    let out = env.node(&approx.coeffs, root_level, ctx.params.scale)?;
    debug_assert_eq!(out.level, root_level);

    let report = ChebEvalReport {
        levels_consumed: start_level - out.level,
        ct_mults: env.ct_mults,
        pt_mults: env.pt_mults,
    };
    debug_assert_eq!(report.levels_consumed, depth);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divmod_reconstructs() {
        // p = q*T_g + r checked numerically at sample points
        let coeffs: Vec<f64> = (0..=12).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect();
        for g in [4usize, 8] {
            let (q, r) = cheb_divmod(&coeffs, g);
            for i in 0..50 {
                let y = -1.0 + 2.0 * i as f64 / 49.0;
                let p = mirror::clenshaw(&coeffs, -1.0, 1.0, y);
                let qv = mirror::clenshaw(&q, -1.0, 1.0, y);
                let rv = mirror::clenshaw(&r, -1.0, 1.0, y);
                let tg = (g as f64 * y.acos()).cos();
                assert!((p - (qv * tg + rv)).abs() < 1e-9, "g={g} y={y}");
            }
        }
    }

    #[test]
    fn sigmoid_degree32_meets_error_target() {
        let approx = ChebApprox::sigmoid(10.0, (-15.0, 15.0), 32).unwrap();
        assert!(approx.max_error < 1e-2, "max error {}", approx.max_error);
        assert!(approx.meets_target());
        // midpoint and saturation behavior
        assert!((approx.eval_scaled(0.0) - 0.5).abs() < 1e-3);
        assert!(approx.eval_scaled(10.0) > 0.99);
        assert!(approx.eval_scaled(-10.0) < 0.01);
    }

    #[test]
    fn steep_scaled_sigmoid_saturates() {
        let approx = ChebApprox::sigmoid(30.0, (-15.0, 15.0), 32).unwrap();
        // k=30, x=1: argument clamps to the interval edge, value ~ 1
        assert!(approx.eval_scaled(1.0) >= 0.99 - approx.max_error);
    }

    #[test]
    fn low_degree_flagged_not_failed() {
        let approx = ChebApprox::sigmoid(1.0, (-15.0, 15.0), 4).unwrap();
        assert!(!approx.meets_target());
        assert!(approx.max_error > 1e-2);
    }

    #[test]
    fn depth_estimator_values() {
        // degree 32 fits in the published depth-8 budget
        assert!(cheb_eval_depth(32) <= 8, "depth {}", cheb_eval_depth(32));
        assert!(cheb_eval_ct_mults(32) <= 12, "ct mults {}", cheb_eval_ct_mults(32));
        assert!(cheb_eval_depth(8) <= 5);
    }
}
