//! Plaintext mirrors of every kernel. These share no code with the
//! homomorphic paths: straightforward f64 linear algebra and recurrences used
//! as independent oracles in tests and the simulator's mirror mode.

/// A * v for the padded matrix layout used by the diagonal kernel: output
/// slot i holds row (i mod rows_padded) dot v, v replicated at cols_padded.
pub fn mat_vec_plain(
    rows_padded: usize,
    cols_padded: usize,
    at: impl Fn(usize, usize) -> f64,
    v: &[f64],
    slots: usize,
) -> Vec<f64> {
    (0..slots)
        .map(|i| {
            let r = i % rows_padded;
            (0..cols_padded).map(|c| at(r, c) * v[c % v.len().max(1)]).sum()
        })
        .collect()
}

/// Plain matrix product row-major rows x cols times vector of len cols.
pub fn mat_vec_dense(rows: usize, cols: usize, m: &[f64], v: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| (0..cols).map(|c| m[r * cols + c] * v[c]).sum())
        .collect()
}

/// TotalSum mirror: every slot becomes the sum of all slots.
pub fn total_sum_plain(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    vec![s; v.len()]
}

/// Clenshaw evaluation of a Chebyshev series on [a, b] at argument y.
pub fn clenshaw(coeffs: &[f64], a: f64, b: f64, y: f64) -> f64 {
    let t = (2.0 * y - a - b) / (b - a);
    let mut b1 = 0.0f64;
    let mut b2 = 0.0f64;
    for &c in coeffs.iter().skip(1).rev() {
        let next = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = next;
    }
    t * b1 - b2 + coeffs[0]
}

/// Newton-Raphson inversion mirror with affine init x_0 = c0 + c1 * s.
pub fn inverse_iteration(s: f64, c0: f64, c1: f64, iterations: usize) -> f64 {
    let mut x = c0 + c1 * s;
    for _ in 0..iterations {
        x *= 2.0 - s * x;
    }
    x
}

pub fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clenshaw_matches_direct_chebyshev_sum() {
        // coefficients of 1*T_0 + 0.5*T_1 - 0.25*T_2 + 0.125*T_3
        let coeffs = [1.0, 0.5, -0.25, 0.125];
        for i in 0..=20 {
            let t: f64 = -1.0 + 2.0 * i as f64 / 20.0;
            let direct = 1.0 + 0.5 * t - 0.25 * (2.0 * t * t - 1.0)
                + 0.125 * (4.0 * t * t * t - 3.0 * t);
            let got = clenshaw(&coeffs, -1.0, 1.0, t);
            assert!((got - direct).abs() < 1e-12, "t={t}: {got} vs {direct}");
        }
    }

    #[test]
    fn total_sum_mirror() {
        let mut v = vec![0.0; 8];
        for (i, x) in v.iter_mut().enumerate().take(8) {
            *x = (i + 1) as f64;
        }
        let s = total_sum_plain(&v);
        assert!(s.iter().all(|&x| x == 36.0));
    }

    #[test]
    fn dense_matvec() {
        let m = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let out = mat_vec_dense(4, 4, &m, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(out, vec![10.0, 10.0, 10.0, 10.0]);
    }
}
