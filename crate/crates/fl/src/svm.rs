//! Soft-margin SVM with polynomial kernels, trained by SMO-style dual
//! coordinate ascent over a cached kernel matrix. Labels are {0, 1} with 1 =
//! honest; internally mapped to {-1, +1}.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training requires both classes present")]
    SingleClass,
    #[error("solver failed to converge ({kkt_violations} KKT violations after {passes} passes)")]
    NonConvergence { kkt_violations: usize, passes: usize },
    #[error("empty training set")]
    Empty,
}

#[derive(Debug, Clone, Copy)]
pub struct SvmConfig {
    pub c: f64,
    pub tol: f64,
    pub degree: usize,
    /// gamma defaults to 1/dim when None.
    pub gamma: Option<f64>,
    pub coef0: f64,
    pub max_stable_passes: usize,
    pub hard_pass_cap: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            degree: 1,
            gamma: None,
            coef0: 1.0,
            max_stable_passes: 3,
            hard_pass_cap: 400,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub degree: usize,
    pub gamma: f64,
    pub coef0: f64,
}

impl SvmModel {
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        poly_kernel(a, b, self.gamma, self.coef0, self.degree)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &c)| c * self.kernel(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.decision(x) > 0.0)
    }

    pub fn n_sv(&self) -> usize {
        self.support_vectors.len()
    }
}

pub fn poly_kernel(a: &[f64], b: &[f64], gamma: f64, coef0: f64, degree: usize) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (gamma * dot + coef0).powi(degree as i32)
}

pub fn train_svm(x: &[Vec<f64>], y01: &[u8], cfg: &SvmConfig) -> Result<SvmModel, SvmError> {
    let n = x.len();
    if n == 0 {
        return Err(SvmError::Empty);
    }
    let pos = y01.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == n {
        return Err(SvmError::SingleClass);
    }
    let dim = x[0].len();
    let gamma = cfg.gamma.unwrap_or(1.0 / dim as f64);
    let y: Vec<f64> = y01.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    // cached kernel matrix (n is a few thousand at most)
    let mut k = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let v = poly_kernel(&x[i], &x[j], gamma, cfg.coef0, cfg.degree);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    let mut alpha = vec![0.0f64; n];
    let mut b = 0.0f64;
    let f = |alpha: &[f64], b: f64, i: usize, k: &[f64], y: &[f64]| -> f64 {
        let mut acc = b;
        for j in 0..n {
            if alpha[j] != 0.0 {
                acc += alpha[j] * y[j] * k[j * n + i];
            }
        }
        acc
    };

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut stable = 0usize;
    let mut passes = 0usize;
    while stable < cfg.max_stable_passes {
        if passes >= cfg.hard_pass_cap {
            let violations = (0..n)
                .filter(|&i| {
                    let e = f(&alpha, b, i, &k, &y) - y[i];
                    (y[i] * e < -cfg.tol && alpha[i] < cfg.c)
                        || (y[i] * e > cfg.tol && alpha[i] > 0.0)
                })
                .count();
            return Err(SvmError::NonConvergence { kkt_violations: violations, passes });
        }
        passes += 1;
        let mut changed = 0usize;
        for i in 0..n {
            let ei = f(&alpha, b, i, &k, &y) - y[i];
            if !((y[i] * ei < -cfg.tol && alpha[i] < cfg.c)
                || (y[i] * ei > cfg.tol && alpha[i] > 0.0))
            {
                continue;
            }
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let ej = f(&alpha, b, j, &k, &y) - y[j];
            let (ai_old, aj_old) = (alpha[i], alpha[j]);
            let (lo, hi) = if (y[i] - y[j]).abs() > 1e-12 {
                ((aj_old - ai_old).max(0.0), (cfg.c + aj_old - ai_old).min(cfg.c))
            } else {
                ((ai_old + aj_old - cfg.c).max(0.0), (ai_old + aj_old).min(cfg.c))
            };
            if hi - lo < 1e-12 {
                continue;
            }
            let eta = 2.0 * k[i * n + j] - k[i * n + i] - k[j * n + j];
            if eta >= 0.0 {
                continue;
            }
            let mut aj = aj_old - y[j] * (ei - ej) / eta;
            aj = aj.clamp(lo, hi);
            if (aj - aj_old).abs() < 1e-7 {
                continue;
            }
            let ai = ai_old + y[i] * y[j] * (aj_old - aj);
            alpha[i] = ai;
            alpha[j] = aj;
            let b1 = b - ei
                - y[i] * (ai - ai_old) * k[i * n + i]
                - y[j] * (aj - aj_old) * k[i * n + j];
            let b2 = b - ej
                - y[i] * (ai - ai_old) * k[i * n + j]
                - y[j] * (aj - aj_old) * k[j * n + j];
            b = if ai > 0.0 && ai < cfg.c {
                b1
            } else if aj > 0.0 && aj < cfg.c {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            changed += 1;
        }
        if changed == 0 {
            stable += 1;
        } else {
            stable = 0;
        }
    }

    const SV_TOL: f64 = 1e-8;
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if alpha[i] > SV_TOL {
            support_vectors.push(x[i].clone());
            dual_coef.push(alpha[i] * y[i]);
        }
    }
    Ok(SvmModel { support_vectors, dual_coef, bias: b, degree: cfg.degree, gamma, coef0: cfg.coef0 })
}

/// F1 with 1 (honest) as the positive class.
pub fn f1_score(predictions: &[u8], labels: &[u8]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fal_n = 0usize;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fal_n += 1,
            _ => {}
        }
    }
    if 2 * tp + fp + fal_n == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fal_n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs_2d(n_per: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for class in 0..2u8 {
            let cx = if class == 1 { sep / 2.0 } else { -sep / 2.0 };
            for _ in 0..n_per {
                xs.push(vec![cx + 0.3 * rng.gen_range(-1.0..1.0), 0.3 * rng.gen_range(-1.0..1.0)]);
                ys.push(class);
            }
        }
        (xs, ys)
    }

    #[test]
    fn separable_blobs_perfect_f1_with_linear_kernel() {
        let (xs, ys) = blobs_2d(40, 3.0, 1);
        let model = train_svm(&xs, &ys, &SvmConfig::default()).unwrap();
        let preds: Vec<u8> = xs.iter().map(|x| model.predict(x)).collect();
        assert_eq!(f1_score(&preds, &ys), 1.0);
        assert!(model.n_sv() <= xs.len());
    }

    #[test]
    fn xor_needs_quadratic_kernel() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            for (sx, sy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                xs.push(vec![sx + 0.2 * rng.gen_range(-1.0..1.0), sy + 0.2 * rng.gen_range(-1.0..1.0)]);
                ys.push(u8::from(sx * sy > 0.0));
            }
        }
        let linear = train_svm(&xs, &ys, &SvmConfig::default()).unwrap();
        let preds: Vec<u8> = xs.iter().map(|x| linear.predict(x)).collect();
        let f1_linear = f1_score(&preds, &ys);
        assert!(f1_linear < 0.8, "linear should fail on XOR, got {f1_linear}");

        let quad = train_svm(&xs, &ys, &SvmConfig { degree: 2, ..Default::default() }).unwrap();
        let preds: Vec<u8> = xs.iter().map(|x| quad.predict(x)).collect();
        let f1_quad = f1_score(&preds, &ys);
        assert!(f1_quad > 0.95, "quadratic kernel on XOR got {f1_quad}");
    }

    #[test]
    fn decision_matches_independent_kernel_sum() {
        let (xs, ys) = blobs_2d(25, 2.0, 3);
        let model = train_svm(&xs, &ys, &SvmConfig { degree: 2, ..Default::default() }).unwrap();
        for x in xs.iter().take(10) {
            // brute-force oracle: explicit sum over stored support vectors
            let mut acc = model.bias;
            for (sv, &c) in model.support_vectors.iter().zip(&model.dual_coef) {
                let dot: f64 = sv.iter().zip(x).map(|(a, b)| a * b).sum();
                acc += c * (model.gamma * dot + model.coef0).powi(2);
            }
            assert!((acc - model.decision(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![vec![1.0], vec![2.0]];
        assert!(matches!(train_svm(&xs, &[1, 1], &SvmConfig::default()), Err(SvmError::SingleClass)));
        assert!(matches!(train_svm(&[], &[], &SvmConfig::default()), Err(SvmError::Empty)));
    }

    #[test]
    fn f1_edge_cases() {
        assert_eq!(f1_score(&[1, 1, 0, 0], &[1, 1, 0, 0]), 1.0);
        assert_eq!(f1_score(&[0, 0], &[1, 1]), 0.0);
        assert!((f1_score(&[1, 0, 1, 0], &[1, 1, 0, 0]) - 0.5).abs() < 1e-12);
    }
}
