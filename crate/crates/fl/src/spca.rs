//! Supervised PCA over shadow-update features.
//!
//! The default objective blends the label-kernel alignment with a small
//! variance term: maximize tr(U^T Z^T (K_y + mu I) Z U) over orthonormal U,
//! where Z is the row-centered data and K_y the label delta kernel. With
//! binary labels the supervised part has rank 1 (centering collapses the two
//! class indicators), so the mu I term is what lets dim > 1 components carry
//! meaningful directions; mu defaults to 1e-3 times the mean diagonal of
//! K_y. A pure label-kernel mode (variance directions fill the exhausted
//! rank) and a correlation-ranked PCA mode are selectable.
//!
//! Solved matrix-free: orthogonal (subspace) iteration on the operator
//! v -> Z^T (K_y + mu I) Z v followed by a small Rayleigh-Ritz eigensolve.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpcaError {
    #[error("requested dim {dim} exceeds min(features {d}, samples {n})")]
    DimTooLarge { dim: usize, d: usize, n: usize },
    #[error("need at least one sample")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcaMode {
    /// K_y + mu I blend (default).
    Blended,
    /// Pure label-kernel objective; rank-exhausted components fall back to
    /// variance directions (count reported in `variance_filled`).
    PureBarshan,
    /// Plain PCA components re-ranked by |correlation with the labels|.
    CorrRankedPca,
}

#[derive(Debug, Clone)]
pub struct SpcaModel {
    /// dim rows, each of length d, orthonormal.
    pub projection: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub dim: usize,
    pub input_dim: usize,
    pub mode: SpcaMode,
    /// Components filled from variance directions after the supervised rank
    /// ran out (PureBarshan only).
    pub variance_filled: usize,
    /// Ritz values of the retained components.
    pub eigenvalues: Vec<f64>,
}

impl SpcaModel {
    /// Project a raw feature vector: U (x - mean).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.projection
            .iter()
            .map(|row| row.iter().zip(x).zip(&self.mean).map(|((&u, &xi), &m)| u * (xi - m)).sum())
            .collect()
    }

    /// Projection applied without centering (the compiled pipeline adds the
    /// centering as a plaintext bias instead).
    pub fn project_uncentered(&self, x: &[f64]) -> Vec<f64> {
        self.projection
            .iter()
            .map(|row| row.iter().zip(x).map(|(&u, &xi)| u * xi).sum())
            .collect()
    }

    /// -U * mean, the bias that completes `project_uncentered`.
    pub fn centering_bias(&self) -> Vec<f64> {
        self.projection
            .iter()
            .map(|row| -row.iter().zip(&self.mean).map(|(&u, &m)| u * m).sum::<f64>())
            .collect()
    }
}

struct Centered<'a> {
    rows: &'a [Vec<f64>],
    mean: Vec<f64>,
}

impl<'a> Centered<'a> {
    fn new(rows: &'a [Vec<f64>]) -> Self {
        let n = rows.len();
        let d = rows[0].len();
        let mut mean = vec![0.0f64; d];
        for r in rows {
            for (m, &x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        Self { rows, mean }
    }

    /// w = Z v (n-vector of centered dot products).
    fn forward(&self, v: &[f64]) -> Vec<f64> {
        let mv: f64 = self.mean.iter().zip(v).map(|(m, x)| m * x).sum();
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - mv)
            .collect()
    }

    /// out = Z^T w (d-vector).
    fn backward(&self, w: &[f64]) -> Vec<f64> {
        let d = self.mean.len();
        let mut out = vec![0.0f64; d];
        for (r, &wi) in self.rows.iter().zip(w) {
            for (o, &x) in out.iter_mut().zip(r) {
                *o += wi * x;
            }
        }
        let wsum: f64 = w.iter().sum();
        for (o, &m) in out.iter_mut().zip(&self.mean) {
            *o -= wsum * m;
        }
        out
    }
}

/// (K_y w)_i = sum over same-label j of w_j.
fn label_kernel_apply(labels: &[u8], w: &[f64]) -> Vec<f64> {
    let mut class_sum = [0.0f64; 256];
    for (&l, &wi) in labels.iter().zip(w) {
        class_sum[l as usize] += wi;
    }
    labels.iter().map(|&l| class_sum[l as usize]).collect()
}

/// Modified Gram-Schmidt, run twice for orthonormality near 1e-14.
fn orthonormalize(basis: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..basis.len() {
            for j in 0..i {
                let dot: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = basis.split_at_mut(i);
                for (x, &y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= dot * y;
                }
            }
            let norm: f64 = basis[i].iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            basis[i].iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// Jacobi eigensolver for a small symmetric matrix (row-major), descending.
fn jacobi_eigen(a: &mut [f64], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut v = vec![0.0f64; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..k {
            for q in (p + 1)..k {
                off += a[p * k + q] * a[p * k + q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = a[p * k + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * k + q] - a[p * k + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let aip = a[i * k + p];
                    let aiq = a[i * k + q];
                    a[i * k + p] = c * aip - s * aiq;
                    a[i * k + q] = s * aip + c * aiq;
                }
                for i in 0..k {
                    let api = a[p * k + i];
                    let aqi = a[q * k + i];
                    a[p * k + i] = c * api - s * aqi;
                    a[q * k + i] = s * api + c * aqi;
                }
                for i in 0..k {
                    let vip = v[i * k + p];
                    let viq = v[i * k + q];
                    v[i * k + p] = c * vip - s * viq;
                    v[i * k + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..k).map(|i| (a[i * k + i], i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).expect("finite eigenvalues"));
    let vals = pairs.iter().map(|&(l, _)| l).collect();
    let vecs = pairs.iter().map(|&(_, idx)| (0..k).map(|i| v[i * k + idx]).collect()).collect();
    (vals, vecs)
}

/// Subspace iteration on a symmetric operator, returning (eigenvalues,
/// orthonormal eigenvector rows), descending.
fn top_eigenpairs(
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    d: usize,
    k: usize,
    iters: usize,
    rng: &mut ChaCha20Rng,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut basis: Vec<Vec<f64>> =
        (0..k).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    orthonormalize(&mut basis);
    for _ in 0..iters {
        let mut next: Vec<Vec<f64>> = basis.iter().map(|b| op(b)).collect();
        orthonormalize(&mut next);
        basis = next;
    }
    // Rayleigh-Ritz within the converged span
    let images: Vec<Vec<f64>> = basis.iter().map(|b| op(b)).collect();
    let mut small = vec![0.0f64; k * k];
    for i in 0..k {
        for j in 0..k {
            small[i * k + j] = basis[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum();
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let m = 0.5 * (small[i * k + j] + small[j * k + i]);
            small[i * k + j] = m;
            small[j * k + i] = m;
        }
    }
    let (vals, coeffs) = jacobi_eigen(&mut small, k);
    let mut rows: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|c| {
            let mut row = vec![0.0f64; d];
            for (ci, b) in c.iter().zip(&basis) {
                for (r, &x) in row.iter_mut().zip(b) {
                    *r += ci * x;
                }
            }
            row
        })
        .collect();
    orthonormalize(&mut rows);
    (vals, rows)
}

const ITERS: usize = 60;

pub fn fit_spca(
    features: &[Vec<f64>],
    labels: &[u8],
    dim: usize,
    mode: SpcaMode,
    seed: u64,
) -> Result<SpcaModel, SpcaError> {
    let n = features.len();
    if n == 0 {
        return Err(SpcaError::Empty);
    }
    let d = features[0].len();
    if dim > d.min(n) {
        return Err(SpcaError::DimTooLarge { dim, d, n });
    }
    let z = Centered::new(features);
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5043_4153);

    // mean diagonal of the delta kernel is 1, so the default blend weight is
    // 1e-3; the variance term only resolves directions the rank-deficient
    // supervised term leaves free.
    let mu = 1e-3;

    let (vals, mut rows, variance_filled) = match mode {
        SpcaMode::Blended => {
            let op = |v: &[f64]| {
                let w = z.forward(v);
                let mut u = label_kernel_apply(labels, &w);
                for (ui, &wi) in u.iter_mut().zip(&w) {
                    *ui += mu * wi;
                }
                z.backward(&u)
            };
            let (vals, rows) = top_eigenpairs(&op, d, dim, ITERS, &mut rng);
            (vals, rows, 0)
        }
        SpcaMode::PureBarshan => {
            let op = |v: &[f64]| {
                let w = z.forward(v);
                let u = label_kernel_apply(labels, &w);
                z.backward(&u)
            };
            let (vals, mut rows) = top_eigenpairs(&op, d, dim, ITERS, &mut rng);
            // components past the supervised rank carry ~zero eigenvalue;
            // replace them with variance directions orthogonal to the rest
            let lead = vals[0].max(1e-300);
            let keep = vals.iter().take_while(|&&l| l > 1e-9 * lead).count().max(1);
            let fill = dim - keep.min(dim);
            if fill > 0 {
                let kept: Vec<Vec<f64>> = rows[..keep].to_vec();
                let op_var = |v: &[f64]| {
                    // deflate kept directions, then apply the covariance
                    let mut x = v.to_vec();
                    for kr in &kept {
                        let dot: f64 = kr.iter().zip(&x).map(|(a, b)| a * b).sum();
                        for (xi, &ki) in x.iter_mut().zip(kr) {
                            *xi -= dot * ki;
                        }
                    }
                    let mut out = z.backward(&z.forward(&x));
                    for kr in &kept {
                        let dot: f64 = kr.iter().zip(&out).map(|(a, b)| a * b).sum();
                        for (oi, &ki) in out.iter_mut().zip(kr) {
                            *oi -= dot * ki;
                        }
                    }
                    out
                };
                let (_, var_rows) = top_eigenpairs(&op_var, d, fill, ITERS, &mut rng);
                rows.truncate(keep);
                rows.extend(var_rows);
                orthonormalize(&mut rows);
            }
            (vals, rows, fill)
        }
        SpcaMode::CorrRankedPca => {
            let op = |v: &[f64]| z.backward(&z.forward(v));
            let extra = (dim + 8).min(d.min(n));
            let (_, rows_all) = top_eigenpairs(&op, d, extra, ITERS, &mut rng);
            // rank by |correlation of component scores with the labels|
            let y_mean = labels.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64;
            let mut ranked: Vec<(f64, Vec<f64>)> = rows_all
                .into_iter()
                .map(|row| {
                    let scores = z.forward(&row);
                    let s_mean = scores.iter().sum::<f64>() / n as f64;
                    let mut cov = 0.0;
                    let mut vs = 0.0;
                    let mut vy = 0.0;
                    for (&s, &l) in scores.iter().zip(labels) {
                        let ds = s - s_mean;
                        let dy = f64::from(l) - y_mean;
                        cov += ds * dy;
                        vs += ds * ds;
                        vy += dy * dy;
                    }
                    let corr = if vs * vy > 0.0 { (cov / (vs * vy).sqrt()).abs() } else { 0.0 };
                    (corr, row)
                })
                .collect();
            ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite correlations"));
            let rows: Vec<Vec<f64>> = ranked.into_iter().take(dim).map(|(_, r)| r).collect();
            let vals = vec![0.0; rows.len()];
            (vals, rows, 0)
        }
    };

    orthonormalize(&mut rows);
    Ok(SpcaModel {
        projection: rows,
        mean: z.mean,
        dim,
        input_dim: d,
        mode,
        variance_filled,
        eigenvalues: vals,
    })
}
