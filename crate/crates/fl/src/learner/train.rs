//! Forward/backward passes, plain SGD, and DP-SGD (per-sample clipping plus
//! Gaussian noise). Cross-entropy loss over a softmax head; no momentum.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::data::DatasetShard;
use super::model::{Architecture, ModelParams};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged (NaN loss) at epoch {0}")]
    Diverged(usize),
    #[error("empty shard")]
    EmptyShard,
    #[error("learning rate must be positive, got {0}")]
    BadLearningRate(f64),
}

/// DP-SGD knobs. epsilon/delta are reporting labels only: no accountant
/// calibrates them, the noise multiplier is the actual input.
#[derive(Debug, Clone, Copy)]
pub struct DpConfig {
    pub clip_norm: f64,
    pub noise_multiplier: f64,
    pub epsilon_label: f64,
    pub delta_label: f64,
}

/// Per-tensor gradient buffers aligned with `ModelParams::tensors`.
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    fn zeros(model: &ModelParams) -> Self {
        Gradients(model.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect())
    }

    fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for t in &mut self.0 {
            for x in t.iter_mut() {
                *x *= s;
            }
        }
    }

    fn norm(&self) -> f64 {
        self.0.iter().flat_map(|t| t.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    fn clip_to(&mut self, c: f64) {
        let n = self.norm();
        if n > c {
            self.scale(c / n);
        }
    }
}

fn relu(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn dense_forward(w: &[f64], b: &[f64], x: &[f64], out_dim: usize, in_dim: usize) -> Vec<f64> {
    let mut out = b.to_vec();
    for (o, out_val) in out.iter_mut().enumerate().take(out_dim) {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        *out_val += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
    out
}

/// Softmax cross-entropy: returns (loss, dlogits).
fn softmax_ce(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::MIN, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|&e| e / sum).collect();
    let loss = -probs[label].max(1e-300).ln();
    let mut d = probs;
    d[label] -= 1.0;
    (loss, d)
}

/// 3x3 same-padding convolution forward. Input (in_ch, h, w), output (out_ch, h, w).
fn conv3x3_forward(
    w: &[f64],
    b: &[f64],
    x: &[f64],
    in_ch: usize,
    out_ch: usize,
    h: usize,
    wd: usize,
) -> Vec<f64> {
    let mut out = vec![0.0f64; out_ch * h * wd];
    for oc in 0..out_ch {
        for iy in 0..h {
            for ix in 0..wd {
                let mut acc = b[oc];
                for ic in 0..in_ch {
                    for ky in 0..3usize {
                        let sy = iy as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for kx in 0..3usize {
                            let sx = ix as isize + kx as isize - 1;
                            if sx < 0 || sx >= wd as isize {
                                continue;
                            }
                            let wi = ((oc * in_ch + ic) * 3 + ky) * 3 + kx;
                            let xi = (ic * h + sy as usize) * wd + sx as usize;
                            acc += w[wi] * x[xi];
                        }
                    }
                }
                out[(oc * h + iy) * wd + ix] = acc;
            }
        }
    }
    out
}

/// Backward through 3x3 same-padding conv: returns (dW, dB, dX).
#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    w: &[f64],
    x: &[f64],
    dout: &[f64],
    in_ch: usize,
    out_ch: usize,
    h: usize,
    wd: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dw = vec![0.0f64; w.len()];
    let mut db = vec![0.0f64; out_ch];
    let mut dx = vec![0.0f64; x.len()];
    for oc in 0..out_ch {
        for iy in 0..h {
            for ix in 0..wd {
                let g = dout[(oc * h + iy) * wd + ix];
                if g == 0.0 {
                    continue;
                }
                db[oc] += g;
                for ic in 0..in_ch {
                    for ky in 0..3usize {
                        let sy = iy as isize + ky as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for kx in 0..3usize {
                            let sx = ix as isize + kx as isize - 1;
                            if sx < 0 || sx >= wd as isize {
                                continue;
                            }
                            let wi = ((oc * in_ch + ic) * 3 + ky) * 3 + kx;
                            let xi = (ic * h + sy as usize) * wd + sx as usize;
                            dw[wi] += g * x[xi];
                            dx[xi] += g * w[wi];
                        }
                    }
                }
            }
        }
    }
    (dw, db, dx)
}

/// 2x2 max-pool with stride 2: returns pooled values and argmax indices.
fn maxpool2(x: &[f64], ch: usize, h: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = vec![0.0f64; ch * ph * pw];
    let mut arg = vec![0usize; ch * ph * pw];
    for c in 0..ch {
        for py in 0..ph {
            for px in 0..pw {
                let mut best = f64::MIN;
                let mut best_i = 0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let i = (c * h + 2 * py + dy) * w + 2 * px + dx;
                        if x[i] > best {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                out[(c * ph + py) * pw + px] = best;
                arg[(c * ph + py) * pw + px] = best_i;
            }
        }
    }
    (out, arg)
}

/// Loss and parameter gradients for one sample.
pub fn sample_gradient(model: &ModelParams, x: &[f64], label: usize) -> (f64, Gradients) {
    let mut grads = Gradients::zeros(model);
    match &model.arch {
        Architecture::Mlp3 { input, hidden, classes } => {
            let (n0, n1, n2, n3) = (*input, hidden.0, hidden.1, *classes);
            let w1 = &model.tensors[0].data;
            let b1 = &model.tensors[1].data;
            let w2 = &model.tensors[2].data;
            let b2 = &model.tensors[3].data;
            let w3 = &model.tensors[4].data;
            let b3 = &model.tensors[5].data;

            let z1 = dense_forward(w1, b1, x, n1, n0);
            let mut a1 = z1.clone();
            relu(&mut a1);
            let z2 = dense_forward(w2, b2, &a1, n2, n1);
            let mut a2 = z2.clone();
            relu(&mut a2);
            let logits = dense_forward(w3, b3, &a2, n3, n2);
            let (loss, dz3) = softmax_ce(&logits, label);

            // backward
            let mut da2 = vec![0.0f64; n2];
            for o in 0..n3 {
                for i in 0..n2 {
                    grads.0[4][o * n2 + i] += dz3[o] * a2[i];
                    da2[i] += dz3[o] * w3[o * n2 + i];
                }
                grads.0[5][o] += dz3[o];
            }
            let dz2: Vec<f64> =
                da2.iter().zip(&z2).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
            let mut da1 = vec![0.0f64; n1];
            for o in 0..n2 {
                for i in 0..n1 {
                    grads.0[2][o * n1 + i] += dz2[o] * a1[i];
                    da1[i] += dz2[o] * w2[o * n1 + i];
                }
                grads.0[3][o] += dz2[o];
            }
            let dz1: Vec<f64> =
                da1.iter().zip(&z1).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
            for o in 0..n1 {
                for i in 0..n0 {
                    grads.0[0][o * n0 + i] += dz1[o] * x[i];
                }
                grads.0[1][o] += dz1[o];
            }
            (loss, grads)
        }
        Architecture::CnnS { height, width, classes } => {
            let (h, wdt) = (*height, *width);
            let (c1, c2) = (8usize, 16usize);
            let w_c1 = &model.tensors[0].data;
            let b_c1 = &model.tensors[1].data;
            let w_c2 = &model.tensors[2].data;
            let b_c2 = &model.tensors[3].data;
            let w_f1 = &model.tensors[4].data;
            let b_f1 = &model.tensors[5].data;
            let w_f2 = &model.tensors[6].data;
            let b_f2 = &model.tensors[7].data;

            let z1 = conv3x3_forward(w_c1, b_c1, x, 1, c1, h, wdt);
            let mut a1 = z1.clone();
            relu(&mut a1);
            let (p1, arg1) = maxpool2(&a1, c1, h, wdt);
            let (ph1, pw1) = (h / 2, wdt / 2);

            let z2 = conv3x3_forward(w_c2, b_c2, &p1, c1, c2, ph1, pw1);
            let mut a2 = z2.clone();
            relu(&mut a2);
            let (p2, arg2) = maxpool2(&a2, c2, ph1, pw1);
            let (ph2, pw2) = (ph1 / 2, pw1 / 2);
            let flat = c2 * ph2 * pw2;

            let z3 = dense_forward(w_f1, b_f1, &p2, 32, flat);
            let mut a3 = z3.clone();
            relu(&mut a3);
            let logits = dense_forward(w_f2, b_f2, &a3, *classes, 32);
            let (loss, dz4) = softmax_ce(&logits, label);

            let mut da3 = vec![0.0f64; 32];
            for o in 0..*classes {
                for i in 0..32 {
                    grads.0[6][o * 32 + i] += dz4[o] * a3[i];
                    da3[i] += dz4[o] * w_f2[o * 32 + i];
                }
                grads.0[7][o] += dz4[o];
            }
            let dz3: Vec<f64> =
                da3.iter().zip(&z3).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
            let mut dp2 = vec![0.0f64; flat];
            for o in 0..32 {
                for i in 0..flat {
                    grads.0[4][o * flat + i] += dz3[o] * p2[i];
                    dp2[i] += dz3[o] * w_f1[o * flat + i];
                }
                grads.0[5][o] += dz3[o];
            }
            // unpool 2 -> relu mask 2
            let mut da2 = vec![0.0f64; a2.len()];
            for (i, &src) in arg2.iter().enumerate() {
                da2[src] += dp2[i];
            }
            let dz2: Vec<f64> =
                da2.iter().zip(&z2).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
            let (dw2, db2, dp1) = conv3x3_backward(w_c2, &p1, &dz2, c1, c2, ph1, pw1);
            grads.0[2] = dw2;
            grads.0[3] = db2;
            let mut da1 = vec![0.0f64; a1.len()];
            for (i, &src) in arg1.iter().enumerate() {
                da1[src] += dp1[i];
            }
            let dz1: Vec<f64> =
                da1.iter().zip(&z1).map(|(&d, &z)| if z > 0.0 { d } else { 0.0 }).collect();
            let (dw1, db1, _) = conv3x3_backward(w_c1, x, &dz1, 1, c1, h, wdt);
            grads.0[0] = dw1;
            grads.0[1] = db1;
            (loss, grads)
        }
    }
}

pub fn predict(model: &ModelParams, x: &[f64]) -> usize {
    let logits = logits_of(model, x);
    logits
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("NaN logit"))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub fn logits_of(model: &ModelParams, x: &[f64]) -> Vec<f64> {
    match &model.arch {
        Architecture::Mlp3 { input, hidden, classes } => {
            let z1 = dense_forward(&model.tensors[0].data, &model.tensors[1].data, x, hidden.0, *input);
            let mut a1 = z1;
            relu(&mut a1);
            let z2 = dense_forward(&model.tensors[2].data, &model.tensors[3].data, &a1, hidden.1, hidden.0);
            let mut a2 = z2;
            relu(&mut a2);
            dense_forward(&model.tensors[4].data, &model.tensors[5].data, &a2, *classes, hidden.1)
        }
        Architecture::CnnS { height, width, classes } => {
            let (h, w) = (*height, *width);
            let z1 = conv3x3_forward(&model.tensors[0].data, &model.tensors[1].data, x, 1, 8, h, w);
            let mut a1 = z1;
            relu(&mut a1);
            let (p1, _) = maxpool2(&a1, 8, h, w);
            let z2 = conv3x3_forward(&model.tensors[2].data, &model.tensors[3].data, &p1, 8, 16, h / 2, w / 2);
            let mut a2 = z2;
            relu(&mut a2);
            let (p2, _) = maxpool2(&a2, 16, h / 2, w / 2);
            let flat = 16 * (h / 4) * (w / 4);
            let z3 = dense_forward(&model.tensors[4].data, &model.tensors[5].data, &p2, 32, flat);
            let mut a3 = z3;
            relu(&mut a3);
            dense_forward(&model.tensors[6].data, &model.tensors[7].data, &a3, *classes, 32)
        }
    }
}

pub fn accuracy(model: &ModelParams, shard: &DatasetShard) -> f64 {
    if shard.features.is_empty() {
        return 0.0;
    }
    let correct = shard
        .features
        .iter()
        .zip(&shard.labels)
        .filter(|(x, &y)| predict(model, x) == y)
        .count();
    correct as f64 / shard.features.len() as f64
}

pub fn mean_loss(model: &ModelParams, shard: &DatasetShard) -> f64 {
    let total: f64 = shard
        .features
        .iter()
        .zip(&shard.labels)
        .map(|(x, &y)| sample_gradient(model, x, y).0)
        .sum();
    total / shard.features.len().max(1) as f64
}

pub const DEFAULT_BATCH: usize = 32;

/// E epochs of mini-batch SGD. `grad_sign` = -1.0 turns descent into ascent
/// (used by the gradient-manipulation attack); honest updates pass +1.0.
pub fn sgd_epochs<R: Rng>(
    model: &ModelParams,
    shard: &DatasetShard,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    grad_sign: f64,
    rng: &mut R,
) -> Result<ModelParams, TrainError> {
    if shard.features.is_empty() {
        return Err(TrainError::EmptyShard);
    }
    if lr < 0.0 {
        return Err(TrainError::BadLearningRate(lr));
    }
    let mut current = model.clone();
    let n = shard.features.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..epochs {
        order.shuffle(rng);
        for batch in order.chunks(batch_size.max(1)) {
            let mut acc = Gradients::zeros(&current);
            let mut loss_acc = 0.0;
            for &i in batch {
                let (loss, g) = sample_gradient(&current, &shard.features[i], shard.labels[i]);
                loss_acc += loss;
                acc.add_assign(&g);
            }
            if !loss_acc.is_finite() {
                return Err(TrainError::Diverged(epoch));
            }
            acc.scale(grad_sign / batch.len() as f64);
            apply_step(&mut current, &acc, lr);
        }
    }
    Ok(current)
}

fn apply_step(model: &mut ModelParams, grads: &Gradients, lr: f64) {
    for (t, g) in model.tensors.iter_mut().zip(&grads.0) {
        for (w, &d) in t.data.iter_mut().zip(g) {
            *w -= lr * d;
        }
    }
}

/// Honest local update: E epochs of mini-batch SGD.
pub fn local_update<R: Rng>(
    model: &ModelParams,
    shard: &DatasetShard,
    epochs: usize,
    lr: f64,
    rng: &mut R,
) -> Result<ModelParams, TrainError> {
    sgd_epochs(model, shard, epochs, lr, DEFAULT_BATCH, 1.0, rng)
}

/// DP-SGD local update: per-sample gradients clipped to `clip_norm`,
/// averaged, Gaussian noise of std noise_multiplier * clip_norm / batch
/// added per coordinate.
pub fn dp_local_update<R: Rng>(
    model: &ModelParams,
    shard: &DatasetShard,
    epochs: usize,
    lr: f64,
    dp: &DpConfig,
    rng: &mut R,
) -> Result<ModelParams, TrainError> {
    if shard.features.is_empty() {
        return Err(TrainError::EmptyShard);
    }
    let mut current = model.clone();
    let n = shard.features.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..epochs {
        order.shuffle(rng);
        for batch in order.chunks(DEFAULT_BATCH) {
            let mut acc = Gradients::zeros(&current);
            let mut loss_acc = 0.0;
            for &i in batch {
                let (loss, mut g) = sample_gradient(&current, &shard.features[i], shard.labels[i]);
                loss_acc += loss;
                g.clip_to(dp.clip_norm);
                acc.add_assign(&g);
            }
            if !loss_acc.is_finite() {
                return Err(TrainError::Diverged(epoch));
            }
            acc.scale(1.0 / batch.len() as f64);
            let noise_std = dp.noise_multiplier * dp.clip_norm / batch.len() as f64;
            if noise_std > 0.0 {
                for t in &mut acc.0 {
                    for x in t.iter_mut() {
                        // Box-Muller keeps rand_distr out of the hot loop deps
                        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                        let u2: f64 = rng.gen();
                        let z = (-2.0 * u1.ln()).sqrt()
                            * (2.0 * std::f64::consts::PI * u2).cos();
                        *x += noise_std * z;
                    }
                }
            }
            apply_step(&mut current, &acc, lr);
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::data::gaussian_blobs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn tiny_shard(dim: usize, classes: usize) -> DatasetShard {
        gaussian_blobs(classes, dim, 8, 0.4, 99)
    }

    #[test]
    fn finite_difference_gradient_check() {
        // ~20-parameter model: gradients vs central differences, rel < 1e-4
        let arch = Architecture::Mlp3 { input: 2, hidden: (2, 2), classes: 2 };
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut model = arch.xavier_init(&mut rng).unwrap();
        // nudge all parameters off zero so no pre-activation sits exactly on
        // a ReLU kink (zero biases put them there by construction)
        for t in &mut model.tensors {
            for w in t.data.iter_mut() {
                *w += rng.gen_range(0.05..0.15);
            }
        }
        let x = [0.3, -0.7];
        let label = 1usize;
        let (_, grads) = sample_gradient(&model, &x, label);
        let flat_grad: Vec<f64> = grads.0.iter().flatten().cloned().collect();
        let theta = model.flatten();
        let eps = 1e-6;
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            tp[i] += eps;
            let lp = sample_gradient(&model.unflatten(&tp), &x, label).0;
            let mut tm = theta.clone();
            tm[i] -= eps;
            let lm = sample_gradient(&model.unflatten(&tm), &x, label).0;
            let fd = (lp - lm) / (2.0 * eps);
            let denom = fd.abs().max(flat_grad[i].abs()).max(1e-8);
            assert!(
                (fd - flat_grad[i]).abs() / denom < 1e-4,
                "param {i}: analytic {} vs fd {fd}",
                flat_grad[i]
            );
        }
    }

    #[test]
    fn finite_difference_cnn_spot_check() {
        let arch = Architecture::cnn_s(4, 4, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut model = arch.xavier_init(&mut rng).unwrap();
        for t in &mut model.tensors {
            for w in t.data.iter_mut() {
                *w += rng.gen_range(0.05..0.15);
            }
        }
        let x: Vec<f64> = (0..16).map(|i| (i as f64) / 16.0).collect();
        let (_, grads) = sample_gradient(&model, &x, 0);
        let flat_grad: Vec<f64> = grads.0.iter().flatten().cloned().collect();
        let theta = model.flatten();
        let eps = 1e-6;
        // spot-check a spread of parameters across layers
        for i in (0..theta.len()).step_by(theta.len() / 23) {
            let mut tp = theta.clone();
            tp[i] += eps;
            let lp = sample_gradient(&model.unflatten(&tp), &x, 0).0;
            let mut tm = theta.clone();
            tm[i] -= eps;
            let lm = sample_gradient(&model.unflatten(&tm), &x, 0).0;
            let fd = (lp - lm) / (2.0 * eps);
            let denom = fd.abs().max(flat_grad[i].abs()).max(1e-8);
            assert!((fd - flat_grad[i]).abs() / denom < 1e-4, "param {i}");
        }
    }

    #[test]
    fn zero_lr_is_identity() {
        let shard = tiny_shard(4, 2);
        let arch = Architecture::mlp3(4, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let model = arch.xavier_init(&mut rng).unwrap();
        let out = local_update(&model, &shard, 2, 0.0, &mut rng).unwrap();
        assert_eq!(out, model);
    }

    #[test]
    fn single_step_matches_closed_form() {
        // full-batch single sample: theta' = theta - lr * grad
        let arch = Architecture::Mlp3 { input: 2, hidden: (2, 2), classes: 2 };
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let model = arch.xavier_init(&mut rng).unwrap();
        let shard = DatasetShard {
            features: vec![vec![0.5, -0.5]],
            labels: vec![1],
            class_count: 2,
            image_shape: None,
        };
        let lr = 0.1;
        let (_, g) = sample_gradient(&model, &shard.features[0], 1);
        let expect: Vec<f64> = model
            .flatten()
            .iter()
            .zip(g.0.iter().flatten())
            .map(|(t, d)| t - lr * d)
            .collect();
        let got = sgd_epochs(&model, &shard, 1, lr, 8, 1.0, &mut rng).unwrap().flatten();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_decreases_on_separable_blobs() {
        let shard = gaussian_blobs(2, 4, 40, 0.3, 123);
        let arch = Architecture::mlp3(4, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let model = arch.xavier_init(&mut rng).unwrap();
        let before = mean_loss(&model, &shard);
        let trained = local_update(&model, &shard, 5, 0.2, &mut rng).unwrap();
        let after = mean_loss(&trained, &shard);
        assert!(after < before, "loss {before} -> {after}");
        assert!(accuracy(&trained, &shard) > 0.8);
    }

    #[test]
    fn dp_with_zero_noise_and_huge_clip_matches_sgd() {
        let shard = tiny_shard(4, 2);
        let arch = Architecture::mlp3(4, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let model = arch.xavier_init(&mut rng).unwrap();
        let dp = DpConfig {
            clip_norm: f64::MAX,
            noise_multiplier: 0.0,
            epsilon_label: f64::INFINITY,
            delta_label: 0.0,
        };
        let mut r1 = ChaCha20Rng::seed_from_u64(55);
        let mut r2 = ChaCha20Rng::seed_from_u64(55);
        let a = dp_local_update(&model, &shard, 1, 0.05, &dp, &mut r1).unwrap();
        let b = local_update(&model, &shard, 1, 0.05, &mut r2).unwrap();
        for (x, y) in a.flatten().iter().zip(b.flatten().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dp_clipping_bounds_per_sample_norm() {
        let arch = Architecture::mlp3(4, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let model = arch.xavier_init(&mut rng).unwrap();
        let shard = tiny_shard(4, 2);
        let c = 0.01; // small enough that every gradient gets clipped
        for (x, &y) in shard.features.iter().zip(&shard.labels) {
            let (_, mut g) = sample_gradient(&model, x, y);
            let before = g.norm();
            g.clip_to(c);
            let after = g.norm();
            assert!(after <= c + 1e-12);
            if before >= c {
                assert!((after - c).abs() < 1e-9, "clipped norm should sit at C");
            }
        }
    }

    #[test]
    fn empty_shard_rejected() {
        let arch = Architecture::mlp3(4, 2);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let model = arch.xavier_init(&mut rng).unwrap();
        let empty = DatasetShard {
            features: vec![],
            labels: vec![],
            class_count: 2,
            image_shape: None,
        };
        assert!(matches!(
            local_update(&model, &empty, 1, 0.1, &mut rng),
            Err(TrainError::EmptyShard)
        ));
    }
}
