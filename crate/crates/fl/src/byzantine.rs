//! The four Byzantine behaviors as pluggable update generators: backdoor
//! trigger poisoning, binary label flipping, label shuffling, and gradient
//! ascent. Each is usable both in the FL simulation and for shadow-data
//! forking. All attacks are deterministic under their seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::learner::data::DatasetShard;
use crate::learner::model::ModelParams;
use crate::learner::train::{local_update, sgd_epochs, DpConfig, TrainError, DEFAULT_BATCH};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("backdoor requires image-shaped features")]
    NotImages,
    #[error("trigger of {size} pixels at {pos:?} exceeds the {h}x{w} image")]
    TriggerOutOfBounds { size: usize, pos: (usize, usize), h: usize, w: usize },
    #[error("poison fraction {0} must lie in (0, 1]")]
    BadPoisonFraction(f64),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    /// Embed a square-ish trigger patch of `trigger_size` pixels at
    /// `position`, relabel to `target_label`, on `poison_fraction` of the
    /// shard, then train honestly on the poisoned data.
    Backdoor {
        trigger_size: usize,
        position: (usize, usize),
        target_label: usize,
        poison_fraction: f64,
    },
    /// Swap the two classes of `class_pair`.
    LabelFlip { class_pair: (usize, usize) },
    /// Permute the label multiset.
    LabelShuffle,
    /// Sign-negated gradient steps each batch, magnitude unchanged.
    GradAscent,
}

impl AttackSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttackSpec::Backdoor { .. } => "backdoor",
            AttackSpec::LabelFlip { .. } => "label_flip",
            AttackSpec::LabelShuffle => "label_shuffle",
            AttackSpec::GradAscent => "grad_ascent",
        }
    }
}

/// Trigger footprint: the first `size` cells, row-major, of the bounding
/// square with side ceil(sqrt(size)). A 4-pixel trigger is a 2x2 square.
pub fn trigger_cells(size: usize) -> Vec<(usize, usize)> {
    let side = (size as f64).sqrt().ceil() as usize;
    (0..size).map(|i| (i / side, i % side)).collect()
}

/// Set the trigger pixels to maximum intensity in place.
pub fn apply_trigger(
    image: &mut [f64],
    shape: (usize, usize),
    size: usize,
    position: (usize, usize),
) -> Result<(), AttackError> {
    let (h, w) = shape;
    let cells = trigger_cells(size);
    for &(dy, dx) in &cells {
        let (y, x) = (position.0 + dy, position.1 + dx);
        if y >= h || x >= w {
            return Err(AttackError::TriggerOutOfBounds { size, pos: position, h, w });
        }
        image[y * w + x] = 1.0;
    }
    Ok(())
}

/// Poison ceil(fraction * n) samples: trigger plus target label. Non-trigger
/// pixels are untouched.
pub fn poison_shard(
    shard: &DatasetShard,
    trigger_size: usize,
    position: (usize, usize),
    target_label: usize,
    poison_fraction: f64,
    seed: u64,
) -> Result<DatasetShard, AttackError> {
    if !(0.0 < poison_fraction && poison_fraction <= 1.0) {
        return Err(AttackError::BadPoisonFraction(poison_fraction));
    }
    let shape = shard.image_shape.ok_or(AttackError::NotImages)?;
    let mut out = shard.clone();
    let n = out.len();
    let k = (poison_fraction * n as f64).ceil() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    for &i in idx.iter().take(k) {
        apply_trigger(&mut out.features[i], shape, trigger_size, position)?;
        out.labels[i] = target_label;
    }
    Ok(out)
}

/// Swap the two classes; classes absent from the shard are a no-op.
pub fn flip_labels(shard: &DatasetShard, class_pair: (usize, usize)) -> DatasetShard {
    let mut out = shard.clone();
    for l in out.labels.iter_mut() {
        if *l == class_pair.0 {
            *l = class_pair.1;
        } else if *l == class_pair.1 {
            *l = class_pair.0;
        }
    }
    out
}

/// Permute the label multiset (histogram preserved).
pub fn shuffle_labels(shard: &DatasetShard, seed: u64) -> DatasetShard {
    let mut out = shard.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    out.labels.shuffle(&mut rng);
    out
}

/// One Byzantine local update implementing `spec`, from global model `theta`.
pub fn dishonest_update(
    theta: &ModelParams,
    shard: &DatasetShard,
    spec: &AttackSpec,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<ModelParams, AttackError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match spec {
        AttackSpec::GradAscent => {
            Ok(sgd_epochs(theta, shard, epochs, lr, DEFAULT_BATCH, -1.0, &mut rng)?)
        }
        AttackSpec::LabelFlip { class_pair } => {
            let flipped = flip_labels(shard, *class_pair);
            Ok(local_update(theta, &flipped, epochs, lr, &mut rng)?)
        }
        AttackSpec::LabelShuffle => {
            let shuffled = shuffle_labels(shard, seed ^ SHUFFLE_SALT);
            Ok(local_update(theta, &shuffled, epochs, lr, &mut rng)?)
        }
        AttackSpec::Backdoor { trigger_size, position, target_label, poison_fraction } => {
            let poisoned = poison_shard(
                shard,
                *trigger_size,
                *position,
                *target_label,
                *poison_fraction,
                seed ^ POISON_SALT,
            )?;
            Ok(local_update(theta, &poisoned, epochs, lr, &mut rng)?)
        }
    }
}

// Domain-separation salts so the label permutation / poison selection streams
// differ from the SGD shuffling stream under one seed.
const SHUFFLE_SALT: u64 = 0x7368_7566_666c_6531;
const POISON_SALT: u64 = 0x6261_636b_646f_6f72;

/// DP variant of `dishonest_update` (shadow generation under DP-SGD).
pub fn dishonest_update_dp(
    theta: &ModelParams,
    shard: &DatasetShard,
    spec: &AttackSpec,
    epochs: usize,
    lr: f64,
    dp: &DpConfig,
    seed: u64,
) -> Result<ModelParams, AttackError> {
    use crate::learner::train::dp_local_update;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match spec {
        AttackSpec::GradAscent => {
            // clip and noise per sample, then ascend: run DP descent on the
            // negated objective by flipping the final step direction
            let updated = dp_local_update(theta, shard, epochs, lr, dp, &mut rng)?;
            let delta = updated.delta_from(theta);
            Ok(theta.add_scaled(&delta, -1.0))
        }
        AttackSpec::LabelFlip { class_pair } => {
            let flipped = flip_labels(shard, *class_pair);
            Ok(dp_local_update(theta, &flipped, epochs, lr, dp, &mut rng)?)
        }
        AttackSpec::LabelShuffle => {
            let shuffled = shuffle_labels(shard, seed ^ SHUFFLE_SALT);
            Ok(dp_local_update(theta, &shuffled, epochs, lr, dp, &mut rng)?)
        }
        AttackSpec::Backdoor { trigger_size, position, target_label, poison_fraction } => {
            let poisoned = poison_shard(
                shard,
                *trigger_size,
                *position,
                *target_label,
                *poison_fraction,
                seed ^ POISON_SALT,
            )?;
            Ok(dp_local_update(theta, &poisoned, epochs, lr, dp, &mut rng)?)
        }
    }
}

/// Fraction of a triggered test set classified as the attack target.
pub fn backdoor_accuracy(
    model: &ModelParams,
    test: &DatasetShard,
    trigger_size: usize,
    position: (usize, usize),
    target_label: usize,
) -> Result<f64, AttackError> {
    let shape = test.image_shape.ok_or(AttackError::NotImages)?;
    if test.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for x in &test.features {
        let mut img = x.clone();
        apply_trigger(&mut img, shape, trigger_size, position)?;
        if crate::learner::train::predict(model, &img) == target_label {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}
