//! Shadow-update generation: repeated trainings with fresh initializations
//! and Dirichlet-resampled data, forking a Byzantine update at every epoch.
//! Honest deltas are labeled 1, Byzantine deltas 0; both forks share the same
//! starting model so the update rule is the only difference.

use hefl_common::SeedTree;
use rand::Rng;
use thiserror::Error;

use crate::byzantine::{dishonest_update, dishonest_update_dp, AttackError, AttackSpec};
use crate::learner::data::{dirichlet_resample, DataError, DatasetShard};
use crate::learner::model::{Architecture, ModelError, ModelParams};
use crate::learner::train::{dp_local_update, local_update, DpConfig, TrainError};

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("all {0} shadow runs diverged")]
    AllRunsDiverged(usize),
    #[error("property/layer mismatch when merging ({0} vs {1})")]
    MergeMismatch(String, String),
}

#[derive(Debug, Clone)]
pub struct ShadowConfig {
    pub runs: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Per-run Dirichlet resample size.
    pub run_samples: usize,
    pub alpha: f64,
    /// When set, both honest and Byzantine updates use DP-SGD.
    pub dp: Option<DpConfig>,
}

impl ShadowConfig {
    pub fn new(runs: usize, epochs: usize, lr: f64, run_samples: usize) -> Self {
        Self { runs, epochs, lr, run_samples, alpha: 1.0, dp: None }
    }
}

#[derive(Debug, Clone)]
pub struct ShadowSample {
    /// Full flattened update difference.
    pub delta: Vec<f64>,
    /// true = honest (label 1), false = Byzantine (label 0).
    pub honest: bool,
    pub run: u32,
    pub epoch: u32,
}

#[derive(Debug, Clone)]
pub struct ShadowRunSet {
    pub arch: Architecture,
    pub property: String,
    pub samples: Vec<ShadowSample>,
    pub run_count: u32,
    pub epoch_count: u32,
    pub excluded_runs: Vec<u32>,
}

/// A per-layer labeled view suitable for SPCA + SVM training.
#[derive(Debug, Clone)]
pub struct ShadowDataset {
    pub property: String,
    pub layer: String,
    pub features: Vec<Vec<f64>>,
    /// 1 = honest, 0 = Byzantine.
    pub labels: Vec<u8>,
    pub run_ids: Vec<u32>,
    pub run_count: u32,
    pub epoch_count: u32,
}

impl ShadowDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Deterministic run-grouped split: every fifth run goes to holdout, so
    /// epoch-adjacent deltas never straddle the boundary and labels stay
    /// balanced (each run contributes one honest and one Byzantine delta per
    /// epoch).
    pub fn split_by_run(&self) -> (ShadowDataset, ShadowDataset) {
        let is_holdout = |run: u32| run % 5 == 4;
        let mut train = self.empty_like();
        let mut holdout = self.empty_like();
        for i in 0..self.len() {
            let dst = if is_holdout(self.run_ids[i]) { &mut holdout } else { &mut train };
            dst.features.push(self.features[i].clone());
            dst.labels.push(self.labels[i]);
            dst.run_ids.push(self.run_ids[i]);
        }
        (train, holdout)
    }

    fn empty_like(&self) -> ShadowDataset {
        ShadowDataset {
            property: self.property.clone(),
            layer: self.layer.clone(),
            features: vec![],
            labels: vec![],
            run_ids: vec![],
            run_count: self.run_count,
            epoch_count: self.epoch_count,
        }
    }
}

/// Resolve the per-run attack: backdoor runs randomize trigger size (4..=8
/// pixels), position, and target label; other attacks are used as given.
pub fn randomize_attack<R: Rng>(
    template: &AttackSpec,
    data: &DatasetShard,
    rng: &mut R,
) -> AttackSpec {
    match template {
        AttackSpec::Backdoor { poison_fraction, .. } => {
            let (h, w) = data.image_shape.unwrap_or((8, 8));
            let size = rng.gen_range(4..=8usize);
            let side = (size as f64).sqrt().ceil() as usize;
            let position = (rng.gen_range(0..=h - side), rng.gen_range(0..=w - side));
            let target_label = rng.gen_range(0..data.class_count);
            AttackSpec::Backdoor {
                trigger_size: size,
                position,
                target_label,
                poison_fraction: *poison_fraction,
            }
        }
        other => other.clone(),
    }
}

/// Algorithm: R independent trainings of T epochs; at each epoch record the
/// honest delta and a Byzantine fork from the same starting point, labeled
/// 1 / 0. Divergent runs are excluded and reported.
pub fn generate_shadow(
    base: &DatasetShard,
    arch: &Architecture,
    attack: &AttackSpec,
    cfg: &ShadowConfig,
    seed: u64,
) -> Result<ShadowRunSet, ShadowError> {
    let tree = SeedTree::new(seed).child("shadow").child(attack.kind_name());
    let mut samples = Vec::with_capacity(2 * cfg.runs * cfg.epochs);
    let mut excluded = Vec::new();

    for run in 0..cfg.runs {
        let run_tree = tree.child_idx(run as u64);
        let mut init_rng = run_tree.child("init").rng();
        let mut theta = arch.xavier_init(&mut init_rng)?;
        let shard = dirichlet_resample(
            base,
            cfg.run_samples,
            cfg.alpha,
            run_tree.child("data").seed(),
        )?;
        let spec = randomize_attack(attack, &shard, &mut run_tree.child("attack").rng());

        let mut run_samples = Vec::with_capacity(2 * cfg.epochs);
        let mut diverged = false;
        for epoch in 0..cfg.epochs {
            let e_tree = run_tree.child_idx(epoch as u64);
            let honest = match run_update(&theta, &shard, cfg, &e_tree) {
                Ok(m) => m,
                Err(TrainError::Diverged(_)) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(ShadowError::Attack(AttackError::Train(e))),
            };
            let byz = match run_dishonest(&theta, &shard, &spec, cfg, &e_tree) {
                Ok(m) => m,
                Err(AttackError::Train(TrainError::Diverged(_))) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            run_samples.push(ShadowSample {
                delta: honest.delta_from(&theta),
                honest: true,
                run: run as u32,
                epoch: epoch as u32,
            });
            run_samples.push(ShadowSample {
                delta: byz.delta_from(&theta),
                honest: false,
                run: run as u32,
                epoch: epoch as u32,
            });
            theta = honest;
        }
        if diverged {
            excluded.push(run as u32);
        } else {
            samples.extend(run_samples);
        }
    }
    if samples.is_empty() {
        return Err(ShadowError::AllRunsDiverged(cfg.runs));
    }
    Ok(ShadowRunSet {
        arch: arch.clone(),
        property: attack.kind_name().to_string(),
        samples,
        run_count: cfg.runs as u32,
        epoch_count: cfg.epochs as u32,
        excluded_runs: excluded,
    })
}

fn run_update(
    theta: &ModelParams,
    shard: &DatasetShard,
    cfg: &ShadowConfig,
    tree: &SeedTree,
) -> Result<ModelParams, TrainError> {
    let mut rng = tree.child("honest").rng();
    match &cfg.dp {
        None => local_update(theta, shard, 1, cfg.lr, &mut rng),
        Some(dp) => dp_local_update(theta, shard, 1, cfg.lr, dp, &mut rng),
    }
}

fn run_dishonest(
    theta: &ModelParams,
    shard: &DatasetShard,
    spec: &AttackSpec,
    cfg: &ShadowConfig,
    tree: &SeedTree,
) -> Result<ModelParams, AttackError> {
    let seed = tree.child("byz").seed();
    match &cfg.dp {
        None => dishonest_update(theta, shard, spec, 1, cfg.lr, seed),
        Some(dp) => dishonest_update_dp(theta, shard, spec, 1, cfg.lr, dp, seed),
    }
}

/// Restrict a run set to one named layer.
pub fn layer_dataset(set: &ShadowRunSet, layer: &str) -> Option<ShadowDataset> {
    // probe the slice bounds from a zero model of the same architecture
    let mut probe_rng = SeedTree::new(0).rng();
    let probe = set.arch.xavier_init(&mut probe_rng).ok()?;
    let (off, len) = probe.layer_slice(layer)?;
    let mut out = ShadowDataset {
        property: set.property.clone(),
        layer: layer.to_string(),
        features: Vec::with_capacity(set.samples.len()),
        labels: Vec::with_capacity(set.samples.len()),
        run_ids: Vec::with_capacity(set.samples.len()),
        run_count: set.run_count,
        epoch_count: set.epoch_count,
    };
    for s in &set.samples {
        out.features.push(s.delta[off..off + len].to_vec());
        out.labels.push(u8::from(s.honest));
        out.run_ids.push(s.run);
    }
    Some(out)
}

/// Union of per-property datasets on a common layer, deduplicating bit-equal
/// samples; the merged filter detects "at least one" of the behaviors.
pub fn merge_properties(sets: &[&ShadowDataset]) -> Result<ShadowDataset, ShadowError> {
    let first = sets.first().expect("merge of at least one dataset");
    let mut out = ShadowDataset {
        property: sets
            .iter()
            .map(|s| s.property.as_str())
            .collect::<Vec<_>>()
            .join("|"),
        layer: first.layer.clone(),
        features: vec![],
        labels: vec![],
        run_ids: vec![],
        run_count: sets.iter().map(|s| s.run_count).max().unwrap_or(0),
        epoch_count: first.epoch_count,
    };
    let mut seen = std::collections::HashSet::new();
    for set in sets {
        if set.layer != first.layer
            || set.features.first().map(Vec::len) != first.features.first().map(Vec::len)
        {
            return Err(ShadowError::MergeMismatch(first.layer.clone(), set.layer.clone()));
        }
        for i in 0..set.len() {
            let key: Vec<u64> = set.features[i].iter().map(|f| f.to_bits()).collect();
            if seen.insert((key, set.labels[i])) {
                out.features.push(set.features[i].clone());
                out.labels.push(set.labels[i]);
                out.run_ids.push(set.run_ids[i]);
            }
        }
    }
    Ok(out)
}
