//! Grid search over (layer, SPCA dimension, kernel degree) scoring each cell
//! with the FHE-efficiency heuristic F1 / (dim * deg * (P * n_sv)).

use std::collections::BTreeMap;

use crate::shadow::ShadowDataset;
use crate::spca::{fit_spca, SpcaMode};
use crate::svm::{f1_score, train_svm, SvmConfig};

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub dims: Vec<usize>,
    pub degrees: Vec<usize>,
    /// Parallelization factor P in [1/n_sv, 1].
    pub parallel_factor: f64,
    pub spca_mode: SpcaMode,
    pub svm_c: f64,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dims: vec![8, 64],
            degrees: vec![1, 2, 3, 4],
            parallel_factor: 1.0,
            spca_mode: SpcaMode::Blended,
            svm_c: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub layer: String,
    pub dim: usize,
    pub deg: usize,
    pub n_sv: usize,
    pub f1: f64,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct GridSearchReport {
    pub cells: Vec<GridCell>,
    pub skipped: Vec<(String, usize, usize, String)>,
    pub best: Option<GridCell>,
    pub parallel_factor: f64,
}

/// The heuristic FHE-SVM score.
pub fn fhe_svm_score(f1: f64, dim: usize, deg: usize, parallel_factor: f64, n_sv: usize) -> f64 {
    f1 / (dim as f64 * deg as f64 * (parallel_factor * n_sv as f64))
}

pub fn grid_search(
    shadows_per_layer: &BTreeMap<String, ShadowDataset>,
    cfg: &GridConfig,
) -> GridSearchReport {
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for (layer, shadow) in shadows_per_layer {
        let (train, holdout) = shadow.split_by_run();
        for &dim in &cfg.dims {
            let d = train.features.first().map(Vec::len).unwrap_or(0);
            if dim > d.min(train.len()) {
                for &deg in &cfg.degrees {
                    skipped.push((layer.clone(), dim, deg, format!("dim {dim} exceeds layer ({d})")));
                }
                continue;
            }
            let spca = match fit_spca(&train.features, &train.labels, dim, cfg.spca_mode, cfg.seed)
            {
                Ok(m) => m,
                Err(e) => {
                    for &deg in &cfg.degrees {
                        skipped.push((layer.clone(), dim, deg, e.to_string()));
                    }
                    continue;
                }
            };
            let x_train: Vec<Vec<f64>> = train.features.iter().map(|f| spca.project(f)).collect();
            let x_hold: Vec<Vec<f64>> = holdout.features.iter().map(|f| spca.project(f)).collect();
            for &deg in &cfg.degrees {
                let svm_cfg = SvmConfig {
                    c: cfg.svm_c,
                    degree: deg,
                    seed: cfg.seed ^ (deg as u64) << 8,
                    ..Default::default()
                };
                match train_svm(&x_train, &train.labels, &svm_cfg) {
                    Ok(model) => {
                        let preds: Vec<u8> = x_hold.iter().map(|x| model.predict(x)).collect();
                        let f1 = f1_score(&preds, &holdout.labels);
                        let n_sv = model.n_sv().max(1);
                        let score = fhe_svm_score(f1, dim, deg, cfg.parallel_factor, n_sv);
                        cells.push(GridCell { layer: layer.clone(), dim, deg, n_sv, f1, score });
                    }
                    Err(e) => skipped.push((layer.clone(), dim, deg, e.to_string())),
                }
            }
        }
    }
    let best = cells
        .iter()
        .cloned()
        .max_by(|a, b| a.score.partial_cmp(&b.score).expect("finite scores"));
    GridSearchReport { cells, skipped, best, parallel_factor: cfg.parallel_factor }
}
