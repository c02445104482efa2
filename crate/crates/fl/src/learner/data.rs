//! Datasets: synthetic Gaussian blobs, 8x8 "mini-digit" images with
//! class-dependent strokes, a CSV loader, and Dirichlet label partitioning.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Dirichlet, Distribution};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("more workers ({workers}) than samples ({samples})")]
    TooManyWorkers { workers: usize, samples: usize },
    #[error("dirichlet alpha must be positive, got {0}")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetShard {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    /// Set when features are row-major images (enables trigger attacks).
    pub image_shape: Option<(usize, usize)>,
}

impl DatasetShard {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.class_count];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Isotropic Gaussian clusters with deterministic centers on a sphere.
pub fn gaussian_blobs(
    classes: usize,
    dim: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> DatasetShard {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centers = Vec::with_capacity(classes);
    for _ in 0..classes {
        let mut c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        c.iter_mut().for_each(|x| *x /= norm);
        centers.push(c);
    }
    let mut features = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let p: Vec<f64> = center
                .iter()
                .map(|&c| c + spread * gauss(&mut rng))
                .collect();
            features.push(p);
            labels.push(label);
        }
    }
    shuffle_in_unison(&mut features, &mut labels, &mut rng);
    DatasetShard { features, labels, class_count: classes, image_shape: None }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Seven-segment style stroke masks for digits 0..9 on an 8x8 canvas.
/// Segments: 0 top, 1 top-left, 2 top-right, 3 middle, 4 bottom-left,
/// 5 bottom-right, 6 bottom.
const DIGIT_SEGMENTS: [&[usize]; 10] = [
    &[0, 1, 2, 4, 5, 6],
    &[2, 5],
    &[0, 2, 3, 4, 6],
    &[0, 2, 3, 5, 6],
    &[1, 2, 3, 5],
    &[0, 1, 3, 5, 6],
    &[0, 1, 3, 4, 5, 6],
    &[0, 2, 5],
    &[0, 1, 2, 3, 4, 5, 6],
    &[0, 1, 2, 3, 5, 6],
];

fn segment_pixels(seg: usize) -> Vec<(usize, usize)> {
    match seg {
        0 => (1..7).map(|x| (0usize, x)).collect(),
        1 => (1..4).map(|y| (y, 0usize)).collect(),
        2 => (1..4).map(|y| (y, 7usize)).collect(),
        3 => (1..7).map(|x| (3usize, x)).collect(),
        4 => (4..7).map(|y| (y, 0usize)).collect(),
        5 => (4..7).map(|y| (y, 7usize)).collect(),
        6 => (1..7).map(|x| (7usize, x)).collect(),
        _ => vec![],
    }
}

/// 8x8 grayscale digit images: stroke pixels near 1, background near 0, with
/// per-sample intensity jitter and Gaussian noise.
pub fn mini_digits(classes: usize, per_class: usize, seed: u64) -> DatasetShard {
    assert!(classes <= 10, "mini-digits supports up to 10 classes");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for label in 0..classes {
        for _ in 0..per_class {
            let mut img = vec![0.0f64; 64];
            let intensity = rng.gen_range(0.75..1.0);
            for &seg in DIGIT_SEGMENTS[label] {
                for (y, x) in segment_pixels(seg) {
                    img[y * 8 + x] = intensity;
                }
            }
            for p in img.iter_mut() {
                *p = (*p + 0.08 * gauss(&mut rng)).clamp(0.0, 1.0);
            }
            features.push(img);
            labels.push(label);
        }
    }
    shuffle_in_unison(&mut features, &mut labels, &mut rng);
    DatasetShard { features, labels, class_count: classes, image_shape: Some((8, 8)) }
}

fn shuffle_in_unison<R: Rng>(features: &mut [Vec<f64>], labels: &mut [usize], rng: &mut R) {
    let n = features.len();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        features.swap(i, j);
        labels.swap(i, j);
    }
}

/// CSV with a header row, a `label` column, and numeric feature columns.
pub fn load_csv(path: &std::path::Path) -> Result<DatasetShard, DataError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| DataError::Csv(e.to_string()))?;
    let headers = reader.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| DataError::Csv("missing `label` column".into()))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let mut row = Vec::with_capacity(record.len() - 1);
        let mut label = None;
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                label = Some(
                    field
                        .parse::<usize>()
                        .map_err(|_| DataError::Csv(format!("bad label `{field}`")))?,
                );
            } else {
                row.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| DataError::Csv(format!("bad numeric field `{field}`")))?,
                );
            }
        }
        features.push(row);
        labels.push(label.expect("label column present"));
    }
    let class_count = labels.iter().max().map_or(0, |&m| m + 1);
    Ok(DatasetShard { features, labels, class_count, image_shape: None })
}

/// Partition a dataset over `workers` with per-class proportions drawn from
/// Dirichlet(alpha). Every sample lands in exactly one shard.
pub fn dirichlet_partition(
    data: &DatasetShard,
    workers: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<DatasetShard>, DataError> {
    if alpha <= 0.0 {
        return Err(DataError::BadAlpha(alpha));
    }
    if workers > data.len() {
        return Err(DataError::TooManyWorkers { workers, samples: data.len() });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut shards: Vec<DatasetShard> = (0..workers)
        .map(|_| DatasetShard {
            features: vec![],
            labels: vec![],
            class_count: data.class_count,
            image_shape: data.image_shape,
        })
        .collect();

    for class in 0..data.class_count {
        let mut idx: Vec<usize> =
            (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let props: Vec<f64> = if workers == 1 {
            vec![1.0]
        } else {
            Dirichlet::new(&vec![alpha; workers])
                .expect("valid dirichlet")
                .sample(&mut rng)
        };
        let counts = largest_remainder(&props, idx.len());
        let mut off = 0;
        for (w, &c) in counts.iter().enumerate() {
            for &i in &idx[off..off + c] {
                shards[w].features.push(data.features[i].clone());
                shards[w].labels.push(data.labels[i]);
            }
            off += c;
        }
    }
    Ok(shards)
}

/// Single skewed view of the base data: class proportions from
/// Dirichlet(alpha), samples drawn without replacement per class.
pub fn dirichlet_resample(
    data: &DatasetShard,
    target_size: usize,
    alpha: f64,
    seed: u64,
) -> Result<DatasetShard, DataError> {
    if alpha <= 0.0 {
        return Err(DataError::BadAlpha(alpha));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let k = data.class_count;
    let props: Vec<f64> = if k == 1 {
        vec![1.0]
    } else {
        Dirichlet::new(&vec![alpha; k]).expect("valid dirichlet").sample(&mut rng)
    };
    let want = largest_remainder(&props, target_size.min(data.len()));
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for class in 0..k {
        let mut idx: Vec<usize> =
            (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(want[class].min(idx.len())) {
            features.push(data.features[i].clone());
            labels.push(class);
        }
    }
    shuffle_in_unison(&mut features, &mut labels, &mut rng);
    Ok(DatasetShard { features, labels, class_count: k, image_shape: data.image_shape })
}

/// Integer apportionment preserving the total.
fn largest_remainder(props: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = props.iter().sum::<f64>().max(1e-12);
    let exact: Vec<f64> = props.iter().map(|p| p / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..props.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).expect("finite remainders").then(a.cmp(&b))
    });
    let mut i = 0;
    while assigned < total {
        counts[order[i % order.len()]] += 1;
        assigned += 1;
        i += 1;
    }
    counts
}
