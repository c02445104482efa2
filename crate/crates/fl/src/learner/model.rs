//! Model architectures and parameter containers. Two architectures at desk
//! scale: "mlp3" (three dense layers) and "cnn-s" (two 3x3 convolutions with
//! 2x2 max-pooling, then two dense layers). Parameters are named per layer;
//! flatten/unflatten round-trips exactly with stable slice boundaries.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown architecture `{0}`")]
    UnknownArchitecture(String),
    #[error("degenerate layer with zero fan ({0})")]
    ZeroFan(String),
    #[error("input of {got} features does not match the architecture ({want})")]
    InputShape { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    /// Three dense layers: input -> h1 -> h2 -> classes.
    Mlp3 { input: usize, hidden: (usize, usize), classes: usize },
    /// conv(3x3, in->8) relu pool conv(3x3, 8->16) relu pool fc(32) relu fc.
    CnnS { height: usize, width: usize, classes: usize },
}

impl Architecture {
    pub fn mlp3(input: usize, classes: usize) -> Self {
        Architecture::Mlp3 { input, hidden: (16, 16), classes }
    }

    pub fn cnn_s(height: usize, width: usize, classes: usize) -> Self {
        Architecture::CnnS { height, width, classes }
    }

    pub fn id(&self) -> String {
        match self {
            Architecture::Mlp3 { input, hidden, classes } => {
                format!("mlp3:{input}-{}-{}-{classes}", hidden.0, hidden.1)
            }
            Architecture::CnnS { height, width, classes } => {
                format!("cnn-s:{height}x{width}-{classes}")
            }
        }
    }

    pub fn parse(id: &str) -> Result<Self, ModelError> {
        let parts: Vec<&str> = id.splitn(2, ':').collect();
        let dims = parts.get(1).ok_or_else(|| ModelError::UnknownArchitecture(id.into()))?;
        match parts[0] {
            "mlp3" => {
                let d: Vec<usize> =
                    dims.split('-').filter_map(|x| x.parse().ok()).collect();
                if d.len() != 4 {
                    return Err(ModelError::UnknownArchitecture(id.into()));
                }
                Ok(Architecture::Mlp3 { input: d[0], hidden: (d[1], d[2]), classes: d[3] })
            }
            "cnn-s" => {
                let (hw, c) = dims
                    .split_once('-')
                    .ok_or_else(|| ModelError::UnknownArchitecture(id.into()))?;
                let (h, w) = hw
                    .split_once('x')
                    .ok_or_else(|| ModelError::UnknownArchitecture(id.into()))?;
                Ok(Architecture::CnnS {
                    height: h.parse().map_err(|_| ModelError::UnknownArchitecture(id.into()))?,
                    width: w.parse().map_err(|_| ModelError::UnknownArchitecture(id.into()))?,
                    classes: c.parse().map_err(|_| ModelError::UnknownArchitecture(id.into()))?,
                })
            }
            _ => Err(ModelError::UnknownArchitecture(id.into())),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Architecture::Mlp3 { input, .. } => *input,
            Architecture::CnnS { height, width, .. } => height * width,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Architecture::Mlp3 { classes, .. } | Architecture::CnnS { classes, .. } => *classes,
        }
    }

    /// Named parameterized layers: (name, weight shape, bias len).
    pub fn layer_specs(&self) -> Vec<(String, Vec<usize>, usize)> {
        match self {
            Architecture::Mlp3 { input, hidden, classes } => vec![
                ("h1".into(), vec![hidden.0, *input], hidden.0),
                ("h2".into(), vec![hidden.1, hidden.0], hidden.1),
                ("out".into(), vec![*classes, hidden.1], *classes),
            ],
            Architecture::CnnS { height, width, classes } => {
                let (c1, c2) = (8usize, 16usize);
                let (ph, pw) = (height / 2, width / 2);
                let (qh, qw) = (ph / 2, pw / 2);
                let flat = c2 * qh * qw;
                vec![
                    ("conv1".into(), vec![c1, 1, 3, 3], c1),
                    ("conv2".into(), vec![c2, c1, 3, 3], c2),
                    ("fc1".into(), vec![32, flat], 32),
                    ("fc2".into(), vec![*classes, 32], *classes),
                ]
            }
        }
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.layer_specs().into_iter().map(|(n, _, _)| n).collect()
    }

    /// Xavier-Glorot uniform initialization, deterministic under the rng.
    pub fn xavier_init<R: Rng>(&self, rng: &mut R) -> Result<ModelParams, ModelError> {
        let mut tensors = Vec::new();
        for (name, wshape, blen) in self.layer_specs() {
            let (fan_in, fan_out) = fans(&wshape);
            if fan_in == 0 || fan_out == 0 {
                return Err(ModelError::ZeroFan(name));
            }
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let wlen: usize = wshape.iter().product();
            let w: Vec<f64> = (0..wlen).map(|_| rng.gen_range(-bound..bound)).collect();
            tensors.push(NamedTensor { name: format!("{name}.w"), shape: wshape, data: w });
            tensors.push(NamedTensor {
                name: format!("{name}.b"),
                shape: vec![blen],
                data: vec![0.0; blen],
            });
        }
        Ok(ModelParams { arch: self.clone(), tensors })
    }
}

/// (fan_in, fan_out) for a dense [out, in] or conv [out_ch, in_ch, kh, kw].
fn fans(shape: &[usize]) -> (usize, usize) {
    match shape.len() {
        2 => (shape[1], shape[0]),
        4 => (shape[1] * shape[2] * shape[3], shape[0] * shape[2] * shape[3]),
        _ => (0, 0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub tensors: Vec<NamedTensor>,
}

impl ModelParams {
    pub fn zeros_like(&self) -> ModelParams {
        let mut out = self.clone();
        for t in &mut out.tensors {
            t.data.iter_mut().for_each(|x| *x = 0.0);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for t in &self.tensors {
            out.extend_from_slice(&t.data);
        }
        out
    }

    pub fn unflatten(&self, flat: &[f64]) -> ModelParams {
        assert_eq!(flat.len(), self.param_count(), "flat length mismatch");
        let mut out = self.clone();
        let mut off = 0;
        for t in &mut out.tensors {
            let len = t.data.len();
            t.data.copy_from_slice(&flat[off..off + len]);
            off += len;
        }
        out
    }

    /// (offset, length) of a named layer (its weight + bias block) in the
    /// flattened vector. Stable for a fixed architecture.
    pub fn layer_slice(&self, layer: &str) -> Option<(usize, usize)> {
        let w = format!("{layer}.w");
        let b = format!("{layer}.b");
        let mut off = 0;
        let mut found: Option<(usize, usize)> = None;
        for t in &self.tensors {
            if t.name == w {
                found = Some((off, t.data.len()));
            } else if t.name == b {
                if let Some((start, len)) = found {
                    return Some((start, len + t.data.len()));
                }
            }
            off += t.data.len();
        }
        found
    }

    /// delta = self - other, flattened.
    pub fn delta_from(&self, previous: &ModelParams) -> Vec<f64> {
        let a = self.flatten();
        let b = previous.flatten();
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    }

    pub fn add_scaled(&self, flat: &[f64], scale: f64) -> ModelParams {
        let mut v = self.flatten();
        for (x, d) in v.iter_mut().zip(flat) {
            *x += scale * d;
        }
        self.unflatten(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn xavier_bounds_and_determinism() {
        let arch = Architecture::Mlp3 { input: 10, hidden: (5, 5), classes: 2 };
        let mut r1 = ChaCha20Rng::seed_from_u64(1);
        let m1 = arch.xavier_init(&mut r1).unwrap();
        // 10 -> 5 layer: |w| <= sqrt(6/15)
        let bound = (6.0f64 / 15.0).sqrt();
        let h1 = &m1.tensors[0];
        assert_eq!(h1.shape, vec![5, 10]);
        assert!(h1.data.iter().all(|&w| w.abs() <= bound));
        let mut r2 = ChaCha20Rng::seed_from_u64(1);
        let m2 = arch.xavier_init(&mut r2).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn zero_fan_rejected() {
        let arch = Architecture::Mlp3 { input: 0, hidden: (4, 4), classes: 2 };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(matches!(arch.xavier_init(&mut rng), Err(ModelError::ZeroFan(_))));
    }

    #[test]
    fn flatten_unflatten_roundtrip_exact() {
        let arch = Architecture::cnn_s(8, 8, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = arch.xavier_init(&mut rng).unwrap();
        let flat = m.flatten();
        let back = m.unflatten(&flat);
        assert_eq!(m, back);
    }

    #[test]
    fn layer_slices_cover_weight_and_bias() {
        let arch = Architecture::mlp3(8, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = arch.xavier_init(&mut rng).unwrap();
        let (off, len) = m.layer_slice("h1").unwrap();
        assert_eq!(off, 0);
        assert_eq!(len, 16 * 8 + 16);
        let (off2, len2) = m.layer_slice("out").unwrap();
        assert_eq!(off2 + len2, m.param_count());
        assert!(m.layer_slice("nope").is_none());
    }

    #[test]
    fn architecture_id_parses_back() {
        for arch in [Architecture::mlp3(12, 4), Architecture::cnn_s(8, 8, 10)] {
            assert_eq!(Architecture::parse(&arch.id()).unwrap(), arch);
        }
        assert!(Architecture::parse("resnet:50").is_err());
    }
}
