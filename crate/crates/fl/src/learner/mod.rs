//! Desk-scale neural-network training: MLP and small CNN architectures with
//! hand-rolled forward/backward passes, SGD and DP-SGD local updates, and
//! dataset utilities (synthetic generators, CSV loading, Dirichlet
//! partitioning).

pub mod data;
pub mod model;
pub mod train;

pub use data::{dirichlet_partition, dirichlet_resample, gaussian_blobs, load_csv, mini_digits, DatasetShard};
pub use model::{Architecture, ModelParams, NamedTensor};
pub use train::{local_update, dp_local_update, DpConfig, TrainError};
