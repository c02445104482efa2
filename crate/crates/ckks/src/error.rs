use thiserror::Error;

#[derive(Debug, Error)]
pub enum CkksError {
    #[error("ring degree 2^{0} is out of the supported range [2^8, 2^15]")]
    InvalidRingDegree(u8),
    #[error("requested multiplicative depth {0} must be at least 1")]
    InvalidDepth(usize),
    #[error("no NTT-friendly prime of {bits} bits for 2N = {step}")]
    PrimeGeneration { bits: u8, step: u64 },
    #[error("scale 2^{scale_log} must be smaller than every chain prime (min {min_prime})")]
    ScaleTooLarge { scale_log: u8, min_prime: u64 },
    #[error("unknown parameter preset `{0}`")]
    UnknownPreset(String),
    #[error("vector of length {len} exceeds {slots} slots")]
    TooManySlots { len: usize, slots: usize },
    #[error("encoded values exceed the representable range at this level (|v|max = {max_abs:.3e})")]
    EncodingRange { max_abs: f64 },
    #[error("ciphertext level exhausted: operation needs level >= {needed}, have {have}")]
    LevelExhausted { needed: usize, have: usize },
    #[error("operands have incompatible scales ({0:.6e} vs {1:.6e})")]
    ScaleMismatch(f64, f64),
    #[error("operands come from different parameter sets")]
    ParamsMismatch,
    #[error("missing rotation key for step {0}")]
    MissingRotationKey(usize),
    #[error("replication length {len} must be a power of two dividing {slots} slots")]
    BadReplication { len: usize, slots: usize },
    #[error("malformed serialized record: {0}")]
    Framing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CkksError>;
