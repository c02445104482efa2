//! Leveled approximate-arithmetic encryption over Z_Q[X]/(X^N + 1) with
//! packed real slots: RNS modulus chains, per-prime NTTs, canonical-embedding
//! encoding, relinearization/rotation key switching, and a trusted refresh
//! oracle standing in for bootstrapping.

pub mod cipher;
pub mod encoding;
pub mod error;
pub mod framing;
pub mod key;
pub mod ntt;
pub mod params;
pub mod poly;
pub mod refresh;
pub mod zq;

pub use cipher::{
    add, add_const, add_plain, decrypt, decrypt_values, encrypt, encrypt_values, mod_switch_to,
    mult, mult_const, mult_plain, mult_plain_lazy, negate, rescale, rotate, square, sub,
    sub_plain, Ciphertext, Context,
};
pub use encoding::{Embedding, Plaintext};
pub use error::{CkksError, Result};
pub use key::{EvalKeys, KeyMaterial, KeySwitchKey, PublicKey, SecretKey};
pub use params::{CkksParams, Params, Preset};
pub use refresh::{RefreshOracle, DEFAULT_REFRESH_SECONDS};
