//! Elliptic-curve group arithmetic, hashing, randomness and the public-key
//! encryption primitives every protocol message rides on.

pub mod curve;
pub mod elgamal;
pub mod hash;
pub mod hybrid;
pub mod nonce;
pub mod time;

pub use curve::{keygen, point_add, scalar_mult, CurveParams, CurvePoint, ScalarKey};
pub use elgamal::{ecc_decrypt_point, ecc_encrypt_point};
pub use hash::{hash, hash_parts, Digest, DIGEST_LEN};
pub use hybrid::{hybrid_decrypt, hybrid_encrypt, PayloadCiphertext};
pub use nonce::{make_rng, trial_rng, Nonce, NONCE_LEN};
pub use time::Timestamp;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("point is not on the curve")]
    InvalidPoint,
    #[error("scalar outside [1, n-1] or wrong width")]
    InvalidScalar,
    #[error("invalid curve parameters: {0}")]
    InvalidCurve(String),
    #[error("ciphertext integrity check failed")]
    IntegrityFailure,
    #[error("ciphertext is malformed")]
    MalformedCiphertext,
}
