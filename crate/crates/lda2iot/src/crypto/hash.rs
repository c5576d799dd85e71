//! SHA-256 digests and the protocol's hash-of-concatenation helper.

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use std::fmt;

use crate::instrument::{self, Op};

pub const DIGEST_LEN: usize = 32;

/// A 256-bit hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; DIGEST_LEN]>::try_from(bytes).ok().map(Digest)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Bitwise XOR against `other` padded (or truncated) to digest width.
    pub fn xor_padded(&self, other: &[u8]) -> [u8; DIGEST_LEN] {
        let mut out = self.0;
        for (o, b) in out.iter_mut().zip(other.iter()) {
            *o ^= b;
        }
        out
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

/// One-way hash H: {0,1}* -> {0,1}^256 (SHA-256).
pub fn hash(msg: &[u8]) -> Digest {
    instrument::tick(Op::Hash);
    Digest(Sha256::digest(msg).into())
}

/// Hashes the plain concatenation of canonically encoded parts.
/// Counts as a single hash operation.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    instrument::tick(Op::Hash);
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

/// Raw SHA-256 without instrumentation, for key derivation and MAC layers
/// that are not protocol-level hash operations.
pub(crate) fn sha256_raw(parts: &[&[u8]]) -> [u8; DIGEST_LEN] {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}
