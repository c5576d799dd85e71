//! Identities, levels, secrets and the protocol error set.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::crypto::{CryptoError, Digest};

pub const IDENTITY_LEN: usize = 20;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Gateway,
    Sensor,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::User => write!(f, "user"),
            Role::Gateway => write!(f, "gateway"),
            Role::Sensor => write!(f, "sensor"),
        }
    }
}

/// A 160-bit random identity with its role tag. Only the 20 identity bytes
/// enter hash inputs; the tag is bookkeeping.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Identity {
    bytes: [u8; IDENTITY_LEN],
    pub role: Role,
}

impl Identity {
    pub fn random(role: Role, rng: &mut dyn RngCore) -> Self {
        let mut bytes = [0u8; IDENTITY_LEN];
        rng.fill_bytes(&mut bytes);
        Identity { bytes, role }
    }

    pub fn from_bytes(bytes: [u8; IDENTITY_LEN], role: Role) -> Self {
        Identity { bytes, role }
    }

    pub fn as_bytes(&self) -> &[u8; IDENTITY_LEN] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.bytes)
    }
}

impl fmt::Debug for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.role, self.to_hex())
    }
}

/// Hierarchy level; 1 is the highest privilege (the director in the paper's
/// campus deployment), larger numbers rank lower.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Level(pub u16);

impl Level {
    /// Canonical 2-byte big-endian encoding used in hash inputs.
    pub fn encode(&self) -> [u8; 2] {
        self.0.to_be_bytes()
    }

    pub fn check_range(&self, l_max: Level) -> Result<(), ProtocolError> {
        if self.0 < 1 || self.0 > l_max.0 {
            return Err(ProtocolError::LevelOutOfRange { level: self.0, l_max: l_max.0 });
        }
        Ok(())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The gateway's 256-bit master secret K_s.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterSecret(pub [u8; 32]);

impl MasterSecret {
    pub fn random(rng: &mut dyn RngCore) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        MasterSecret(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for MasterSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterSecret(<redacted>)")
    }
}

/// The agreed 256-bit session key.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey(pub Digest);

impl SessionKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        self.0.as_bytes()
    }

    /// H(SK) in hex — what gets printed instead of the key itself.
    pub fn fingerprint(&self) -> String {
        crate::crypto::hash(self.0.as_bytes()).to_hex()
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey(fp:{})", &self.fingerprint()[..16])
    }
}

/// The LDA access decision.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Access {
    Allowed,
    Denied,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("message timestamp is stale")]
    StaleTimestamp,
    #[error("message timestamp is ahead of the local clock")]
    ClockSkew,
    #[error("public key is not enrolled for any user")]
    UnknownUser,
    #[error("public key is not enrolled for any sensor")]
    UnknownSensor,
    #[error("verification failed: {0}")]
    VerificationFailure(&'static str),
    #[error("payload integrity check failed")]
    IntegrityFailure,
    #[error("payload is malformed")]
    MalformedPayload,
    #[error("no level matches the tag")]
    LevelNotFound,
    #[error("level {level} outside 1..={l_max}")]
    LevelOutOfRange { level: u16, l_max: u16 },
    #[error("decrypted identity does not match this device")]
    IdentityMismatch,
    #[error("identity or password rejected")]
    BadCredentials,
    #[error("password must not be empty")]
    EmptyPassword,
    #[error("message arrived in the wrong protocol phase")]
    WrongPhase,
    #[error("session already aborted")]
    SessionAborted,
    #[error("point rejected: {0}")]
    Crypto(CryptoError),
}

impl From<CryptoError> for ProtocolError {
    fn from(err: CryptoError) -> Self {
        match err {
            CryptoError::IntegrityFailure => ProtocolError::IntegrityFailure,
            CryptoError::MalformedCiphertext => ProtocolError::MalformedPayload,
            other => ProtocolError::Crypto(other),
        }
    }
}
