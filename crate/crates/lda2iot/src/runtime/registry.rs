//! Persistent deployment store.
//!
//! A versioned JSON file: public metadata in the clear, every secret
//! (gateway master key, private scalars, credential digests) inside a
//! passphrase-encrypted blob. A plaintext verifier digest tells a wrong
//! passphrase apart from a corrupted file.

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::crypto::hash::sha256_raw;
use crate::crypto::{CurveParams, CurvePoint, Digest, ScalarKey, Timestamp};
use crate::protocol::{
    EnrollmentRegistry, GatewayState, Identity, Level, MasterSecret, Role, SensorCredentials,
    SmartCard, UserCredentials, IDENTITY_LEN,
};

use super::deployment::{DeployedUser, Deployment};

pub const STORE_VERSION: u32 = 1;
const KDF_ROUNDS: u32 = 1 << 14;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("store is corrupt: {0}")]
    CorruptStore(String),
    #[error("wrong passphrase")]
    WrongPassphrase,
    #[error("store already exists at {0} (use force to overwrite)")]
    AlreadyExists(PathBuf),
}

fn corrupt(detail: impl Into<String>) -> StoreError {
    StoreError::CorruptStore(detail.into())
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    curve: String,
    delta_t: u32,
    l_max: u16,
    kdf_salt: String,
    kdf_rounds: u32,
    /// H(verifier-domain || key || salt): detects a wrong passphrase.
    verifier: String,
    /// Encrypted SecretPayload JSON (stream cipher + MAC).
    ciphertext: String,
    mac: String,
}

#[derive(Serialize, Deserialize)]
struct SecretPayload {
    gateway: GatewayRecord,
    users: Vec<UserRecord>,
    sensors: Vec<SensorRecord>,
}

#[derive(Serialize, Deserialize)]
struct GatewayRecord {
    priv_key: String,
    pub_key: String,
    master: String,
    user_registry: Vec<(String, String)>,
    sensor_registry: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct UserRecord {
    uid: String,
    priv_key: String,
    pub_key: String,
    x1: String,
    x2: String,
    card: Option<SmartCard>,
}

#[derive(Serialize, Deserialize)]
struct SensorRecord {
    sid: String,
    priv_key: String,
    pub_key: String,
    y1: String,
    y2: String,
    d_j: String,
}

/// File-backed registry store.
pub struct RegistryStore {
    path: PathBuf,
}

impl RegistryStore {
    pub fn at(path: impl Into<PathBuf>) -> Self {
        RegistryStore { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.exists()
    }

    /// Serializes and encrypts the deployment. `rng` drives the KDF salt so
    /// seeded deployments produce byte-identical files.
    pub fn save(
        &self,
        deployment: &Deployment,
        passphrase: &str,
        rng: &mut dyn RngCore,
        force: bool,
    ) -> Result<(), StoreError> {
        if self.exists() && !force {
            return Err(StoreError::AlreadyExists(self.path.clone()));
        }
        let params = &deployment.params;
        let secret = SecretPayload {
            gateway: GatewayRecord {
                priv_key: hex::encode(deployment.gw.priv_key.encode(params)),
                pub_key: hex::encode(deployment.gw.pub_key.encode(params)),
                master: hex::encode(deployment.gw.master.as_bytes()),
                user_registry: deployment
                    .gw
                    .registry
                    .users()
                    .map(|(pk, id)| (hex::encode(pk), id.to_hex()))
                    .collect(),
                sensor_registry: deployment
                    .gw
                    .registry
                    .sensors()
                    .map(|(pk, id)| (hex::encode(pk), id.to_hex()))
                    .collect(),
            },
            users: deployment
                .users
                .iter()
                .map(|u| UserRecord {
                    uid: u.creds.uid.to_hex(),
                    priv_key: hex::encode(u.creds.priv_key.encode(params)),
                    pub_key: hex::encode(u.creds.pub_key.encode(params)),
                    x1: u.creds.x1.to_hex(),
                    x2: u.creds.x2.to_hex(),
                    card: u.card.clone(),
                })
                .collect(),
            sensors: deployment
                .sensors
                .iter()
                .map(|s| SensorRecord {
                    sid: s.sid.to_hex(),
                    priv_key: hex::encode(s.priv_key.encode(params)),
                    pub_key: hex::encode(s.pub_key.encode(params)),
                    y1: s.y1.to_hex(),
                    y2: s.y2.to_hex(),
                    d_j: s.d_j.to_hex(),
                })
                .collect(),
        };
        let plaintext = serde_json::to_vec(&secret).expect("payload encodes");

        let mut salt = [0u8; 16];
        rng.fill_bytes(&mut salt);
        let key = derive_key(passphrase, &salt);
        let verifier = verifier_digest(&key, &salt);
        let mut ciphertext = plaintext;
        apply_stream(&key, &mut ciphertext);
        let mac = sha256_raw(&[b"lda2iot/store/mac", &key, &ciphertext]);

        // Sort registry entries so equal deployments serialize identically.
        let file = StoreFile {
            version: STORE_VERSION,
            curve: params.name.clone(),
            delta_t: deployment.gw.delta_t,
            l_max: deployment.gw.l_max.0,
            kdf_salt: hex::encode(salt),
            kdf_rounds: KDF_ROUNDS,
            verifier: hex::encode(verifier),
            ciphertext: hex::encode(&ciphertext),
            mac: hex::encode(mac),
        };
        let json = serde_json::to_vec_pretty(&file).expect("store encodes");
        std::fs::write(&self.path, json)?;
        Ok(())
    }

    /// Decrypts and rebuilds the deployment.
    pub fn load(&self, passphrase: &str) -> Result<Deployment, StoreError> {
        let bytes = std::fs::read(&self.path)?;
        let file: StoreFile =
            serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if file.version != STORE_VERSION {
            return Err(corrupt(format!("unsupported version {}", file.version)));
        }
        let params = CurveParams::by_name(&file.curve)
            .map_err(|e| corrupt(format!("curve: {e}")))?;
        let salt = hex::decode(&file.kdf_salt).map_err(|_| corrupt("salt hex"))?;
        if file.kdf_rounds != KDF_ROUNDS {
            return Err(corrupt("unsupported kdf rounds"));
        }
        let key = derive_key(passphrase, &salt);
        let verifier = hex::decode(&file.verifier).map_err(|_| corrupt("verifier hex"))?;
        if verifier != verifier_digest(&key, &salt) {
            return Err(StoreError::WrongPassphrase);
        }
        let ciphertext = hex::decode(&file.ciphertext).map_err(|_| corrupt("ciphertext hex"))?;
        let mac = sha256_raw(&[b"lda2iot/store/mac", &key, &ciphertext]);
        if hex::decode(&file.mac).map_err(|_| corrupt("mac hex"))? != mac {
            return Err(corrupt("integrity check failed"));
        }
        let mut plaintext = ciphertext;
        apply_stream(&key, &mut plaintext);
        let secret: SecretPayload =
            serde_json::from_slice(&plaintext).map_err(|e| corrupt(e.to_string()))?;

        let mut registry = EnrollmentRegistry::default();
        for (pk, id) in &secret.gateway.user_registry {
            registry.insert_user(
                hex::decode(pk).map_err(|_| corrupt("registry hex"))?,
                identity(id, Role::User)?,
            );
        }
        for (pk, id) in &secret.gateway.sensor_registry {
            registry.insert_sensor(
                hex::decode(pk).map_err(|_| corrupt("registry hex"))?,
                identity(id, Role::Sensor)?,
            );
        }
        let gw = GatewayState {
            priv_key: scalar(&secret.gateway.priv_key, &params)?,
            pub_key: point(&secret.gateway.pub_key, &params)?,
            master: MasterSecret(array32(&secret.gateway.master)?),
            registry,
            delta_t: file.delta_t,
            l_max: Level(file.l_max),
        };
        let users = secret
            .users
            .iter()
            .map(|u| {
                Ok(DeployedUser {
                    creds: UserCredentials {
                        x1: digest(&u.x1)?,
                        x2: digest(&u.x2)?,
                        priv_key: scalar(&u.priv_key, &params)?,
                        pub_key: point(&u.pub_key, &params)?,
                        uid: identity(&u.uid, Role::User)?,
                    },
                    card: u.card.clone(),
                })
            })
            .collect::<Result<Vec<_>, StoreError>>()?;
        let sensors = secret
            .sensors
            .iter()
            .map(|s| {
                Ok(SensorCredentials {
                    y1: digest(&s.y1)?,
                    y2: digest(&s.y2)?,
                    priv_key: scalar(&s.priv_key, &params)?,
                    pub_key: point(&s.pub_key, &params)?,
                    sid: identity(&s.sid, Role::Sensor)?,
                    d_j: digest(&s.d_j)?,
                })
            })
            .collect::<Result<Vec<_>, StoreError>>()?;
        Ok(Deployment { params, gw, users, sensors })
    }
}

fn derive_key(passphrase: &str, salt: &[u8]) -> [u8; 32] {
    let mut key = sha256_raw(&[b"lda2iot/store/kdf", salt, passphrase.as_bytes()]);
    for _ in 0..KDF_ROUNDS {
        key = sha256_raw(&[&key, salt]);
    }
    key
}

fn verifier_digest(key: &[u8; 32], salt: &[u8]) -> [u8; 32] {
    sha256_raw(&[b"lda2iot/store/verifier", key, salt])
}

fn apply_stream(key: &[u8; 32], data: &mut [u8]) {
    for (block_idx, chunk) in data.chunks_mut(32).enumerate() {
        let counter = (block_idx as u32).to_be_bytes();
        let block = sha256_raw(&[b"lda2iot/store/stream", key, &counter]);
        for (byte, pad) in chunk.iter_mut().zip(block.iter()) {
            *byte ^= pad;
        }
    }
}

fn array32(hex_str: &str) -> Result<[u8; 32], StoreError> {
    let bytes = hex::decode(hex_str).map_err(|_| corrupt("hex field"))?;
    bytes.try_into().map_err(|_| corrupt("field width"))
}

fn digest(hex_str: &str) -> Result<Digest, StoreError> {
    Ok(Digest(array32(hex_str)?))
}

fn scalar(hex_str: &str, params: &CurveParams) -> Result<ScalarKey, StoreError> {
    let bytes = hex::decode(hex_str).map_err(|_| corrupt("scalar hex"))?;
    ScalarKey::new(BigUint::from_bytes_be(&bytes), params).map_err(|e| corrupt(e.to_string()))
}

fn point(hex_str: &str, params: &CurveParams) -> Result<CurvePoint, StoreError> {
    let bytes = hex::decode(hex_str).map_err(|_| corrupt("point hex"))?;
    CurvePoint::decode(&bytes, params).map_err(|e| corrupt(e.to_string()))
}

fn identity(hex_str: &str, role: Role) -> Result<Identity, StoreError> {
    let bytes = hex::decode(hex_str).map_err(|_| corrupt("identity hex"))?;
    if bytes.len() != IDENTITY_LEN {
        return Err(corrupt(format!("identity is {} bytes, expected 20", bytes.len())));
    }
    Ok(Identity::from_bytes(bytes.try_into().expect("checked"), role))
}

/// Writes a smart card to its own JSON file.
pub fn save_card(path: &Path, card: &SmartCard) -> Result<(), StoreError> {
    let json = serde_json::to_vec_pretty(card).expect("card encodes");
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_card(path: &Path) -> Result<SmartCard, StoreError> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))
}

/// The wall-clock boundary: unix milliseconds truncated to the wire width.
pub fn wall_now() -> Timestamp {
    super::clock::Clock::now(&super::clock::SystemClock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::make_rng;
    use crate::protocol::GatewayConfig;

    fn sample_deployment_on(curve: std::sync::Arc<CurveParams>) -> Deployment {
        let mut rng = make_rng(Some(81));
        let mut deployment = Deployment::init(
            curve,
            GatewayConfig::default(),
            2,
            &[Level(1), Level(3)],
            &mut rng,
        )
        .unwrap();
        deployment.register_user(0, "pw one", Level(2), &mut rng).unwrap();
        deployment
    }

    fn sample_deployment() -> Deployment {
        sample_deployment_on(CurveParams::tiny23())
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = RegistryStore::at(dir.path().join("deploy.json"));
        let deployment = sample_deployment();
        let mut rng = make_rng(Some(82));
        store.save(&deployment, "open sesame", &mut rng, false).unwrap();
        let loaded = store.load("open sesame").unwrap();
        assert_eq!(loaded.gw.master.as_bytes(), deployment.gw.master.as_bytes());
        assert_eq!(loaded.gw.pub_key, deployment.gw.pub_key);
        assert_eq!(loaded.users.len(), 2);
        assert_eq!(loaded.sensors.len(), 2);
        assert_eq!(loaded.users[0].card, deployment.users[0].card);
        assert_eq!(loaded.gw.registry.len(), 4);
    }

    #[test]
    fn wrong_passphrase_and_tamper_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let store = RegistryStore::at(dir.path().join("deploy.json"));
        let mut rng = make_rng(Some(83));
        store.save(&sample_deployment(), "right", &mut rng, false).unwrap();
        assert!(matches!(store.load("wrong"), Err(StoreError::WrongPassphrase)));

        // Flip one ciphertext byte: the passphrase is fine, the file is not.
        let raw = std::fs::read_to_string(store.path()).unwrap();
        let mut file: serde_json::Value = serde_json::from_str(&raw).unwrap();
        let ct = file["ciphertext"].as_str().unwrap().to_string();
        let mut bytes = hex::decode(ct).unwrap();
        bytes[10] ^= 1;
        file["ciphertext"] = serde_json::Value::String(hex::encode(bytes));
        std::fs::write(store.path(), serde_json::to_vec(&file).unwrap()).unwrap();
        assert!(matches!(store.load("right"), Err(StoreError::CorruptStore(_))));
    }

    #[test]
    fn master_secret_never_stored_in_plaintext() {
        let dir = tempfile::tempdir().unwrap();
        let store = RegistryStore::at(dir.path().join("deploy.json"));
        // Wide scalars: a chance hex collision is impossible on P-256.
        let deployment = sample_deployment_on(CurveParams::p256());
        let mut rng = make_rng(Some(84));
        store.save(&deployment, "pp", &mut rng, false).unwrap();
        let raw = std::fs::read_to_string(store.path()).unwrap();
        let master_hex = hex::encode(deployment.gw.master.as_bytes());
        let priv_hex = hex::encode(deployment.gw.priv_key.encode(&deployment.params));
        assert!(!raw.contains(&master_hex));
        assert!(!raw.contains(&priv_hex));
    }

    #[test]
    fn overwrite_requires_force() {
        let dir = tempfile::tempdir().unwrap();
        let store = RegistryStore::at(dir.path().join("deploy.json"));
        let deployment = sample_deployment();
        let mut rng = make_rng(Some(85));
        store.save(&deployment, "pp", &mut rng, false).unwrap();
        assert!(matches!(
            store.save(&deployment, "pp", &mut rng, false),
            Err(StoreError::AlreadyExists(_))
        ));
        store.save(&deployment, "pp", &mut rng, true).unwrap();
    }

    #[test]
    fn card_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let deployment = sample_deployment();
        let card = deployment.users[0].card.clone().unwrap();
        let path = dir.path().join("card.json");
        save_card(&path, &card).unwrap();
        assert_eq!(load_card(&path).unwrap(), card);
    }
}
