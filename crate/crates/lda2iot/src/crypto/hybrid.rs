//! Hybrid public-key encryption for multi-field byte payloads.
//!
//! DHIES-style: an ephemeral scalar produces a shared curve point, SHA-256
//! derives a stream key and a MAC key from it, the length-prefixed field
//! sequence is XORed with the keystream, and the tag binds the ephemeral
//! point and the ciphertext body. Decryption is all-or-nothing.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::curve::{scalar_mult, CurveParams, CurvePoint, ScalarKey};
use super::hash::{sha256_raw, DIGEST_LEN};
use super::CryptoError;
use crate::instrument::{self, Op};

const KDF_ENC: &[u8] = b"lda2iot/hybrid/enc";
const KDF_MAC: &[u8] = b"lda2iot/hybrid/mac";

/// Ephemeral point, encrypted body and integrity tag.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PayloadCiphertext {
    pub ephemeral: Vec<u8>,
    pub body: Vec<u8>,
    pub tag: [u8; DIGEST_LEN],
}

/// Encrypts an ordered field list to `recipient_pub`.
pub fn hybrid_encrypt(
    recipient_pub: &CurvePoint,
    fields: &[&[u8]],
    params: &CurveParams,
    rng: &mut dyn RngCore,
) -> Result<PayloadCiphertext, CryptoError> {
    if !params.contains(recipient_pub) || recipient_pub.is_infinity() {
        return Err(CryptoError::InvalidPoint);
    }
    instrument::tick(Op::Encrypt);
    let k = rng.gen_biguint_range(&BigUint::one(), &params.n);
    let ephemeral = scalar_mult(&k, &params.generator, params)?;
    let shared = scalar_mult(&k, recipient_pub, params)?;
    let eph_bytes = ephemeral.encode(params);
    let (key_enc, key_mac) = derive_keys(&shared, &eph_bytes, params);

    let mut body = encode_fields(fields);
    apply_stream(&key_enc, &mut body);
    let tag = mac(&key_mac, &eph_bytes, &body);
    Ok(PayloadCiphertext { ephemeral: eph_bytes, body, tag })
}

/// Recovers the field list or fails atomically.
pub fn hybrid_decrypt(
    ct: &PayloadCiphertext,
    private: &ScalarKey,
    params: &CurveParams,
) -> Result<Vec<Vec<u8>>, CryptoError> {
    instrument::tick(Op::Decrypt);
    let ephemeral = CurvePoint::decode(&ct.ephemeral, params)?;
    let shared = scalar_mult(private.value(), &ephemeral, params)?;
    let (key_enc, key_mac) = derive_keys(&shared, &ct.ephemeral, params);
    if mac(&key_mac, &ct.ephemeral, &ct.body) != ct.tag {
        return Err(CryptoError::IntegrityFailure);
    }
    let mut body = ct.body.clone();
    apply_stream(&key_enc, &mut body);
    decode_fields(&body)
}

fn derive_keys(
    shared: &CurvePoint,
    eph_bytes: &[u8],
    params: &CurveParams,
) -> ([u8; DIGEST_LEN], [u8; DIGEST_LEN]) {
    let shared_bytes = shared.encode(params);
    let enc = sha256_raw(&[KDF_ENC, &shared_bytes, eph_bytes]);
    let mac = sha256_raw(&[KDF_MAC, &shared_bytes, eph_bytes]);
    (enc, mac)
}

fn apply_stream(key: &[u8; DIGEST_LEN], data: &mut [u8]) {
    for (block_idx, chunk) in data.chunks_mut(DIGEST_LEN).enumerate() {
        let counter = (block_idx as u32).to_be_bytes();
        let block = sha256_raw(&[key, &counter]);
        for (byte, pad) in chunk.iter_mut().zip(block.iter()) {
            *byte ^= pad;
        }
    }
}

fn mac(key: &[u8; DIGEST_LEN], eph: &[u8], body: &[u8]) -> [u8; DIGEST_LEN] {
    sha256_raw(&[key, &(eph.len() as u32).to_be_bytes(), eph, body])
}

fn encode_fields(fields: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(fields.len() as u16).to_be_bytes());
    for field in fields {
        out.extend_from_slice(&(field.len() as u32).to_be_bytes());
        out.extend_from_slice(field);
    }
    out
}

fn decode_fields(body: &[u8]) -> Result<Vec<Vec<u8>>, CryptoError> {
    let malformed = || CryptoError::MalformedCiphertext;
    if body.len() < 2 {
        return Err(malformed());
    }
    let count = u16::from_be_bytes([body[0], body[1]]) as usize;
    let mut fields = Vec::with_capacity(count);
    let mut cursor = 2usize;
    for _ in 0..count {
        let len_bytes: [u8; 4] = body
            .get(cursor..cursor + 4)
            .ok_or_else(malformed)?
            .try_into()
            .unwrap();
        let len = u32::from_be_bytes(len_bytes) as usize;
        cursor += 4;
        let field = body.get(cursor..cursor + len).ok_or_else(malformed)?;
        cursor += len;
        fields.push(field.to_vec());
    }
    if cursor != body.len() {
        return Err(malformed());
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::curve::keygen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn setup() -> (std::sync::Arc<CurveParams>, ScalarKey, CurvePoint, ChaCha20Rng) {
        let params = CurveParams::p256();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (sk, pk) = keygen(&params, &mut rng);
        (params, sk, pk, rng)
    }

    #[test]
    fn round_trip_preserves_fields_and_order() {
        let (params, sk, pk, mut rng) = setup();
        let fields: [&[u8]; 3] = [b"alpha", b"b", &[0u8; 40]];
        let ct = hybrid_encrypt(&pk, &fields, &params, &mut rng).unwrap();
        let out = hybrid_decrypt(&ct, &sk, &params).unwrap();
        assert_eq!(out, vec![b"alpha".to_vec(), b"b".to_vec(), vec![0u8; 40]]);
    }

    #[test]
    fn wrong_key_is_an_integrity_failure() {
        let (params, _, pk, mut rng) = setup();
        let (other_sk, _) = keygen(&params, &mut rng);
        let ct = hybrid_encrypt(&pk, &[b"secret"], &params, &mut rng).unwrap();
        assert!(matches!(
            hybrid_decrypt(&ct, &other_sk, &params),
            Err(CryptoError::IntegrityFailure)
        ));
    }

    #[test]
    fn tamper_sweep_over_body_tag_and_ephemeral() {
        let (params, sk, pk, mut rng) = setup();
        let ct = hybrid_encrypt(&pk, &[b"payload bytes", &[9u8; 32]], &params, &mut rng).unwrap();
        for _ in 0..100 {
            let mut tampered = ct.clone();
            let bit = rng.gen_range(0..tampered.body.len() * 8);
            tampered.body[bit / 8] ^= 1 << (bit % 8);
            assert!(hybrid_decrypt(&tampered, &sk, &params).is_err());
        }
        for bit in 0..16 {
            let mut tampered = ct.clone();
            tampered.tag[bit / 8] ^= 1 << (bit % 8);
            assert!(hybrid_decrypt(&tampered, &sk, &params).is_err());
        }
        // Flipping the ephemeral point either leaves the curve or breaks the MAC.
        for byte in 1..ct.ephemeral.len() {
            let mut tampered = ct.clone();
            tampered.ephemeral[byte] ^= 1;
            assert!(hybrid_decrypt(&tampered, &sk, &params).is_err());
        }
    }

    #[test]
    fn truncated_body_is_malformed_after_forged_tag() {
        // Exercises the field decoder directly.
        assert!(matches!(decode_fields(&[]), Err(CryptoError::MalformedCiphertext)));
        assert!(matches!(decode_fields(&[0, 2, 0]), Err(CryptoError::MalformedCiphertext)));
        let good = encode_fields(&[b"ab"]);
        assert_eq!(decode_fields(&good).unwrap(), vec![b"ab".to_vec()]);
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(decode_fields(&trailing).is_err());
    }
}
