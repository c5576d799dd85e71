//! Point ElGamal: C = (k·G, P_m + k·Q) and its inverse.
//!
//! The textbook public-key primitive over curve points. Protocol payloads are
//! arbitrary byte fields and use the hybrid construction instead; this
//! primitive is kept faithful to the point form and verified exhaustively on
//! the small curve.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::RngCore;

use super::curve::{point_add, scalar_mult, CurveParams, CurvePoint, ScalarKey};
use super::CryptoError;

/// Encrypts an on-curve plaintext point to a recipient public key.
pub fn ecc_encrypt_point(
    plaintext: &CurvePoint,
    recipient_pub: &CurvePoint,
    params: &CurveParams,
    rng: &mut dyn RngCore,
) -> Result<(CurvePoint, CurvePoint), CryptoError> {
    if !params.contains(plaintext) || !params.contains(recipient_pub) {
        return Err(CryptoError::InvalidPoint);
    }
    let k = rng.gen_biguint_range(&BigUint::one(), &params.n);
    encrypt_with_ephemeral(plaintext, recipient_pub, &k, params)
}

/// Deterministic core used by the exhaustive oracle tests.
pub fn encrypt_with_ephemeral(
    plaintext: &CurvePoint,
    recipient_pub: &CurvePoint,
    k: &BigUint,
    params: &CurveParams,
) -> Result<(CurvePoint, CurvePoint), CryptoError> {
    let c1 = scalar_mult(k, &params.generator, params)?;
    let mask = scalar_mult(k, recipient_pub, params)?;
    let c2 = point_add(plaintext, &mask, params)?;
    Ok((c1, c2))
}

/// Recovers the plaintext point: P_m = C₂ - priv·C₁.
pub fn ecc_decrypt_point(
    ciphertext: &(CurvePoint, CurvePoint),
    private: &ScalarKey,
    params: &CurveParams,
) -> Result<CurvePoint, CryptoError> {
    let (c1, c2) = ciphertext;
    if !params.contains(c1) || !params.contains(c2) {
        return Err(CryptoError::InvalidPoint);
    }
    let mask = scalar_mult(private.value(), c1, params)?;
    point_add(c2, &params.negate(&mask), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::curve::keygen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_on_p256() {
        let params = CurveParams::p256();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (sk, pk) = keygen(&params, &mut rng);
        let (_, plaintext) = keygen(&params, &mut rng);
        let ct = ecc_encrypt_point(&plaintext, &pk, &params, &mut rng).unwrap();
        assert_eq!(ecc_decrypt_point(&ct, &sk, &params).unwrap(), plaintext);
    }

    #[test]
    fn identity_plaintext_round_trips() {
        let params = CurveParams::tiny23();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let (sk, pk) = keygen(&params, &mut rng);
        let ct = ecc_encrypt_point(&CurvePoint::Infinity, &pk, &params, &mut rng).unwrap();
        assert!(ecc_decrypt_point(&ct, &sk, &params).unwrap().is_infinity());
    }

    #[test]
    fn off_curve_component_rejected() {
        let params = CurveParams::tiny23();
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let (sk, pk) = keygen(&params, &mut rng);
        let bogus = CurvePoint::affine(BigUint::from(2u8), BigUint::from(2u8));
        assert!(ecc_encrypt_point(&bogus, &pk, &params, &mut rng).is_err());
        let ct = (bogus, params.generator.clone());
        assert!(ecc_decrypt_point(&ct, &sk, &params).is_err());
    }
}
