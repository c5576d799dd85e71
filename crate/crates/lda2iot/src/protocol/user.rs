//! User-side protocol: registration, smart-card login, Message 1 and the
//! session-key derivation from Message 6.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::crypto::{
    hash, hash_parts, hybrid_decrypt, hybrid_encrypt, CurveParams, CurvePoint, Digest, Nonce,
    PayloadCiphertext, ScalarKey, Timestamp, DIGEST_LEN, NONCE_LEN,
};

use super::freshness::check_freshness;
use super::gateway::{as_digest, as_nonce, take_fields};
use super::messages::WireMessage;
use super::types::{Identity, ProtocolError, SessionKey};

/// Secret memory of one user device: X_1, X_2 and the private key, plus the
/// identity and public key. X_1 is never consumed by the key agreement but
/// is stored as issued.
pub struct UserCredentials {
    pub x1: Digest,
    pub x2: Digest,
    pub priv_key: ScalarKey,
    pub pub_key: CurvePoint,
    pub uid: Identity,
}

/// What the user sends to the gateway over the secure registration channel.
#[derive(Clone, Copy, Debug)]
pub struct RegistrationRequest {
    pub uid: Identity,
}

/// Values the user keeps to itself between the two registration halves.
pub struct RegistrationHeld {
    pub r_a: Nonce,
    pub r_b: Nonce,
    pub tpw: [u8; DIGEST_LEN],
}

/// Gateway half of the card: Reg_i and the level tag B_i.
#[derive(Clone, Debug)]
pub struct CardDraft {
    pub reg_i: Digest,
    pub b_i: Digest,
}

/// The issued smart card {Reg_i*, L_1, L_2, B_i} plus the curve name.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SmartCard {
    #[serde(with = "hex::serde")]
    pub reg_star: [u8; DIGEST_LEN],
    #[serde(with = "hex::serde")]
    pub l1: [u8; DIGEST_LEN],
    pub l2: Digest,
    pub b_i: Digest,
    pub curve_name: String,
}

/// First registration step: blind the password digest with R_b.
pub fn register_user_begin(
    password: &[u8],
    uid: &Identity,
    rng: &mut dyn RngCore,
) -> Result<(RegistrationRequest, RegistrationHeld), ProtocolError> {
    if password.is_empty() {
        return Err(ProtocolError::EmptyPassword);
    }
    let r_a = Nonce::random_default(rng);
    let r_b = Nonce::random_default(rng);
    let tpw = hash_parts(&[password, r_a.as_bytes()]).xor_padded(r_b.as_bytes());
    Ok((RegistrationRequest { uid: *uid }, RegistrationHeld { r_a, r_b, tpw }))
}

/// Final registration step: fold R_a and R_b into the card fields.
pub fn register_user_finalize(
    draft: &CardDraft,
    held: &RegistrationHeld,
    uid: &Identity,
    password: &[u8],
    curve_name: &str,
) -> SmartCard {
    let l1 = hash(uid.as_bytes()).xor_padded(held.r_a.as_bytes());
    let tpw_prime = hash_parts(&[password, held.r_a.as_bytes()]);
    let l2 = hash_parts(&[uid.as_bytes(), tpw_prime.as_bytes()]);
    let reg_star = draft.reg_i.xor_padded(held.r_b.as_bytes());
    SmartCard { reg_star, l1, l2, b_i: draft.b_i, curve_name: curve_name.to_string() }
}

/// Two-factor login: recover R_a from the card, rebuild L_2 and compare.
pub fn login_verify(
    uid: &Identity,
    password: &[u8],
    card: &SmartCard,
) -> Result<(), ProtocolError> {
    let padded_r_a = hash(uid.as_bytes()).xor_padded(&card.l1);
    let r_a = &padded_r_a[..NONCE_LEN];
    let tpw = hash_parts(&[password, r_a]);
    let l2 = hash_parts(&[uid.as_bytes(), tpw.as_bytes()]);
    if l2 != card.l2 {
        return Err(ProtocolError::BadCredentials);
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum UserPhase {
    AwaitMsg6,
    Done,
}

/// Per-session user context: the nonce r_t and the request timestamp.
pub struct UserSession {
    r_t: Nonce,
    t1: Timestamp,
    phase: UserPhase,
    aborted: bool,
}

impl UserSession {
    pub fn t1(&self) -> Timestamp {
        self.t1
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn mark_aborted(&mut self) {
        self.aborted = true;
    }
}

/// Builds Message 1 = {M_1, Temp_0, T_1} after a successful login.
pub fn build_msg1(
    user: &UserCredentials,
    card: &SmartCard,
    target_pub: &CurvePoint,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    now: Timestamp,
    rng: &mut dyn RngCore,
) -> Result<(WireMessage, UserSession), ProtocolError> {
    let t1 = now;
    let r_t = Nonce::random_default(rng);
    let temp0 = hash_parts(&[user.x2.as_bytes(), &t1.encode(), r_t.as_bytes()]);
    let m1 = hybrid_encrypt(
        gw_pub,
        &[
            temp0.as_bytes(),
            &user.pub_key.encode(params),
            &target_pub.encode(params),
            r_t.as_bytes(),
            card.b_i.as_bytes(),
        ],
        params,
        rng,
    )?;
    let session = UserSession { r_t, t1, phase: UserPhase::AwaitMsg6, aborted: false };
    Ok((WireMessage::Msg1 { m1, temp0, t1 }, session))
}

/// Message 6 handling: decrypt M_13, verify M_11 and derive the session key
/// SK = H(M_8 || X_2 || M_9 || T_6 || r_1 || r_2 || r_t).
pub fn user_handle_msg6(
    user: &UserCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    session: &mut UserSession,
    m13: &PayloadCiphertext,
    t6: Timestamp,
    now: Timestamp,
    delta_t: u32,
) -> Result<SessionKey, ProtocolError> {
    let result = user_handle_msg6_inner(user, gw_pub, params, session, m13, t6, now, delta_t);
    if result.is_err() {
        session.aborted = true;
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn user_handle_msg6_inner(
    user: &UserCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    session: &mut UserSession,
    m13: &PayloadCiphertext,
    t6: Timestamp,
    now: Timestamp,
    delta_t: u32,
) -> Result<SessionKey, ProtocolError> {
    check_freshness(t6, now, delta_t)?;
    if session.aborted {
        return Err(ProtocolError::SessionAborted);
    }
    if session.phase != UserPhase::AwaitMsg6 {
        return Err(ProtocolError::WrongPhase);
    }

    let fields = hybrid_decrypt(m13, &user.priv_key, params)?;
    let [m8, m9, m11, r_1, r_2] = take_fields(fields)?;
    let m8 = as_digest(&m8)?;
    let m9 = as_digest(&m9)?;
    let m11 = as_digest(&m11)?;
    let r_1 = as_nonce(r_1)?;
    let r_2 = as_nonce(r_2)?;

    let expected_m11 = hash_parts(&[
        &user.pub_key.encode(params),
        user.uid.as_bytes(),
        &gw_pub.encode(params),
        &t6.encode(),
    ]);
    if expected_m11 != m11 {
        return Err(ProtocolError::VerificationFailure("M_11"));
    }

    let sk = hash_parts(&[
        m8.as_bytes(),
        user.x2.as_bytes(),
        m9.as_bytes(),
        &t6.encode(),
        r_1.as_bytes(),
        r_2.as_bytes(),
        session.r_t.as_bytes(),
    ]);
    session.phase = UserPhase::Done;
    Ok(SessionKey(sk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::make_rng;
    use crate::protocol::types::Role;

    fn sample_card(
        uid: &Identity,
        password: &[u8],
        rng: &mut dyn RngCore,
    ) -> (SmartCard, RegistrationHeld) {
        let (_, held) = register_user_begin(password, uid, rng).unwrap();
        let draft = CardDraft { reg_i: hash(b"reg"), b_i: hash(b"tag") };
        let card = register_user_finalize(&draft, &held, uid, password, "P-256");
        (card, held)
    }

    #[test]
    fn tpw_blinding_is_an_involution() {
        let mut rng = make_rng(Some(41));
        let uid = Identity::random(Role::User, &mut rng);
        let (_, held) = register_user_begin(b"hunter2", &uid, &mut rng).unwrap();
        assert_eq!(held.r_a.len(), 16);
        assert_eq!(held.r_b.len(), 16);
        let unblinded = Digest(held.tpw).xor_padded(held.r_b.as_bytes());
        assert_eq!(Digest(unblinded), hash_parts(&[b"hunter2", held.r_a.as_bytes()]));
        let (_, held2) = register_user_begin(b"hunter2", &uid, &mut rng).unwrap();
        assert_ne!(held.tpw, held2.tpw, "fresh randoms blind differently");
        assert!(matches!(
            register_user_begin(b"", &uid, &mut rng),
            Err(ProtocolError::EmptyPassword)
        ));
    }

    #[test]
    fn card_fields_unblind() {
        let mut rng = make_rng(Some(42));
        let uid = Identity::random(Role::User, &mut rng);
        let (card, held) = sample_card(&uid, b"pw", &mut rng);
        // L_1 xor H(UID) recovers the padded R_a.
        let recovered = hash(uid.as_bytes()).xor_padded(&card.l1);
        assert_eq!(&recovered[..16], held.r_a.as_bytes());
        assert_eq!(&recovered[16..], &[0u8; 16]);
        // Reg_i* xor R_b recovers Reg_i.
        let reg = Digest(card.reg_star).xor_padded(held.r_b.as_bytes());
        assert_eq!(Digest(reg), hash(b"reg"));
    }

    #[test]
    fn login_round_trip_and_negatives() {
        let mut rng = make_rng(Some(43));
        let uid = Identity::random(Role::User, &mut rng);
        let (card, _) = sample_card(&uid, b"correct horse", &mut rng);
        assert!(login_verify(&uid, b"correct horse", &card).is_ok());
        assert_eq!(
            login_verify(&uid, b"wrong", &card),
            Err(ProtocolError::BadCredentials)
        );
        let other = Identity::random(Role::User, &mut rng);
        assert_eq!(
            login_verify(&other, b"correct horse", &card),
            Err(ProtocolError::BadCredentials)
        );
    }
}
