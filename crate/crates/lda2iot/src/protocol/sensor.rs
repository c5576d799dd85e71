//! Sensor-side protocol: Temp_1 verification, the M_3 response, the grant
//! check and the session-key derivation from Message 7.

use rand::RngCore;

use crate::crypto::{
    hash, hash_parts, hybrid_decrypt, hybrid_encrypt, CurveParams, CurvePoint, Digest, Nonce,
    PayloadCiphertext, ScalarKey, Timestamp,
};

use super::freshness::check_freshness;
use super::gateway::{as_digest, as_identity, as_nonce, take_fields};
use super::messages::WireMessage;
use super::types::{Identity, ProtocolError, Role, SessionKey};

/// Secret memory of one sensing device: Y_1, Y_2, the private key and the
/// level tag D_j. Y_1 is stored as issued but unused by the key agreement.
pub struct SensorCredentials {
    pub y1: Digest,
    pub y2: Digest,
    pub priv_key: ScalarKey,
    pub pub_key: CurvePoint,
    pub sid: Identity,
    pub d_j: Digest,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum SensorPhase {
    AwaitMsg4,
    AwaitMsg7,
    Done,
}

/// Per-session sensor context: r_2 chosen when answering Message 2 and r_1
/// learned from the grant.
pub struct SensorSession {
    r_1: Option<Nonce>,
    r_2: Nonce,
    phase: SensorPhase,
    aborted: bool,
}

impl SensorSession {
    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn mark_aborted(&mut self) {
        self.aborted = true;
    }

    fn guard(&self, expect: SensorPhase) -> Result<(), ProtocolError> {
        if self.aborted {
            return Err(ProtocolError::SessionAborted);
        }
        if self.phase != expect {
            return Err(ProtocolError::WrongPhase);
        }
        Ok(())
    }
}

/// Message 2 handling: verify Temp_1 with the stored Y_2 and answer with
/// M_3 = Enc_GW[M_2, D_j, r_2].
pub fn sensor_handle_msg2(
    sensor: &SensorCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    temp1: &Digest,
    t2: Timestamp,
    now: Timestamp,
    delta_t: u32,
    rng: &mut dyn RngCore,
) -> Result<(WireMessage, SensorSession), ProtocolError> {
    check_freshness(t2, now, delta_t)?;
    let pub_bytes = sensor.pub_key.encode(params);
    let expected = hash_parts(&[
        &pub_bytes,
        sensor.y2.as_bytes(),
        &gw_pub.encode(params),
        &t2.encode(),
    ]);
    if expected != *temp1 {
        return Err(ProtocolError::VerificationFailure("Temp_1"));
    }

    let t3 = now;
    let m2 = hash_parts(&[sensor.y2.as_bytes(), &t3.encode(), &pub_bytes]);
    // r_2 rides to the gateway here so it can come back to the user in M_13.
    let r_2 = Nonce::random_default(rng);
    let m3 = hybrid_encrypt(
        gw_pub,
        &[m2.as_bytes(), sensor.d_j.as_bytes(), r_2.as_bytes()],
        params,
        rng,
    )?;
    let session = SensorSession { r_1: None, r_2, phase: SensorPhase::AwaitMsg4, aborted: false };
    Ok((WireMessage::Msg3 { m3, t3 }, session))
}

/// Message 4 handling: decrypt the grant, check it names this sensor,
/// verify M_4 and answer with the M_6/M_7 digests.
#[allow(clippy::too_many_arguments)]
pub fn sensor_handle_msg4(
    sensor: &SensorCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    session: &mut SensorSession,
    m5: &PayloadCiphertext,
    pub_ui: &[u8],
    t4: Timestamp,
    now: Timestamp,
    delta_t: u32,
) -> Result<WireMessage, ProtocolError> {
    let result =
        sensor_handle_msg4_inner(sensor, gw_pub, params, session, m5, pub_ui, t4, now, delta_t);
    if result.is_err() {
        session.aborted = true;
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn sensor_handle_msg4_inner(
    sensor: &SensorCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    session: &mut SensorSession,
    m5: &PayloadCiphertext,
    pub_ui: &[u8],
    t4: Timestamp,
    now: Timestamp,
    delta_t: u32,
) -> Result<WireMessage, ProtocolError> {
    check_freshness(t4, now, delta_t)?;
    session.guard(SensorPhase::AwaitMsg4)?;

    // The clear user public key must be a valid enrolled-shape point.
    let user_pub = CurvePoint::decode(pub_ui, params)?;
    let user_pub_bytes = user_pub.encode(params);

    let fields = hybrid_decrypt(m5, &sensor.priv_key, params)?;
    let [m4, sid, r_1] = take_fields(fields)?;
    let m4 = as_digest(&m4)?;
    let sid = as_identity(&sid, Role::Sensor)?;
    let r_1 = as_nonce(r_1)?;
    if sid.as_bytes() != sensor.sid.as_bytes() {
        return Err(ProtocolError::IdentityMismatch);
    }

    let hy2 = hash(sensor.y2.as_bytes());
    let expected_m4 = hash_parts(&[
        &user_pub_bytes,
        &t4.encode(),
        &gw_pub.encode(params),
        r_1.as_bytes(),
        hy2.as_bytes(),
    ]);
    if expected_m4 != m4 {
        return Err(ProtocolError::VerificationFailure("M_4"));
    }

    let t5 = now;
    let pub_bytes = sensor.pub_key.encode(params);
    let m6 = hash_parts(&[
        &pub_bytes,
        &gw_pub.encode(params),
        &user_pub_bytes,
        session.r_2.as_bytes(),
        &t5.encode(),
    ]);
    let m7 = hash_parts(&[
        r_1.as_bytes(),
        m6.as_bytes(),
        sensor.sid.as_bytes(),
        &pub_bytes,
        &t5.encode(),
    ]);

    session.r_1 = Some(r_1);
    session.phase = SensorPhase::AwaitMsg7;
    // r_2 stays generated at Message 2 time; nothing new to cache for it.
    Ok(WireMessage::Msg5 { m6, m7, t5 })
}

/// Message 7 handling: decrypt M_14, verify M_12 and derive the session key
/// SK = H(M_8 || M_10 || Y_2 || T_6 || r_1 || r_2 || r_t).
pub fn sensor_handle_msg7(
    sensor: &SensorCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    session: &mut SensorSession,
    m14: &PayloadCiphertext,
    t6: Timestamp,
    now: Timestamp,
    delta_t: u32,
) -> Result<SessionKey, ProtocolError> {
    let result = sensor_handle_msg7_inner(sensor, gw_pub, params, session, m14, t6, now, delta_t);
    if result.is_err() {
        session.aborted = true;
    }
    result
}

#[allow(clippy::too_many_arguments)]
fn sensor_handle_msg7_inner(
    sensor: &SensorCredentials,
    gw_pub: &CurvePoint,
    params: &CurveParams,
    session: &mut SensorSession,
    m14: &PayloadCiphertext,
    t6: Timestamp,
    now: Timestamp,
    delta_t: u32,
) -> Result<SessionKey, ProtocolError> {
    check_freshness(t6, now, delta_t)?;
    session.guard(SensorPhase::AwaitMsg7)?;
    let r_1 = session.r_1.as_ref().expect("phase AwaitMsg7 implies r_1");

    let fields = hybrid_decrypt(m14, &sensor.priv_key, params)?;
    let [m8, m10, m12, r_t] = take_fields(fields)?;
    let m8 = as_digest(&m8)?;
    let m10 = as_digest(&m10)?;
    let m12 = as_digest(&m12)?;
    let r_t = as_nonce(r_t)?;

    let expected_m12 = hash_parts(&[
        &gw_pub.encode(params),
        sensor.sid.as_bytes(),
        &sensor.pub_key.encode(params),
        &t6.encode(),
    ]);
    if expected_m12 != m12 {
        return Err(ProtocolError::VerificationFailure("M_12"));
    }

    let sk = hash_parts(&[
        m8.as_bytes(),
        m10.as_bytes(),
        sensor.y2.as_bytes(),
        &t6.encode(),
        r_1.as_bytes(),
        session.r_2.as_bytes(),
        r_t.as_bytes(),
    ]);
    session.phase = SensorPhase::Done;
    Ok(SessionKey(sk))
}
