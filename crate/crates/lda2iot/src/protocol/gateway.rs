//! Gateway state, enrollment, level recovery, the LDA decision and the
//! gateway's three key-agreement steps.

use rand::RngCore;
use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::crypto::{
    hash, hash_parts, hybrid_decrypt, hybrid_encrypt, keygen, CurveParams, CurvePoint, Digest,
    Nonce, PayloadCiphertext, ScalarKey, Timestamp, DIGEST_LEN, NONCE_LEN,
};
use crate::instrument;

use super::freshness::check_freshness;
use super::messages::WireMessage;
use super::sensor::SensorCredentials;
use super::types::{Access, Identity, Level, MasterSecret, ProtocolError, Role, IDENTITY_LEN};
use super::user::{CardDraft, UserCredentials};

/// Enrolled public keys and the identities behind them.
#[derive(Clone, Default, Debug)]
pub struct EnrollmentRegistry {
    users: HashMap<Vec<u8>, Identity>,
    sensors: HashMap<Vec<u8>, Identity>,
}

impl EnrollmentRegistry {
    pub fn user_by_pub(&self, encoded_pub: &[u8]) -> Option<&Identity> {
        self.users.get(encoded_pub)
    }

    pub fn sensor_by_pub(&self, encoded_pub: &[u8]) -> Option<&Identity> {
        self.sensors.get(encoded_pub)
    }

    pub fn contains_user(&self, uid: &Identity) -> bool {
        self.users.values().any(|u| u.as_bytes() == uid.as_bytes())
    }

    pub fn insert_user(&mut self, encoded_pub: Vec<u8>, uid: Identity) {
        self.users.insert(encoded_pub, uid);
    }

    pub fn insert_sensor(&mut self, encoded_pub: Vec<u8>, sid: Identity) {
        self.sensors.insert(encoded_pub, sid);
    }

    pub fn len(&self) -> usize {
        self.users.len() + self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty() && self.sensors.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = (&Vec<u8>, &Identity)> {
        self.users.iter()
    }

    pub fn sensors(&self) -> impl Iterator<Item = (&Vec<u8>, &Identity)> {
        self.sensors.iter()
    }
}

/// Long-term gateway state. The master secret never leaves this struct
/// except into the encrypted-at-rest store.
pub struct GatewayState {
    pub priv_key: ScalarKey,
    pub pub_key: CurvePoint,
    pub master: MasterSecret,
    pub registry: EnrollmentRegistry,
    /// Freshness threshold ΔT in milliseconds.
    pub delta_t: u32,
    pub l_max: Level,
}

#[derive(Clone, Copy, Debug)]
pub struct GatewayConfig {
    pub delta_t: u32,
    pub l_max: Level,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { delta_t: 5_000, l_max: Level(16) }
    }
}

/// Fresh gateway keys, master secret and an empty registry.
pub fn gateway_init(
    params: &CurveParams,
    config: GatewayConfig,
    rng: &mut dyn RngCore,
) -> GatewayState {
    let (priv_key, pub_key) = keygen(params, rng);
    GatewayState {
        priv_key,
        pub_key,
        master: MasterSecret::random(rng),
        registry: EnrollmentRegistry::default(),
        delta_t: config.delta_t,
        l_max: config.l_max,
    }
}

/// Issues user keys and secret digests; the registry learns the public key.
pub fn user_init(
    gw: &mut GatewayState,
    params: &CurveParams,
    rng: &mut dyn RngCore,
) -> UserCredentials {
    let (priv_key, pub_key) = keygen(params, rng);
    let uid = Identity::random(Role::User, rng);
    let ks = gw.master.as_bytes();
    let x1 = hash_parts(&[&priv_key.encode(params), uid.as_bytes(), ks]);
    let x2 = hash_parts(&[uid.as_bytes(), &pub_key.encode(params), ks]);
    gw.registry.insert_user(pub_key.encode(params), uid);
    UserCredentials { x1, x2, priv_key, pub_key, uid }
}

/// Issues sensor keys, secret digests and the level tag D_j.
pub fn sensor_init(
    gw: &mut GatewayState,
    params: &CurveParams,
    level: Level,
    rng: &mut dyn RngCore,
) -> Result<SensorCredentials, ProtocolError> {
    level.check_range(gw.l_max)?;
    let (priv_key, pub_key) = keygen(params, rng);
    let sid = Identity::random(Role::Sensor, rng);
    let ks = gw.master.as_bytes();
    let y1 = hash_parts(&[&priv_key.encode(params), sid.as_bytes(), ks]);
    let y2 = hash_parts(&[sid.as_bytes(), &pub_key.encode(params), ks]);
    let d_j = level_tag(level, &gw.master, &sid);
    gw.registry.insert_sensor(pub_key.encode(params), sid);
    Ok(SensorCredentials { y1, y2, priv_key, pub_key, sid, d_j })
}

/// H(level || K_s || identity): the digest that hides a party's level.
pub fn level_tag(level: Level, ks: &MasterSecret, id: &Identity) -> Digest {
    hash_parts(&[&level.encode(), ks.as_bytes(), id.as_bytes()])
}

/// Gateway half of registration: Reg_i and the level tag B_i.
pub fn register_user_gateway(
    gw: &GatewayState,
    uid: &Identity,
    level: Level,
) -> Result<CardDraft, ProtocolError> {
    if !gw.registry.contains_user(uid) {
        return Err(ProtocolError::UnknownUser);
    }
    level.check_range(gw.l_max)?;
    let reg_i = hash_parts(&[uid.as_bytes(), gw.master.as_bytes()]);
    let b_i = level_tag(level, &gw.master, uid);
    Ok(CardDraft { reg_i, b_i })
}

/// Bounded ascending search for the level hidden in a tag.
pub fn recover_level(
    tag: &Digest,
    id: &Identity,
    ks: &MasterSecret,
    l_max: Level,
) -> Result<Level, ProtocolError> {
    instrument::in_level_search(|| {
        for l in 1..=l_max.0 {
            let candidate = Level(l);
            if level_tag(candidate, ks, id) == *tag {
                return Ok(candidate);
            }
        }
        Err(ProtocolError::LevelNotFound)
    })
}

/// Access rule: a user may reach sensors at or below its own rank,
/// where rank 1 is the highest privilege.
pub fn lda_decide(l_user: Level, l_sensor: Level) -> Access {
    if l_user <= l_sensor {
        Access::Allowed
    } else {
        Access::Denied
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum GwPhase {
    AwaitMsg3,
    AwaitMsg5,
    Done,
}

/// Per-session gateway context between Message 1 and Message 7.
#[derive(Debug)]
pub struct GwSession {
    uid: Identity,
    user_pub: CurvePoint,
    sid: Identity,
    sensor_pub: CurvePoint,
    r_t: Nonce,
    b_i: Digest,
    y2: Digest,
    r_1: Option<Nonce>,
    r_2: Option<Nonce>,
    phase: GwPhase,
    aborted: bool,
}

impl GwSession {
    fn guard(&self, expect: GwPhase) -> Result<(), ProtocolError> {
        if self.aborted {
            return Err(ProtocolError::SessionAborted);
        }
        if self.phase != expect {
            return Err(ProtocolError::WrongPhase);
        }
        Ok(())
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn user_id(&self) -> &Identity {
        &self.uid
    }

    pub fn sensor_id(&self) -> &Identity {
        &self.sid
    }
}

/// Outcome of the Message 3 step: the grant, or the level-rule denial that
/// turns into 0 signals for both parties.
#[derive(Debug)]
pub enum Msg3Outcome {
    Proceed(WireMessage),
    Denied,
}

#[derive(Debug)]
pub struct Msg3Handled {
    pub outcome: Msg3Outcome,
    /// Wall-clock time spent verifying and deciding (level recovery and the
    /// LDA rule), before any response construction.
    pub verify_time: Duration,
}

/// Message 1 handling: freshness, decrypt, identity lookup, Temp_0
/// verification, Temp_1 construction.
pub fn gw_handle_msg1(
    gw: &GatewayState,
    params: &CurveParams,
    m1: &PayloadCiphertext,
    temp0_clear: &Digest,
    t1: Timestamp,
    now: Timestamp,
) -> Result<(WireMessage, GwSession), ProtocolError> {
    check_freshness(t1, now, gw.delta_t)?;
    let fields = hybrid_decrypt(m1, &gw.priv_key, params)?;
    let [temp0_enc, user_pub_bytes, sensor_pub_bytes, r_t, b_i] = take_fields(fields)?;
    let temp0_enc = as_digest(&temp0_enc)?;
    let r_t = as_nonce(r_t)?;
    let b_i = as_digest(&b_i)?;

    // The clear copy and the encrypted copy must be the same digest,
    // otherwise envelopes were mixed and matched.
    if temp0_enc != *temp0_clear {
        return Err(ProtocolError::VerificationFailure("Temp_0 copies disagree"));
    }

    let user_pub = CurvePoint::decode(&user_pub_bytes, params)?;
    let sensor_pub = CurvePoint::decode(&sensor_pub_bytes, params)?;
    let uid = *gw
        .registry
        .user_by_pub(&user_pub_bytes)
        .ok_or(ProtocolError::UnknownUser)?;
    let sid = *gw
        .registry
        .sensor_by_pub(&sensor_pub_bytes)
        .ok_or(ProtocolError::UnknownSensor)?;

    let ks = gw.master.as_bytes();
    let x2 = hash_parts(&[uid.as_bytes(), &user_pub_bytes, ks]);
    let expected_temp0 = hash_parts(&[x2.as_bytes(), &t1.encode(), r_t.as_bytes()]);
    if expected_temp0 != *temp0_clear {
        return Err(ProtocolError::VerificationFailure("Temp_0"));
    }

    let t2 = now;
    let y2 = hash_parts(&[sid.as_bytes(), &sensor_pub_bytes, ks]);
    let temp1 = hash_parts(&[
        &sensor_pub_bytes,
        y2.as_bytes(),
        &gw.pub_key.encode(params),
        &t2.encode(),
    ]);

    let session = GwSession {
        uid,
        user_pub,
        sid,
        sensor_pub,
        r_t,
        b_i,
        y2,
        r_1: None,
        r_2: None,
        phase: GwPhase::AwaitMsg3,
        aborted: false,
    };
    Ok((WireMessage::Msg2 { temp1, t2 }, session))
}

/// Message 3 handling: M_2 verification, level recovery, the LDA decision
/// and, when allowed, the encrypted grant for the sensor.
pub fn gw_handle_msg3(
    gw: &GatewayState,
    params: &CurveParams,
    session: &mut GwSession,
    m3: &PayloadCiphertext,
    t3: Timestamp,
    now: Timestamp,
    rng: &mut dyn RngCore,
) -> Result<Msg3Handled, ProtocolError> {
    let result = gw_handle_msg3_inner(gw, params, session, m3, t3, now, rng);
    if result.is_err() {
        session.aborted = true;
    }
    result
}

fn gw_handle_msg3_inner(
    gw: &GatewayState,
    params: &CurveParams,
    session: &mut GwSession,
    m3: &PayloadCiphertext,
    t3: Timestamp,
    now: Timestamp,
    rng: &mut dyn RngCore,
) -> Result<Msg3Handled, ProtocolError> {
    check_freshness(t3, now, gw.delta_t)?;
    session.guard(GwPhase::AwaitMsg3)?;

    let verify_started = Instant::now();
    let fields = hybrid_decrypt(m3, &gw.priv_key, params)?;
    let [m2, d_j, r_2] = take_fields(fields)?;
    let m2 = as_digest(&m2)?;
    let d_j = as_digest(&d_j)?;
    let r_2 = as_nonce(r_2)?;

    let sensor_pub_bytes = session.sensor_pub.encode(params);
    let expected_m2 = hash_parts(&[session.y2.as_bytes(), &t3.encode(), &sensor_pub_bytes]);
    if expected_m2 != m2 {
        return Err(ProtocolError::VerificationFailure("M_2"));
    }

    let l_user = recover_level(&session.b_i, &session.uid, &gw.master, gw.l_max)?;
    let l_sensor = recover_level(&d_j, &session.sid, &gw.master, gw.l_max)?;
    let decision = lda_decide(l_user, l_sensor);
    let verify_time = verify_started.elapsed();

    if decision == Access::Denied {
        session.phase = GwPhase::Done;
        session.aborted = true;
        return Ok(Msg3Handled { outcome: Msg3Outcome::Denied, verify_time });
    }

    let r_1 = Nonce::random_default(rng);
    let t4 = now;
    let hy2 = hash(session.y2.as_bytes());
    let user_pub_bytes = session.user_pub.encode(params);
    let m4 = hash_parts(&[
        &user_pub_bytes,
        &t4.encode(),
        &gw.pub_key.encode(params),
        r_1.as_bytes(),
        hy2.as_bytes(),
    ]);
    let m5 = hybrid_encrypt(
        &session.sensor_pub,
        &[m4.as_bytes(), session.sid.as_bytes(), r_1.as_bytes()],
        params,
        rng,
    )?;

    session.r_1 = Some(r_1);
    session.r_2 = Some(r_2);
    session.phase = GwPhase::AwaitMsg5;
    Ok(Msg3Handled {
        outcome: Msg3Outcome::Proceed(WireMessage::Msg4 { m5, pub_ui: user_pub_bytes, t4 }),
        verify_time,
    })
}

/// Message 5 handling: M_7 verification and both key-material envelopes.
pub fn gw_handle_msg5(
    gw: &GatewayState,
    params: &CurveParams,
    session: &mut GwSession,
    m6: &Digest,
    m7: &Digest,
    t5: Timestamp,
    now: Timestamp,
    rng: &mut dyn RngCore,
) -> Result<(WireMessage, WireMessage), ProtocolError> {
    let result = gw_handle_msg5_inner(gw, params, session, m6, m7, t5, now, rng);
    if result.is_err() {
        session.aborted = true;
    }
    result
}

fn gw_handle_msg5_inner(
    gw: &GatewayState,
    params: &CurveParams,
    session: &mut GwSession,
    m6: &Digest,
    m7: &Digest,
    t5: Timestamp,
    now: Timestamp,
    rng: &mut dyn RngCore,
) -> Result<(WireMessage, WireMessage), ProtocolError> {
    check_freshness(t5, now, gw.delta_t)?;
    session.guard(GwPhase::AwaitMsg5)?;
    let r_1 = session.r_1.as_ref().expect("phase AwaitMsg5 implies r_1");
    let r_2 = session.r_2.as_ref().expect("phase AwaitMsg5 implies r_2");

    let sensor_pub_bytes = session.sensor_pub.encode(params);
    let expected_m7 = hash_parts(&[
        r_1.as_bytes(),
        m6.as_bytes(),
        session.sid.as_bytes(),
        &sensor_pub_bytes,
        &t5.encode(),
    ]);
    if expected_m7 != *m7 {
        return Err(ProtocolError::VerificationFailure("M_7"));
    }

    let r_3 = Nonce::random_default(rng);
    let t6 = now;
    let ks = gw.master.as_bytes();
    let gw_pub_bytes = gw.pub_key.encode(params);
    let user_pub_bytes = session.user_pub.encode(params);
    let m8 = hash_parts(&[r_3.as_bytes(), m6.as_bytes(), m7.as_bytes(), &t6.encode()]);
    let m9 = hash_parts(&[session.sid.as_bytes(), &sensor_pub_bytes, ks]);
    let m10 = hash_parts(&[session.uid.as_bytes(), &user_pub_bytes, ks]);
    let m11 = hash_parts(&[
        &user_pub_bytes,
        session.uid.as_bytes(),
        &gw_pub_bytes,
        &t6.encode(),
    ]);
    let m12 = hash_parts(&[
        &gw_pub_bytes,
        session.sid.as_bytes(),
        &sensor_pub_bytes,
        &t6.encode(),
    ]);

    let m13 = hybrid_encrypt(
        &session.user_pub,
        &[m8.as_bytes(), m9.as_bytes(), m11.as_bytes(), r_1.as_bytes(), r_2.as_bytes()],
        params,
        rng,
    )?;
    let m14 = hybrid_encrypt(
        &session.sensor_pub,
        &[m8.as_bytes(), m10.as_bytes(), m12.as_bytes(), session.r_t.as_bytes()],
        params,
        rng,
    )?;

    session.phase = GwPhase::Done;
    Ok((WireMessage::Msg6 { m13, t6 }, WireMessage::Msg7 { m14, t6 }))
}

pub(super) fn take_fields<const N: usize>(
    fields: Vec<Vec<u8>>,
) -> Result<[Vec<u8>; N], ProtocolError> {
    <[Vec<u8>; N]>::try_from(fields).map_err(|_| ProtocolError::MalformedPayload)
}

pub(super) fn as_digest(bytes: &[u8]) -> Result<Digest, ProtocolError> {
    if bytes.len() != DIGEST_LEN {
        return Err(ProtocolError::MalformedPayload);
    }
    Ok(Digest::from_slice(bytes).expect("length checked"))
}

pub(super) fn as_nonce(bytes: Vec<u8>) -> Result<Nonce, ProtocolError> {
    if bytes.len() != NONCE_LEN {
        return Err(ProtocolError::MalformedPayload);
    }
    Ok(Nonce::from_bytes(bytes))
}

pub(super) fn as_identity(bytes: &[u8], role: Role) -> Result<Identity, ProtocolError> {
    let arr: [u8; IDENTITY_LEN] =
        bytes.try_into().map_err(|_| ProtocolError::MalformedPayload)?;
    Ok(Identity::from_bytes(arr, role))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::make_rng;

    #[test]
    fn gateway_init_keys_recompute_and_registry_starts_empty() {
        let params = CurveParams::p256();
        let mut rng = make_rng(Some(31));
        let gw = gateway_init(&params, GatewayConfig::default(), &mut rng);
        let expected =
            crate::crypto::scalar_mult(gw.priv_key.value(), &params.generator, &params).unwrap();
        assert_eq!(gw.pub_key, expected);
        assert!(gw.registry.is_empty());
        let gw2 = gateway_init(&params, GatewayConfig::default(), &mut rng);
        assert_ne!(gw.master.as_bytes(), gw2.master.as_bytes());
    }

    #[test]
    fn user_init_digests_recompute() {
        let params = CurveParams::p256();
        let mut rng = make_rng(Some(32));
        let mut gw = gateway_init(&params, GatewayConfig::default(), &mut rng);
        let user = user_init(&mut gw, &params, &mut rng);
        assert_eq!(user.uid.as_bytes().len(), 20);
        let x2 = hash_parts(&[
            user.uid.as_bytes(),
            &user.pub_key.encode(&params),
            gw.master.as_bytes(),
        ]);
        assert_eq!(x2, user.x2);
        assert_eq!(gw.registry.len(), 1);
        let other = user_init(&mut gw, &params, &mut rng);
        assert_ne!(other.uid.as_bytes(), user.uid.as_bytes());
        assert_ne!(other.pub_key, user.pub_key);
    }

    #[test]
    fn sensor_init_level_checks_and_tag() {
        let params = CurveParams::p256();
        let mut rng = make_rng(Some(33));
        let mut gw = gateway_init(&params, GatewayConfig::default(), &mut rng);
        assert!(matches!(
            sensor_init(&mut gw, &params, Level(0), &mut rng),
            Err(ProtocolError::LevelOutOfRange { .. })
        ));
        let s1 = sensor_init(&mut gw, &params, Level(3), &mut rng).unwrap();
        let s2 = sensor_init(&mut gw, &params, Level(3), &mut rng).unwrap();
        assert_ne!(s1.d_j, s2.d_j, "same level, distinct identities");
        assert_eq!(level_tag(Level(3), &gw.master, &s1.sid), s1.d_j);
    }

    #[test]
    fn recover_level_inverts_issuance() {
        let params = CurveParams::p256();
        let mut rng = make_rng(Some(34));
        let mut gw = gateway_init(&params, GatewayConfig::default(), &mut rng);
        let user = user_init(&mut gw, &params, &mut rng);
        for l in 1..=gw.l_max.0 {
            let draft = register_user_gateway(&gw, &user.uid, Level(l)).unwrap();
            assert_eq!(
                recover_level(&draft.b_i, &user.uid, &gw.master, gw.l_max).unwrap(),
                Level(l)
            );
        }
        let sensor = sensor_init(&mut gw, &params, Level(1), &mut rng).unwrap();
        assert_eq!(
            recover_level(&sensor.d_j, &sensor.sid, &gw.master, gw.l_max).unwrap(),
            Level(1)
        );
        let random_tag = hash(b"not a tag");
        assert_eq!(
            recover_level(&random_tag, &user.uid, &gw.master, gw.l_max),
            Err(ProtocolError::LevelNotFound)
        );
    }

    #[test]
    fn register_requires_enrollment_and_levels_differ() {
        let params = CurveParams::p256();
        let mut rng = make_rng(Some(35));
        let mut gw = gateway_init(&params, GatewayConfig::default(), &mut rng);
        let stranger = Identity::random(Role::User, &mut rng);
        assert!(matches!(
            register_user_gateway(&gw, &stranger, Level(2)),
            Err(ProtocolError::UnknownUser)
        ));
        let user = user_init(&mut gw, &params, &mut rng);
        let a = register_user_gateway(&gw, &user.uid, Level(2)).unwrap();
        let b = register_user_gateway(&gw, &user.uid, Level(3)).unwrap();
        assert_ne!(a.b_i, b.b_i);
        assert_eq!(a.reg_i, b.reg_i);
    }

    #[test]
    fn lda_matrix_direction() {
        assert_eq!(lda_decide(Level(1), Level(5)), Access::Allowed);
        assert_eq!(lda_decide(Level(3), Level(3)), Access::Allowed);
        assert_eq!(lda_decide(Level(5), Level(1)), Access::Denied);
    }
}
