//! End-to-end exercise of the pure step functions, without the runtime.

use rand::RngCore;

use crate::crypto::{make_rng, CurveParams, Timestamp};

use super::*;

pub(crate) struct StepWorld {
    pub params: std::sync::Arc<CurveParams>,
    pub gw: GatewayState,
    pub user: UserCredentials,
    pub card: SmartCard,
    pub sensor: SensorCredentials,
}

pub(crate) fn build_world(
    curve: std::sync::Arc<CurveParams>,
    user_level: Level,
    sensor_level: Level,
    rng: &mut dyn RngCore,
) -> StepWorld {
    let mut gw = gateway_init(&curve, GatewayConfig::default(), rng);
    let user = user_init(&mut gw, &curve, rng);
    let sensor = sensor_init(&mut gw, &curve, sensor_level, rng).unwrap();
    let password = b"step password";
    let (_, held) = register_user_begin(password, &user.uid, rng).unwrap();
    let draft = register_user_gateway(&gw, &user.uid, user_level).unwrap();
    let card = register_user_finalize(&draft, &held, &user.uid, password, &curve.name);
    login_verify(&user.uid, password, &card).unwrap();
    StepWorld { params: curve, gw, user, card, sensor }
}

/// Drives the seven messages with a simple ticking clock and returns both
/// session keys.
pub(crate) fn run_handshake(
    world: &StepWorld,
    rng: &mut dyn RngCore,
    start: u32,
) -> Result<(SessionKey, SessionKey), ProtocolError> {
    let params = &world.params;
    let delta_t = world.gw.delta_t;
    let mut clock = start;
    let mut tick = || {
        clock += 1;
        Timestamp(clock)
    };

    let now = tick();
    let (msg1, mut user_session) = build_msg1(
        &world.user,
        &world.card,
        &world.sensor.pub_key,
        &world.gw.pub_key,
        params,
        now,
        rng,
    )?;
    let WireMessage::Msg1 { m1, temp0, t1 } = msg1 else { unreachable!() };

    let (msg2, mut gw_session) =
        gw_handle_msg1(&world.gw, params, &m1, &temp0, t1, tick())?;
    let WireMessage::Msg2 { temp1, t2 } = msg2 else { unreachable!() };

    let (msg3, mut sensor_session) = sensor_handle_msg2(
        &world.sensor,
        &world.gw.pub_key,
        params,
        &temp1,
        t2,
        tick(),
        delta_t,
        rng,
    )?;
    let WireMessage::Msg3 { m3, t3 } = msg3 else { unreachable!() };

    let handled = gw_handle_msg3(&world.gw, params, &mut gw_session, &m3, t3, tick(), rng)?;
    let msg4 = match handled.outcome {
        Msg3Outcome::Proceed(msg) => msg,
        Msg3Outcome::Denied => return Err(ProtocolError::VerificationFailure("denied")),
    };
    let WireMessage::Msg4 { m5, pub_ui, t4 } = msg4 else { unreachable!() };

    let msg5 = sensor_handle_msg4(
        &world.sensor,
        &world.gw.pub_key,
        params,
        &mut sensor_session,
        &m5,
        &pub_ui,
        t4,
        tick(),
        delta_t,
    )?;
    let WireMessage::Msg5 { m6, m7, t5 } = msg5 else { unreachable!() };

    let (msg6, msg7) =
        gw_handle_msg5(&world.gw, params, &mut gw_session, &m6, &m7, t5, tick(), rng)?;
    let WireMessage::Msg6 { m13, t6 } = msg6 else { unreachable!() };
    let WireMessage::Msg7 { m14, t6: t6b } = msg7 else { unreachable!() };
    assert_eq!(t6, t6b, "both envelopes carry the same T_6");

    let user_key = user_handle_msg6(
        &world.user,
        &world.gw.pub_key,
        params,
        &mut user_session,
        &m13,
        t6,
        tick(),
        delta_t,
    )?;
    let sensor_key = sensor_handle_msg7(
        &world.sensor,
        &world.gw.pub_key,
        params,
        &mut sensor_session,
        &m14,
        t6,
        tick(),
        delta_t,
    )?;
    Ok((user_key, sensor_key))
}

#[test]
fn honest_handshake_agrees_on_p256() {
    let mut rng = make_rng(Some(100));
    let world = build_world(CurveParams::p256(), Level(2), Level(4), &mut rng);
    let (uk, sk) = run_handshake(&world, &mut rng, 10_000).unwrap();
    assert_eq!(uk, sk);
}

#[test]
fn session_keys_differ_across_runs() {
    let mut rng = make_rng(Some(101));
    let world = build_world(CurveParams::tiny23(), Level(1), Level(5), &mut rng);
    let (k1, _) = run_handshake(&world, &mut rng, 10_000).unwrap();
    let (k2, _) = run_handshake(&world, &mut rng, 20_000).unwrap();
    assert_ne!(k1.as_bytes(), k2.as_bytes());
}

#[test]
fn equal_levels_are_allowed() {
    let mut rng = make_rng(Some(102));
    let world = build_world(CurveParams::tiny23(), Level(3), Level(3), &mut rng);
    assert!(run_handshake(&world, &mut rng, 5_000).is_ok());
}

#[test]
fn denied_when_user_ranks_below_sensor() {
    let mut rng = make_rng(Some(103));
    let world = build_world(CurveParams::tiny23(), Level(4), Level(2), &mut rng);
    let err = run_handshake(&world, &mut rng, 5_000).unwrap_err();
    assert_eq!(err, ProtocolError::VerificationFailure("denied"));
}

#[test]
fn key_agreement_randomized_trials_on_tiny_curve() {
    let mut rng = make_rng(Some(104));
    for trial in 0..50u32 {
        let li = 1 + (rng.next_u32() % 5) as u16;
        let lj = li + (rng.next_u32() % (6 - li as u32)) as u16;
        let world = build_world(CurveParams::tiny23(), Level(li), Level(lj), &mut rng);
        let (uk, sk) = run_handshake(&world, &mut rng, 1_000 * (trial + 1)).unwrap();
        assert_eq!(uk, sk, "trial {trial} levels ({li},{lj})");
    }
}

#[test]
fn gateway_session_is_one_shot_after_abort() {
    let mut rng = make_rng(Some(105));
    let world = build_world(CurveParams::tiny23(), Level(1), Level(1), &mut rng);
    let params = &world.params;
    let now = Timestamp(1_000);
    let (msg1, _) = build_msg1(
        &world.user,
        &world.card,
        &world.sensor.pub_key,
        &world.gw.pub_key,
        params,
        now,
        &mut rng,
    )
    .unwrap();
    let WireMessage::Msg1 { m1, temp0, t1 } = msg1 else { unreachable!() };
    let (_, mut gw_session) =
        gw_handle_msg1(&world.gw, params, &m1, &temp0, t1, Timestamp(1_001)).unwrap();

    // Garbage M_3 aborts the session.
    let bogus = crate::crypto::hybrid_encrypt(
        &world.gw.pub_key,
        &[b"junk".as_slice()],
        params,
        &mut rng,
    )
    .unwrap();
    let err = gw_handle_msg3(
        &world.gw,
        params,
        &mut gw_session,
        &bogus,
        Timestamp(1_002),
        Timestamp(1_003),
        &mut rng,
    )
    .unwrap_err();
    assert_eq!(err, ProtocolError::MalformedPayload);
    assert!(gw_session.is_aborted());

    // Any further input is refused.
    let err = gw_handle_msg3(
        &world.gw,
        params,
        &mut gw_session,
        &bogus,
        Timestamp(1_004),
        Timestamp(1_005),
        &mut rng,
    )
    .unwrap_err();
    assert_eq!(err, ProtocolError::SessionAborted);
}

#[test]
fn stale_and_skewed_timestamps_rejected_at_each_boundary() {
    let mut rng = make_rng(Some(106));
    let world = build_world(CurveParams::tiny23(), Level(1), Level(2), &mut rng);
    let params = &world.params;
    let delta_t = world.gw.delta_t;
    let (msg1, _) = build_msg1(
        &world.user,
        &world.card,
        &world.sensor.pub_key,
        &world.gw.pub_key,
        params,
        Timestamp(1_000),
        &mut rng,
    )
    .unwrap();
    let WireMessage::Msg1 { m1, temp0, t1 } = msg1 else { unreachable!() };

    // Inclusive at ΔT, rejected one millisecond later.
    assert!(gw_handle_msg1(&world.gw, params, &m1, &temp0, t1, Timestamp(1_000 + delta_t)).is_ok());
    assert_eq!(
        gw_handle_msg1(&world.gw, params, &m1, &temp0, t1, Timestamp(1_001 + delta_t))
            .err()
            .unwrap(),
        ProtocolError::StaleTimestamp
    );
    assert_eq!(
        gw_handle_msg1(&world.gw, params, &m1, &temp0, t1, Timestamp(999)).err().unwrap(),
        ProtocolError::ClockSkew
    );
}

#[test]
fn tampered_temp0_is_rejected() {
    let mut rng = make_rng(Some(107));
    let world = build_world(CurveParams::tiny23(), Level(1), Level(2), &mut rng);
    let params = &world.params;
    let (msg1, _) = build_msg1(
        &world.user,
        &world.card,
        &world.sensor.pub_key,
        &world.gw.pub_key,
        params,
        Timestamp(1_000),
        &mut rng,
    )
    .unwrap();
    let WireMessage::Msg1 { m1, temp0, t1 } = msg1 else { unreachable!() };
    let mut wrong = *temp0.as_bytes();
    wrong[0] ^= 0xff;
    let err = gw_handle_msg1(
        &world.gw,
        params,
        &m1,
        &crate::crypto::Digest(wrong),
        t1,
        Timestamp(1_001),
    )
    .unwrap_err();
    assert_eq!(err, ProtocolError::VerificationFailure("Temp_0 copies disagree"));
}
