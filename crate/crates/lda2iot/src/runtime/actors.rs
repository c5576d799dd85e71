//! Message-driven actor wrappers around the pure protocol steps.
//!
//! Each actor owns its long-term credentials, a map of per-session contexts
//! keyed by the topic session id, and publishes replies through whatever
//! transport it is given. Freshness is pre-checked before any session
//! lookup so a stale replay is always rejected as stale, even against a
//! freshly restarted actor.

use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::crypto::{CurveParams, CurvePoint};
use crate::protocol::{
    build_msg1, check_freshness, gw_handle_msg1, gw_handle_msg3, gw_handle_msg5,
    sensor_handle_msg2, sensor_handle_msg4, sensor_handle_msg7, user_handle_msg6, GatewayState,
    GwSession, Msg3Outcome, ProtocolError, Role, SensorCredentials, SensorSession, SessionKey,
    SmartCard, UserCredentials, UserSession, WireMessage,
};

use super::bus::Transport;
use super::clock::Clock;
use super::topics::{derive_session_id, Direction, TopicScheme};
use super::wire::{decode_wire, encode_wire};

/// How an actor disposed of one delivered envelope.
#[derive(Clone, Debug, PartialEq)]
pub enum Handled {
    /// Not addressed to this actor (unknown session, wrong party).
    Ignored,
    /// Processed; replies, if any, were published.
    Accepted,
    /// Processed and the session key came out.
    KeyEstablished(SessionKey),
    /// A 0 signal was received; the session is dead.
    AbortReceived,
    /// The level rule denied access; 0 signals were sent to both parties.
    DeniedAndSignalled,
    /// The message was rejected.
    Rejected(String),
}

impl Handled {
    /// Whether the receiver treated the message as genuine.
    pub fn was_accepted(&self) -> bool {
        matches!(self, Handled::Accepted | Handled::KeyEstablished(_))
    }
}

fn reject(err: &ProtocolError) -> Handled {
    Handled::Rejected(err.to_string())
}

pub struct UserActor {
    pub creds: UserCredentials,
    pub card: SmartCard,
    pub gw_pub: CurvePoint,
    pub params: Arc<CurveParams>,
    pub scheme: TopicScheme,
    pub clock: Arc<dyn Clock>,
    pub delta_t: u32,
    pub rng: ChaCha20Rng,
    sessions: HashMap<String, UserSession>,
    pub keys: HashMap<String, SessionKey>,
}

impl UserActor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        creds: UserCredentials,
        card: SmartCard,
        gw_pub: CurvePoint,
        params: Arc<CurveParams>,
        clock: Arc<dyn Clock>,
        delta_t: u32,
        rng: ChaCha20Rng,
    ) -> Self {
        UserActor {
            creds,
            card,
            gw_pub,
            params,
            scheme: TopicScheme::default(),
            clock,
            delta_t,
            rng,
            sessions: HashMap::new(),
            keys: HashMap::new(),
        }
    }

    /// Builds and publishes Message 1; returns the session id.
    pub fn start_session(
        &mut self,
        sensor_pub: &CurvePoint,
        transport: &dyn Transport,
    ) -> Result<String, ProtocolError> {
        let now = self.clock.now();
        let (msg, session) = build_msg1(
            &self.creds,
            &self.card,
            sensor_pub,
            &self.gw_pub,
            &self.params,
            now,
            &mut self.rng,
        )?;
        let sid = derive_session_id(&self.creds.pub_key, sensor_pub, now, &self.params);
        let bytes = encode_wire(&msg, &self.params);
        self.sessions.insert(sid.clone(), session);
        let _ = transport.publish(&self.scheme.topic(&sid, Direction::UserToGateway), &bytes);
        Ok(sid)
    }

    /// Restores transient state (device reboot): long-term secrets survive,
    /// session contexts do not.
    pub fn restart(&mut self) {
        self.sessions.clear();
        self.keys.clear();
    }

    pub fn handle(&mut self, sid: &str, payload: &[u8], _transport: &dyn Transport) -> Handled {
        let msg = match decode_wire(payload, &self.params) {
            Ok(msg) => msg,
            Err(e) => return Handled::Rejected(e.to_string()),
        };
        let now = self.clock.now();
        if let Err(e) = check_freshness(msg.timestamp(), now, self.delta_t) {
            return reject(&e);
        }
        match msg {
            WireMessage::Msg6 { m13, t6 } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                match user_handle_msg6(
                    &self.creds,
                    &self.gw_pub,
                    &self.params,
                    session,
                    &m13,
                    t6,
                    now,
                    self.delta_t,
                ) {
                    Ok(key) => {
                        self.keys.insert(sid.to_string(), key.clone());
                        Handled::KeyEstablished(key)
                    }
                    Err(e) => reject(&e),
                }
            }
            WireMessage::Abort { .. } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                session.mark_aborted();
                Handled::AbortReceived
            }
            _ => Handled::Ignored,
        }
    }
}

/// One entry of the gateway's verification-time log.
#[derive(Clone, Copy, Debug)]
pub struct VerifyRecord {
    pub denied: bool,
    pub span: Duration,
}

pub struct GatewayActor {
    pub state: GatewayState,
    pub params: Arc<CurveParams>,
    pub scheme: TopicScheme,
    pub clock: Arc<dyn Clock>,
    pub rng: ChaCha20Rng,
    sessions: HashMap<String, GwSession>,
    /// Verification spans for the Message 3 step, by decision.
    pub verify_log: Vec<VerifyRecord>,
}

impl GatewayActor {
    pub fn new(
        state: GatewayState,
        params: Arc<CurveParams>,
        clock: Arc<dyn Clock>,
        rng: ChaCha20Rng,
    ) -> Self {
        GatewayActor {
            state,
            params,
            scheme: TopicScheme::default(),
            clock,
            rng,
            sessions: HashMap::new(),
            verify_log: Vec::new(),
        }
    }

    pub fn restart(&mut self) {
        self.sessions.clear();
    }

    fn signal_abort(&mut self, sid: &str, transport: &dyn Transport, to_user: bool, to_sensor: bool) {
        let abort = WireMessage::abort(self.clock.now());
        let bytes = encode_wire(&abort, &self.params);
        if to_user {
            let _ = transport.publish(&self.scheme.topic(sid, Direction::GatewayToUser), &bytes);
        }
        if to_sensor {
            let _ = transport.publish(&self.scheme.topic(sid, Direction::GatewayToSensor), &bytes);
        }
    }

    pub fn handle(&mut self, sid: &str, payload: &[u8], transport: &dyn Transport) -> Handled {
        let msg = match decode_wire(payload, &self.params) {
            Ok(msg) => msg,
            Err(e) => return Handled::Rejected(e.to_string()),
        };
        let now = self.clock.now();
        if let Err(e) = check_freshness(msg.timestamp(), now, self.state.delta_t) {
            return reject(&e);
        }
        match msg {
            WireMessage::Msg1 { m1, temp0, t1 } => {
                if self.sessions.contains_key(sid) {
                    return Handled::Rejected("duplicate session id".into());
                }
                match gw_handle_msg1(&self.state, &self.params, &m1, &temp0, t1, now) {
                    Ok((msg2, session)) => {
                        self.sessions.insert(sid.to_string(), session);
                        let bytes = encode_wire(&msg2, &self.params);
                        let _ = transport
                            .publish(&self.scheme.topic(sid, Direction::GatewayToSensor), &bytes);
                        Handled::Accepted
                    }
                    Err(e) => {
                        self.signal_abort(sid, transport, true, false);
                        reject(&e)
                    }
                }
            }
            WireMessage::Msg3 { m3, t3 } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                match gw_handle_msg3(&self.state, &self.params, session, &m3, t3, now, &mut self.rng)
                {
                    Ok(handled) => match handled.outcome {
                        Msg3Outcome::Proceed(msg4) => {
                            self.verify_log
                                .push(VerifyRecord { denied: false, span: handled.verify_time });
                            let bytes = encode_wire(&msg4, &self.params);
                            let _ = transport
                                .publish(&self.scheme.topic(sid, Direction::GatewayToSensor), &bytes);
                            Handled::Accepted
                        }
                        Msg3Outcome::Denied => {
                            // Denial signalling is part of the verification
                            // outcome, so it stays inside the measured span.
                            let started = Instant::now();
                            self.signal_abort(sid, transport, true, true);
                            self.verify_log.push(VerifyRecord {
                                denied: true,
                                span: handled.verify_time + started.elapsed(),
                            });
                            Handled::DeniedAndSignalled
                        }
                    },
                    Err(e) => {
                        self.signal_abort(sid, transport, true, true);
                        reject(&e)
                    }
                }
            }
            WireMessage::Msg5 { m6, m7, t5 } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                match gw_handle_msg5(
                    &self.state,
                    &self.params,
                    session,
                    &m6,
                    &m7,
                    t5,
                    now,
                    &mut self.rng,
                ) {
                    Ok((msg6, msg7)) => {
                        let b6 = encode_wire(&msg6, &self.params);
                        let b7 = encode_wire(&msg7, &self.params);
                        let _ = transport
                            .publish(&self.scheme.topic(sid, Direction::GatewayToUser), &b6);
                        let _ = transport
                            .publish(&self.scheme.topic(sid, Direction::GatewayToSensor), &b7);
                        Handled::Accepted
                    }
                    Err(e) => {
                        self.signal_abort(sid, transport, true, true);
                        reject(&e)
                    }
                }
            }
            _ => Handled::Ignored,
        }
    }
}

pub struct SensorActor {
    pub creds: SensorCredentials,
    pub gw_pub: CurvePoint,
    pub params: Arc<CurveParams>,
    pub scheme: TopicScheme,
    pub clock: Arc<dyn Clock>,
    pub delta_t: u32,
    pub rng: ChaCha20Rng,
    sessions: HashMap<String, SensorSession>,
    pub keys: HashMap<String, SessionKey>,
}

impl SensorActor {
    pub fn new(
        creds: SensorCredentials,
        gw_pub: CurvePoint,
        params: Arc<CurveParams>,
        clock: Arc<dyn Clock>,
        delta_t: u32,
        rng: ChaCha20Rng,
    ) -> Self {
        SensorActor {
            creds,
            gw_pub,
            params,
            scheme: TopicScheme::default(),
            clock,
            delta_t,
            rng,
            sessions: HashMap::new(),
            keys: HashMap::new(),
        }
    }

    pub fn restart(&mut self) {
        self.sessions.clear();
        self.keys.clear();
    }

    pub fn handle(&mut self, sid: &str, payload: &[u8], transport: &dyn Transport) -> Handled {
        let msg = match decode_wire(payload, &self.params) {
            Ok(msg) => msg,
            Err(e) => return Handled::Rejected(e.to_string()),
        };
        let now = self.clock.now();
        if let Err(e) = check_freshness(msg.timestamp(), now, self.delta_t) {
            return reject(&e);
        }
        match msg {
            WireMessage::Msg2 { temp1, t2 } => {
                if self.sessions.contains_key(sid) {
                    return Handled::Rejected("duplicate session id".into());
                }
                match sensor_handle_msg2(
                    &self.creds,
                    &self.gw_pub,
                    &self.params,
                    &temp1,
                    t2,
                    now,
                    self.delta_t,
                    &mut self.rng,
                ) {
                    Ok((msg3, session)) => {
                        self.sessions.insert(sid.to_string(), session);
                        let bytes = encode_wire(&msg3, &self.params);
                        let _ = transport
                            .publish(&self.scheme.topic(sid, Direction::SensorToGateway), &bytes);
                        Handled::Accepted
                    }
                    Err(e) => reject(&e),
                }
            }
            WireMessage::Msg4 { m5, pub_ui, t4 } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                match sensor_handle_msg4(
                    &self.creds,
                    &self.gw_pub,
                    &self.params,
                    session,
                    &m5,
                    &pub_ui,
                    t4,
                    now,
                    self.delta_t,
                ) {
                    Ok(msg5) => {
                        let bytes = encode_wire(&msg5, &self.params);
                        let _ = transport
                            .publish(&self.scheme.topic(sid, Direction::SensorToGateway), &bytes);
                        Handled::Accepted
                    }
                    Err(e) => reject(&e),
                }
            }
            WireMessage::Msg7 { m14, t6 } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                match sensor_handle_msg7(
                    &self.creds,
                    &self.gw_pub,
                    &self.params,
                    session,
                    &m14,
                    t6,
                    now,
                    self.delta_t,
                ) {
                    Ok(key) => {
                        self.keys.insert(sid.to_string(), key.clone());
                        Handled::KeyEstablished(key)
                    }
                    Err(e) => reject(&e),
                }
            }
            WireMessage::Abort { .. } => {
                let Some(session) = self.sessions.get_mut(sid) else {
                    return Handled::Ignored;
                };
                session.mark_aborted();
                Handled::AbortReceived
            }
            _ => Handled::Ignored,
        }
    }
}

/// Sender role implied by a topic direction.
pub fn sender_role(direction: Direction) -> Role {
    match direction {
        Direction::UserToGateway => Role::User,
        Direction::SensorToGateway => Role::Sensor,
        Direction::GatewayToSensor | Direction::GatewayToUser => Role::Gateway,
    }
}

/// Receiver role implied by a topic direction.
pub fn receiver_role(direction: Direction) -> Role {
    match direction {
        Direction::UserToGateway | Direction::SensorToGateway => Role::Gateway,
        Direction::GatewayToSensor => Role::Sensor,
        Direction::GatewayToUser => Role::User,
    }
}
