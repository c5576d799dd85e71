//! Drives one seven-message session across the bus and collects the trace.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::crypto::Timestamp;
use crate::protocol::{Role, SessionKey};

use super::actors::{receiver_role, sender_role, GatewayActor, Handled, SensorActor, UserActor};
use super::bus::{Envelope, Transport};
use super::clock::Clock;
use super::topics::{Direction, TopicScheme};

#[derive(Clone, Debug, PartialEq)]
pub enum SessionResult {
    KeyAgreed,
    Denied,
    Failed(String),
    Timeout,
}

/// One delivery and how its receiver disposed of it.
#[derive(Clone, Debug)]
pub struct Delivery {
    pub envelope: Envelope,
    pub receiver: Role,
    pub handled: Handled,
}

#[derive(Debug)]
pub struct SessionOutcome {
    pub session_id: String,
    pub result: SessionResult,
    pub user_key: Option<SessionKey>,
    pub sensor_key: Option<SessionKey>,
    /// Every envelope seen on the wire, in global publish order.
    pub trace: Vec<Envelope>,
    pub deliveries: Vec<Delivery>,
    /// Wall time from Message 1 to the user's final verdict.
    pub user_rtd: Option<Duration>,
    /// Wall time from Message 3 to the sensor's grant verdict.
    pub sensor_rtd: Option<Duration>,
    /// The gateway's Message-3 verification-and-decision span.
    pub gw_verify_time: Option<Duration>,
}

impl SessionOutcome {
    pub fn keys_match(&self) -> bool {
        match (&self.user_key, &self.sensor_key) {
            (Some(u), Some(s)) => u == s,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Virtual-clock advance applied before each delivery.
    pub tick_ms: u32,
    /// How long to wait for the next envelope before declaring timeout.
    pub step_timeout: Duration,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { tick_ms: 1, step_timeout: Duration::from_secs(2), max_steps: 64 }
    }
}

/// Delivers one envelope to every actor playing the receiving role and
/// returns the outcomes that were not ignored.
pub fn dispatch_envelope(
    envelope: &Envelope,
    scheme: &TopicScheme,
    users: &mut [&mut UserActor],
    gateway: &mut GatewayActor,
    sensors: &mut [&mut SensorActor],
    transport: &dyn Transport,
) -> Vec<(Role, Handled)> {
    let Some((sid, direction)) = scheme.parse(&envelope.topic) else {
        return vec![];
    };
    let mut outcomes = Vec::new();
    match receiver_role(direction) {
        Role::Gateway => {
            let handled = gateway.handle(sid, &envelope.payload, transport);
            if handled != Handled::Ignored {
                outcomes.push((Role::Gateway, handled));
            }
        }
        Role::User => {
            for user in users.iter_mut() {
                let handled = user.handle(sid, &envelope.payload, transport);
                if handled != Handled::Ignored {
                    outcomes.push((Role::User, handled));
                }
            }
        }
        Role::Sensor => {
            for sensor in sensors.iter_mut() {
                let handled = sensor.handle(sid, &envelope.payload, transport);
                if handled != Handled::Ignored {
                    outcomes.push((Role::Sensor, handled));
                }
            }
        }
    }
    outcomes
}

/// Runs the login-and-key-agreement exchange between one user, the gateway
/// and one sensor, to completion or first abort.
pub fn run_session(
    user: &mut UserActor,
    gateway: &mut GatewayActor,
    sensor: &mut SensorActor,
    transport: &Arc<dyn Transport>,
    clock: &Arc<dyn Clock>,
    opts: RunOptions,
) -> SessionOutcome {
    let scheme = TopicScheme::default();
    let mut tap = transport.subscribe("auth/+/+");

    let sensor_pub = sensor.creds.pub_key.clone();
    let started = Instant::now();
    let session_id = match user.start_session(&sensor_pub, transport.as_ref()) {
        Ok(sid) => sid,
        Err(e) => {
            return SessionOutcome {
                session_id: String::new(),
                result: SessionResult::Failed(e.to_string()),
                user_key: None,
                sensor_key: None,
                trace: vec![],
                deliveries: vec![],
                user_rtd: None,
                sensor_rtd: None,
                gw_verify_time: None,
            }
        }
    };

    let verify_log_start = gateway.verify_log.len();
    let mut trace = Vec::new();
    let mut deliveries = Vec::new();
    let mut first_error: Option<String> = None;
    let mut denied = false;
    let mut user_aborted = false;
    let mut sensor_aborted = false;
    let mut user_key = None;
    let mut sensor_key = None;
    let mut user_rtd = None;
    let mut sensor_rtd = None;
    let mut msg3_seen: Option<Instant> = None;

    for _ in 0..opts.max_steps {
        let Some((topic, payload)) = tap.poll(opts.step_timeout) else {
            break;
        };
        let Some((sid, direction)) = scheme.parse(&topic) else {
            continue;
        };
        if sid != session_id {
            continue;
        }
        let envelope = Envelope {
            topic: topic.clone(),
            sender_role: sender_role(direction),
            payload,
            enqueue_time: clock.now(),
        };
        trace.push(envelope.clone());
        if direction == Direction::SensorToGateway && msg3_seen.is_none() {
            msg3_seen = Some(Instant::now());
        }

        // Simulated hop latency.
        clock.advance(opts.tick_ms);

        let outcomes = dispatch_envelope(
            &envelope,
            &scheme,
            &mut [user],
            gateway,
            &mut [sensor],
            transport.as_ref(),
        );
        for (role, handled) in outcomes {
            match &handled {
                Handled::KeyEstablished(key) => match role {
                    Role::User => {
                        user_key = Some(key.clone());
                        user_rtd = Some(started.elapsed());
                    }
                    Role::Sensor => sensor_key = Some(key.clone()),
                    Role::Gateway => {}
                },
                Handled::Accepted => {
                    if role == Role::Sensor && direction == Direction::GatewayToSensor {
                        if let Some(t3) = msg3_seen.take() {
                            // Message 4 accepted by the sensor closes its RTD.
                            sensor_rtd = Some(t3.elapsed());
                        }
                    }
                }
                Handled::DeniedAndSignalled => denied = true,
                Handled::AbortReceived => match role {
                    Role::User => user_aborted = true,
                    Role::Sensor => sensor_aborted = true,
                    Role::Gateway => {}
                },
                Handled::Rejected(detail) => {
                    if first_error.is_none() {
                        first_error = Some(format!("{role}: {detail}"));
                    }
                }
                Handled::Ignored => {}
            }
            deliveries.push(Delivery { envelope: envelope.clone(), receiver: role, handled });
        }

        if user_key.is_some() && sensor_key.is_some() {
            break;
        }
        if (denied || first_error.is_some()) && user_aborted && sensor_aborted {
            break;
        }
        if first_error.is_some() && trace.last().map(|e| e.sender_role) != Some(Role::Gateway) {
            // Receiver-side rejection without gateway involvement stalls the
            // exchange; there is nothing left to wait for.
            if matches!(
                deliveries.last().map(|d| (&d.handled, d.receiver)),
                Some((Handled::Rejected(_), Role::User | Role::Sensor))
            ) {
                break;
            }
        }
    }

    let result = if user_key.is_some() && sensor_key.is_some() {
        SessionResult::KeyAgreed
    } else if denied {
        SessionResult::Denied
    } else if let Some(err) = first_error {
        SessionResult::Failed(err)
    } else {
        SessionResult::Timeout
    };

    let gw_verify_time = gateway.verify_log.get(verify_log_start).map(|r| r.span);

    SessionOutcome {
        session_id,
        result,
        user_key,
        sensor_key,
        trace,
        deliveries,
        user_rtd,
        sensor_rtd,
        gw_verify_time,
    }
}

/// A virtual timestamp for the start of simulated deployments.
pub fn default_start() -> Timestamp {
    Timestamp(1_000_000)
}
