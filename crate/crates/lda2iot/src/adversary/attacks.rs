//! Executes attack scenarios against a fresh honest deployment and turns
//! the result into a machine-checkable outcome.

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use std::sync::Arc;
use std::time::Duration;

use crate::crypto::{hash_parts, hybrid_decrypt, trial_rng, CurveParams, Digest, Nonce};
use crate::par::Mode;
use crate::protocol::{Level, ProtocolError, Role, SessionKey, WireMessage};
use crate::runtime::{
    build_world, decode_wire, dispatch_envelope, Clock, Direction, Envelope, SessionWorld,
    TopicScheme, WorldConfig,
};

use super::corrupt::{corrupt_sensing_device, corrupt_user_device, level_guess_attack};
use super::scenario::{AttackStep, ForgeRecipe, LevelGuessTarget, Scenario, TapRule};
use super::tap::{build_forgery, AdversaryView, ChannelTap};

#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub curve: Arc<CurveParams>,
    pub seed: u64,
    pub delta_t: u32,
    /// Test hook for the mutation self-check: lifts every freshness bound.
    pub disable_freshness: bool,
}

impl AttackConfig {
    pub fn new(curve: Arc<CurveParams>, seed: u64) -> Self {
        AttackConfig { curve, seed, delta_t: 5_000, disable_freshness: false }
    }
}

/// The verdict of one scenario run.
#[derive(Debug)]
pub struct AttackOutcome {
    pub name: String,
    /// A tampered, forged or replayed message was treated as genuine.
    pub victim_accepted_forgery: bool,
    /// The adversary's best session-key guess, when the script makes one.
    pub adversary_key_guess: Option<Digest>,
    pub honest_key: Option<SessionKey>,
    /// The guess equalled the honest key, bit for bit.
    pub key_recovered: bool,
    /// Scenario-specific expectations that did not hold.
    pub expectation_failures: Vec<String>,
    pub transcript: Vec<String>,
}

impl AttackOutcome {
    pub fn passed(&self) -> bool {
        !self.victim_accepted_forgery
            && !self.key_recovered
            && self.expectation_failures.is_empty()
    }
}

struct AttackRun {
    world: SessionWorld,
    view: AdversaryView,
    adv_rng: ChaCha20Rng,
    scheme: TopicScheme,
    recording: Vec<Envelope>,
    recorded_sid: Option<String>,
    honest_key: Option<SessionKey>,
    victim_accepted: bool,
    key_guess: Option<Digest>,
    key_recovered: bool,
    failures: Vec<String>,
    transcript: Vec<String>,
}

const PUMP_TIMEOUT: Duration = Duration::from_millis(50);
const PUMP_STEPS: usize = 64;

impl AttackRun {
    fn new(scenario: &Scenario, cfg: &AttackConfig) -> Self {
        let world_cfg = WorldConfig::new(cfg.curve.clone(), cfg.seed)
            .levels(Level(scenario.user_level), Level(scenario.sensor_level));
        let mut world = build_world(&world_cfg).expect("attack world");
        if cfg.disable_freshness {
            world.user.delta_t = u32::MAX;
            world.sensor.delta_t = u32::MAX;
            world.gateway.state.delta_t = u32::MAX;
        } else {
            world.user.delta_t = cfg.delta_t;
            world.sensor.delta_t = cfg.delta_t;
            world.gateway.state.delta_t = cfg.delta_t;
        }
        let view = AdversaryView {
            params: world.params.clone(),
            gw_pub: world.gateway.state.pub_key.clone(),
            user_pub: world.user.creds.pub_key.clone(),
            sensor_pub: world.sensor.creds.pub_key.clone(),
        };
        AttackRun {
            world,
            view,
            adv_rng: trial_rng(cfg.seed, 0xadf),
            scheme: TopicScheme::default(),
            recording: Vec::new(),
            recorded_sid: None,
            honest_key: None,
            victim_accepted: false,
            key_guess: None,
            key_recovered: false,
            failures: Vec::new(),
            transcript: Vec::new(),
        }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.transcript.push(line.into());
    }

    /// Runs one session through the tap; records the trace and flags any
    /// tampered message a victim accepted.
    fn pump_session(&mut self, tap: &mut ChannelTap) -> Vec<Envelope> {
        let transport = self.world.transport.clone();
        let mut sub = transport.subscribe("auth/+/+");
        let sensor_pub = self.world.sensor.creds.pub_key.clone();
        let sid = match self.world.user.start_session(&sensor_pub, transport.as_ref()) {
            Ok(sid) => sid,
            Err(e) => {
                self.failures.push(format!("session start failed: {e}"));
                return Vec::new();
            }
        };
        let mut trace = Vec::new();
        for _ in 0..PUMP_STEPS {
            let Some((topic, payload)) = sub.poll(PUMP_TIMEOUT) else { break };
            let Some((_, direction)) = self.scheme.parse(&topic) else { continue };
            let envelope = Envelope {
                topic,
                sender_role: sender_of(direction),
                payload,
                enqueue_time: self.world.clock.now(),
            };
            self.world.clock.advance(1);
            let now = self.world.clock.now();
            let Some(delivered) =
                tap.process(envelope, &self.view, now, &mut self.adv_rng)
            else {
                continue;
            };
            trace.push(delivered.clone());
            self.dispatch_and_judge(&delivered, tap);
            if self.world.user.keys.contains_key(&sid)
                && self.world.sensor.keys.contains_key(&sid)
            {
                break;
            }
        }
        self.recorded_sid = Some(sid.clone());
        if let Some(key) = self.world.user.keys.get(&sid) {
            self.honest_key = Some(key.clone());
        }
        trace
    }

    fn dispatch_and_judge(&mut self, envelope: &Envelope, tap: &ChannelTap) {
        let tampered = tap.is_tampered(&envelope.payload);
        let transport = self.world.transport.clone();
        let outcomes = dispatch_envelope(
            envelope,
            &self.scheme,
            &mut [&mut self.world.user],
            &mut self.world.gateway,
            &mut [&mut self.world.sensor],
            transport.as_ref(),
        );
        for (role, handled) in outcomes {
            if tampered && handled.was_accepted() {
                self.victim_accepted = true;
                self.transcript.push(format!(
                    "FORGERY ACCEPTED by {role} on {}: {handled:?}",
                    envelope.topic
                ));
            } else {
                self.transcript.push(format!("{role} on {}: {handled:?}", envelope.topic));
            }
        }
    }

    fn step(&mut self, step: &AttackStep) {
        match step {
            AttackStep::HonestSession => {
                let mut tap = ChannelTap::passthrough();
                let trace = self.pump_session(&mut tap);
                let agreed = self.honest_key.is_some();
                self.note(format!(
                    "honest session: {} messages, key agreed: {agreed}",
                    trace.len()
                ));
                if !agreed {
                    self.failures.push("honest session did not complete".into());
                }
                self.recording = trace;
            }
            AttackStep::AdvanceClock { ms } => {
                self.world.clock.advance(*ms);
                self.note(format!("clock advanced {ms} ms"));
            }
            AttackStep::RestartActors => {
                self.world.user.restart();
                self.world.gateway.restart();
                self.world.sensor.restart();
                self.note("actors restarted: transient session state cleared");
            }
            AttackStep::ReplayRecorded { kind } => self.replay_recorded(kind.as_deref()),
            AttackStep::TamperedSession { rules } => self.tampered_session(rules.clone()),
            AttackStep::InjectForged { forge } => self.inject_forged(*forge),
            AttackStep::StealUserDevice => self.steal_user_device(),
            AttackStep::CaptureSensingDevice => self.capture_sensing_device(),
            AttackStep::LevelGuess { budget, target } => self.level_guess(*budget, *target),
            AttackStep::SpliceMsg5 => self.splice_msg5(),
        }
    }

    fn replay_recorded(&mut self, kind: Option<&str>) {
        let stale = ProtocolError::StaleTimestamp.to_string();
        let recording = self.recording.clone();
        if recording.is_empty() {
            self.failures.push("nothing recorded to replay".into());
            return;
        }
        for envelope in recording {
            let tag = decode_wire(&envelope.payload, &self.view.params)
                .map(|m| m.kind().tag().to_string())
                .unwrap_or_default();
            if let Some(kind) = kind {
                if tag != kind {
                    continue;
                }
            }
            let mut tap = ChannelTap::passthrough();
            tap.mark_tampered(&envelope.payload);
            self.dispatch_and_judge(&envelope, &tap);
            // The expectation is a stale-timestamp rejection, specifically.
            if let Some(line) = self.transcript.last() {
                if !self.victim_accepted && !line.contains(&stale) {
                    self.failures
                        .push(format!("replayed {tag} rejected for the wrong reason: {line}"));
                }
            }
        }
        self.note("replayed recorded messages");
    }

    fn tampered_session(&mut self, rules: Vec<TapRule>) {
        let mut tap = ChannelTap::new(rules);
        self.pump_session(&mut tap);
        for event in &tap.transcript {
            if event.action != "pass" {
                self.transcript
                    .push(format!("tap {} on {}: {}", event.action, event.topic, event.detail));
            }
        }
    }

    fn inject_forged(&mut self, forge: ForgeRecipe) {
        let now = self.world.clock.now();
        let forged = build_forgery(forge, &self.view, now, &mut self.adv_rng);
        let payload = crate::runtime::encode_wire(&forged, &self.view.params);
        let mut sid = [0u8; 16];
        self.adv_rng.fill_bytes(&mut sid);
        let sid = hex::encode(sid);
        let direction = match forged {
            WireMessage::Msg1 { .. } => Direction::UserToGateway,
            WireMessage::Msg2 { .. } => Direction::GatewayToSensor,
            WireMessage::Msg3 { .. } | WireMessage::Msg5 { .. } => Direction::SensorToGateway,
            _ => Direction::GatewayToSensor,
        };
        let envelope = Envelope {
            topic: self.scheme.topic(&sid, direction),
            sender_role: sender_of(direction),
            payload,
            enqueue_time: now,
        };
        let mut tap = ChannelTap::passthrough();
        tap.mark_tampered(&envelope.payload);
        self.note(format!("injected forged {forge:?}"));
        self.dispatch_and_judge(&envelope, &tap);
    }

    fn recorded_payload(&self, want: &str) -> Option<(WireMessage, Envelope)> {
        self.recording.iter().find_map(|env| {
            let msg = decode_wire(&env.payload, &self.view.params).ok()?;
            (msg.kind().tag() == want).then(|| (msg, env.clone()))
        })
    }

    fn steal_user_device(&mut self) {
        let dump = corrupt_user_device(&self.world.user.creds, &self.world.user.card);
        self.note("stolen user device: dump holds X_1, X_2, RU_i and the card");
        let Some((WireMessage::Msg6 { m13, t6 }, _)) = self.recorded_payload("msg6") else {
            self.failures.push("no Message 6 in the recording".into());
            return;
        };
        let Ok(fields) = hybrid_decrypt(&m13, &dump.priv_key, &self.view.params) else {
            self.failures.push("stolen key failed to decrypt M_13".into());
            return;
        };
        let [m8, m9, _m11, r_1, r_2]: [Vec<u8>; 5] = match fields.try_into() {
            Ok(f) => f,
            Err(_) => {
                self.failures.push("unexpected M_13 shape".into());
                return;
            }
        };
        self.note("adversary recovered M_8, M_9, r_1, r_2 from the trace");
        // r_t never left the device or the gateway envelope; guess it.
        let r_t_guess = Nonce::random_default(&mut self.adv_rng);
        let guess = hash_parts(&[
            &m8,
            dump.x2.as_bytes(),
            &m9,
            &t6.encode(),
            &r_1,
            &r_2,
            r_t_guess.as_bytes(),
        ]);
        self.finish_key_guess(guess);
    }

    fn capture_sensing_device(&mut self) {
        let dump = corrupt_sensing_device(&self.world.sensor.creds);
        self.note("captured sensing device: dump holds Y_1, Y_2, RSN_j, D_j");
        let Some((WireMessage::Msg4 { m5, .. }, _)) = self.recorded_payload("msg4") else {
            self.failures.push("no Message 4 in the recording".into());
            return;
        };
        let Some((WireMessage::Msg7 { m14, t6 }, _)) = self.recorded_payload("msg7") else {
            self.failures.push("no Message 7 in the recording".into());
            return;
        };
        let Ok(grant) = hybrid_decrypt(&m5, &dump.priv_key, &self.view.params) else {
            self.failures.push("captured key failed to decrypt M_5".into());
            return;
        };
        let Ok(material) = hybrid_decrypt(&m14, &dump.priv_key, &self.view.params) else {
            self.failures.push("captured key failed to decrypt M_14".into());
            return;
        };
        let r_1 = grant[2].clone();
        let (m8, m10, r_t) = (material[0].clone(), material[1].clone(), material[3].clone());
        self.note("adversary recovered M_8, M_10, r_1, r_t from the trace");
        // r_2 only ever travels inside M_3 (to the gateway) and M_13 (to
        // the user); the captured sensor gives no way in. Guess it.
        let r_2_guess = Nonce::random_default(&mut self.adv_rng);
        let guess = hash_parts(&[
            &m8,
            &m10,
            dump.y2.as_bytes(),
            &t6.encode(),
            &r_1,
            r_2_guess.as_bytes(),
            &r_t,
        ]);
        self.finish_key_guess(guess);
    }

    fn finish_key_guess(&mut self, guess: Digest) {
        self.key_guess = Some(guess);
        match &self.honest_key {
            Some(honest) => {
                self.key_recovered = honest.0 == guess;
                self.note(format!(
                    "key guess {} the honest session key",
                    if self.key_recovered { "MATCHED" } else { "did not match" }
                ));
            }
            None => self.failures.push("no honest key to compare against".into()),
        }
    }

    fn level_guess(&mut self, budget: u64, target: LevelGuessTarget) {
        let (tag, id) = match target {
            LevelGuessTarget::UserCardTag => (self.world.user.card.b_i, self.world.user.creds.uid),
            LevelGuessTarget::SensorTag => {
                (self.world.sensor.creds.d_j, self.world.sensor.creds.sid)
            }
        };
        let l_max = self.world.gateway.state.l_max;
        let outcome = level_guess_attack(&tag, &id, l_max, budget, 0xbeef, Mode::auto());
        self.note(format!(
            "level guess: {} hashes spent, confirmed: {:?}",
            outcome.guesses_spent, outcome.confirmed
        ));
        if outcome.confirmed.is_some() {
            self.failures.push("level tag was confirmed without the master secret".into());
        }
    }

    fn splice_msg5(&mut self) {
        // Session A: remove Message 5 from the channel and keep it.
        let mut tap_a = ChannelTap::new(vec![TapRule {
            target: "msg5".into(),
            occurrence: 0,
            action: super::scenario::TapAction::Drop,
        }]);
        self.pump_session(&mut tap_a);
        let Some(msg5_a) = tap_a.captured.pop() else {
            self.failures.push("session A produced no Message 5".into());
            return;
        };
        // Session B: same removal.
        let mut tap_b = ChannelTap::new(vec![TapRule {
            target: "msg5".into(),
            occurrence: 0,
            action: super::scenario::TapAction::Drop,
        }]);
        self.pump_session(&mut tap_b);
        let Some(msg5_b) = tap_b.captured.pop() else {
            self.failures.push("session B produced no Message 5".into());
            return;
        };
        let sid_a = self.scheme.parse(&msg5_a.topic).map(|(s, _)| s.to_string());
        let sid_b = self.scheme.parse(&msg5_b.topic).map(|(s, _)| s.to_string());
        let (Some(sid_a), Some(sid_b)) = (sid_a, sid_b) else {
            self.failures.push("unparseable session topics".into());
            return;
        };
        self.note(format!("splicing Message 5 between sessions {sid_a} and {sid_b}"));
        // Cross-deliver: A's confirmation into B's session and vice versa.
        for (payload, target_sid) in
            [(msg5_a.payload, sid_b), (msg5_b.payload, sid_a)]
        {
            let envelope = Envelope {
                topic: self.scheme.topic(&target_sid, Direction::SensorToGateway),
                sender_role: Role::Sensor,
                payload,
                enqueue_time: self.world.clock.now(),
            };
            let mut tap = ChannelTap::passthrough();
            tap.mark_tampered(&envelope.payload);
            self.dispatch_and_judge(&envelope, &tap);
        }
    }

    fn into_outcome(self, name: &str) -> AttackOutcome {
        AttackOutcome {
            name: name.to_string(),
            victim_accepted_forgery: self.victim_accepted,
            adversary_key_guess: self.key_guess,
            honest_key: self.honest_key,
            key_recovered: self.key_recovered,
            expectation_failures: self.failures,
            transcript: self.transcript,
        }
    }
}

fn sender_of(direction: Direction) -> Role {
    match direction {
        Direction::UserToGateway => Role::User,
        Direction::SensorToGateway => Role::Sensor,
        Direction::GatewayToSensor | Direction::GatewayToUser => Role::Gateway,
    }
}

/// Runs one scenario against a fresh isolated world.
pub fn run_attack(scenario: &Scenario, cfg: &AttackConfig) -> AttackOutcome {
    let mut run = AttackRun::new(scenario, cfg);
    for step in &scenario.steps {
        run.step(step);
    }
    run.into_outcome(&scenario.name)
}

/// Runs every scenario, each in its own world.
pub fn run_suite(scenarios: &[Scenario], cfg: &AttackConfig) -> Vec<AttackOutcome> {
    scenarios
        .iter()
        .enumerate()
        .map(|(i, scenario)| {
            let mut cfg = cfg.clone();
            cfg.seed = cfg.seed.wrapping_add(i as u64);
            run_attack(scenario, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::scenario::builtin_suite;

    fn tiny_cfg(seed: u64) -> AttackConfig {
        AttackConfig::new(CurveParams::tiny23(), seed)
    }

    #[test]
    fn full_suite_passes_on_the_honest_build() {
        let outcomes = run_suite(&builtin_suite(), &tiny_cfg(7_001));
        for outcome in &outcomes {
            assert!(
                outcome.passed(),
                "{} failed: accepted={} recovered={} failures={:?}",
                outcome.name,
                outcome.victim_accepted_forgery,
                outcome.key_recovered,
                outcome.expectation_failures
            );
        }
    }

    #[test]
    fn adversary_key_guesses_never_match() {
        let outcomes = run_suite(&builtin_suite(), &tiny_cfg(7_002));
        for outcome in outcomes {
            if let (Some(guess), Some(honest)) = (&outcome.adversary_key_guess, &outcome.honest_key)
            {
                assert_ne!(guess.as_bytes(), honest.0.as_bytes(), "{}", outcome.name);
            }
        }
    }

    #[test]
    fn mutation_self_test_replay_passes_when_freshness_is_off() {
        let replay = builtin_suite()
            .into_iter()
            .find(|s| s.name == "replay_all_messages")
            .unwrap();
        let mut cfg = tiny_cfg(7_003);
        cfg.disable_freshness = true;
        let outcome = run_attack(&replay, &cfg);
        assert!(
            outcome.victim_accepted_forgery,
            "with freshness disabled the replay must be accepted, proving the scenario detects \
             the regression"
        );
    }
}
