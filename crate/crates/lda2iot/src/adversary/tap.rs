//! The Dolev-Yao channel controller: intercepts every envelope, applies
//! scripted actions, builds forgeries from public knowledge and records an
//! auditable transcript.

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use std::collections::HashSet;
use std::sync::Arc;

use crate::crypto::{
    hash_parts, hybrid_encrypt, CurveParams, CurvePoint, Digest, Nonce, Timestamp,
};
use crate::protocol::{MsgKind, WireMessage, IDENTITY_LEN};
use crate::runtime::{decode_wire, encode_wire, Envelope};

use super::scenario::{ForgeRecipe, TapAction, TapRule};

/// What the adversary legitimately knows: everything public.
pub struct AdversaryView {
    pub params: Arc<CurveParams>,
    pub gw_pub: CurvePoint,
    pub user_pub: CurvePoint,
    pub sensor_pub: CurvePoint,
}

fn random_digest(rng: &mut dyn RngCore) -> Digest {
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    Digest(bytes)
}

/// Builds a forged wire message with a fresh timestamp. Every recipe uses
/// only `view` (public data) plus randomness.
pub fn build_forgery(
    recipe: ForgeRecipe,
    view: &AdversaryView,
    now: Timestamp,
    rng: &mut ChaCha20Rng,
) -> WireMessage {
    let params = &view.params;
    match recipe {
        ForgeRecipe::Msg1GuessedX2 => {
            let r_t = Nonce::random_default(rng);
            let x2_guess = random_digest(rng);
            let b_i_guess = random_digest(rng);
            let temp0 = hash_parts(&[x2_guess.as_bytes(), &now.encode(), r_t.as_bytes()]);
            let m1 = hybrid_encrypt(
                &view.gw_pub,
                &[
                    temp0.as_bytes(),
                    &view.user_pub.encode(params),
                    &view.sensor_pub.encode(params),
                    r_t.as_bytes(),
                    b_i_guess.as_bytes(),
                ],
                params,
                rng,
            )
            .expect("public-key encryption");
            WireMessage::Msg1 { m1, temp0, t1: now }
        }
        ForgeRecipe::Msg2RandomTemp1 => {
            WireMessage::Msg2 { temp1: random_digest(rng), t2: now }
        }
        ForgeRecipe::Msg2InsiderGuessY2 => {
            let y2_guess = random_digest(rng);
            let temp1 = hash_parts(&[
                &view.sensor_pub.encode(params),
                y2_guess.as_bytes(),
                &view.gw_pub.encode(params),
                &now.encode(),
            ]);
            WireMessage::Msg2 { temp1, t2: now }
        }
        ForgeRecipe::Msg3ForgedTag => {
            let y2_guess = random_digest(rng);
            let m2 = hash_parts(&[
                y2_guess.as_bytes(),
                &now.encode(),
                &view.sensor_pub.encode(params),
            ]);
            let d_j_guess = random_digest(rng);
            let r_2 = Nonce::random_default(rng);
            let m3 = hybrid_encrypt(
                &view.gw_pub,
                &[m2.as_bytes(), d_j_guess.as_bytes(), r_2.as_bytes()],
                params,
                rng,
            )
            .expect("public-key encryption");
            WireMessage::Msg3 { m3, t3: now }
        }
        ForgeRecipe::Msg4ForgedGrant => {
            let r_1 = Nonce::random_default(rng);
            let hy2_guess = random_digest(rng);
            let m4 = hash_parts(&[
                &view.user_pub.encode(params),
                &now.encode(),
                &view.gw_pub.encode(params),
                r_1.as_bytes(),
                hy2_guess.as_bytes(),
            ]);
            let mut sid_guess = [0u8; IDENTITY_LEN];
            rng.fill_bytes(&mut sid_guess);
            let m5 = hybrid_encrypt(
                &view.sensor_pub,
                &[m4.as_bytes(), &sid_guess, r_1.as_bytes()],
                params,
                rng,
            )
            .expect("public-key encryption");
            WireMessage::Msg4 { m5, pub_ui: view.user_pub.encode(params), t4: now }
        }
        ForgeRecipe::Msg5RandomDigests => WireMessage::Msg5 {
            m6: random_digest(rng),
            m7: random_digest(rng),
            t5: now,
        },
        ForgeRecipe::Msg6ForgedKeyMaterial => {
            let r_1 = Nonce::random_default(rng);
            let r_2 = Nonce::random_default(rng);
            let m13 = hybrid_encrypt(
                &view.user_pub,
                &[
                    random_digest(rng).as_bytes(),
                    random_digest(rng).as_bytes(),
                    random_digest(rng).as_bytes(),
                    r_1.as_bytes(),
                    r_2.as_bytes(),
                ],
                params,
                rng,
            )
            .expect("public-key encryption");
            WireMessage::Msg6 { m13, t6: now }
        }
    }
}

/// One recorded tap decision.
#[derive(Clone, Debug)]
pub struct TapEvent {
    pub action: String,
    pub topic: String,
    pub detail: String,
}

struct RuleState {
    rule: TapRule,
    seen: u32,
    fired: bool,
}

/// In-path channel controller: every envelope passes through `process`.
pub struct ChannelTap {
    rules: Vec<RuleState>,
    pub transcript: Vec<TapEvent>,
    tampered: HashSet<Vec<u8>>,
    /// Original payloads the tap removed from the channel (dropped or
    /// replaced), available for splicing.
    pub captured: Vec<Envelope>,
}

impl ChannelTap {
    pub fn new(rules: Vec<TapRule>) -> Self {
        ChannelTap {
            rules: rules.into_iter().map(|rule| RuleState { rule, seen: 0, fired: false }).collect(),
            transcript: Vec::new(),
            tampered: HashSet::new(),
            captured: Vec::new(),
        }
    }

    pub fn passthrough() -> Self {
        ChannelTap::new(Vec::new())
    }

    /// Marks a payload the adversary created or re-delivered.
    pub fn mark_tampered(&mut self, payload: &[u8]) {
        self.tampered.insert(payload.to_vec());
    }

    pub fn is_tampered(&self, payload: &[u8]) -> bool {
        self.tampered.contains(payload)
    }

    fn record(&mut self, action: &str, topic: &str, detail: String) {
        self.transcript.push(TapEvent {
            action: action.to_string(),
            topic: topic.to_string(),
            detail,
        });
    }

    /// Applies at most one matching rule; returns the envelope to deliver,
    /// or None when the message is removed from the channel.
    pub fn process(
        &mut self,
        envelope: Envelope,
        view: &AdversaryView,
        now: Timestamp,
        rng: &mut ChaCha20Rng,
    ) -> Option<Envelope> {
        let kind = decode_wire(&envelope.payload, &view.params)
            .map(|m| m.kind())
            .ok();
        let mut matched = None;
        if let Some(kind) = kind {
            for (idx, state) in self.rules.iter_mut().enumerate() {
                if state.fired || MsgKind::from_tag(&state.rule.target) != Some(kind) {
                    continue;
                }
                let hit = state.seen == state.rule.occurrence;
                state.seen += 1;
                if hit {
                    matched = Some(idx);
                    break;
                }
            }
        }
        let Some(idx) = matched else {
            self.record("pass", &envelope.topic, String::new());
            return Some(envelope);
        };
        self.rules[idx].fired = true;
        let action = self.rules[idx].rule.action;
        match action {
            TapAction::Pass => {
                self.record("pass", &envelope.topic, "explicit".into());
                Some(envelope)
            }
            TapAction::Drop => {
                self.record("drop", &envelope.topic, String::new());
                self.captured.push(envelope);
                None
            }
            TapAction::Replace { forge } => {
                let forged = build_forgery(forge, view, now, rng);
                let payload = encode_wire(&forged, &view.params);
                self.mark_tampered(&payload);
                self.record("replace", &envelope.topic, format!("{forge:?}"));
                self.captured.push(envelope.clone());
                Some(Envelope { payload, ..envelope })
            }
            TapAction::FlipBit { bit } => {
                let mut payload = envelope.payload.clone();
                let bit = bit % (payload.len() * 8);
                payload[bit / 8] ^= 1 << (bit % 8);
                self.mark_tampered(&payload);
                self.record("flip_bit", &envelope.topic, format!("bit {bit}"));
                self.captured.push(envelope.clone());
                Some(Envelope { payload, ..envelope })
            }
        }
    }
}
