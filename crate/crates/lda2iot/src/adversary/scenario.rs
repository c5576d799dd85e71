//! Attack scripts as data: ordered channel actions plus the expected
//! outcome, loadable from JSON scenario files.

use serde::{Deserialize, Serialize};

/// A forged message the adversary can build from public knowledge only
/// (curve parameters, enrolled public keys, the clock).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgeRecipe {
    /// Message 1 with a guessed X_2 — user impersonation.
    Msg1GuessedX2,
    /// Message 2 with a random Temp_1 — gateway impersonation at the sensor.
    Msg2RandomTemp1,
    /// Message 2 from an insider guessing Y_2 — gateway bypass.
    Msg2InsiderGuessY2,
    /// Message 3 with forged M_2 and level tag — sensor impersonation.
    Msg3ForgedTag,
    /// Message 4 encrypted to the sensor with guessed grant fields.
    Msg4ForgedGrant,
    /// Message 5 with random confirmation digests.
    Msg5RandomDigests,
    /// Message 6 encrypted to the user with guessed key material.
    Msg6ForgedKeyMaterial,
}

/// What the channel controller does to one matched message.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapAction {
    Pass,
    Drop,
    /// Substitute a forgery built by the named recipe.
    Replace { forge: ForgeRecipe },
    /// Flip one bit of the serialized payload.
    FlipBit { bit: usize },
}

/// Selects the n-th occurrence of one message kind on the channel.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TapRule {
    /// Wire tag: "msg1" .. "msg7" or "abort".
    pub target: String,
    #[serde(default)]
    pub occurrence: u32,
    pub action: TapAction,
}

/// Which stored tag the level-guess attack aims at.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelGuessTarget {
    UserCardTag,
    SensorTag,
}

/// One step of an attack script.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStep {
    /// Run an honest session end to end; its trace becomes the recording.
    HonestSession,
    /// Advance the shared virtual clock.
    AdvanceClock { ms: u32 },
    /// Reboot every actor: transient session state is lost, long-term
    /// secrets survive.
    RestartActors,
    /// Re-deliver every recorded message (or just one kind) to its
    /// receiver; the victims must reject each one as stale.
    ReplayRecorded {
        #[serde(default)]
        kind: Option<String>,
    },
    /// Run a session with channel rules active; no tampered message may be
    /// accepted.
    TamperedSession { rules: Vec<TapRule> },
    /// Publish one forged message into a fresh exchange.
    InjectForged { forge: ForgeRecipe },
    /// Steal the user device after the recorded session and attempt an
    /// offline session-key reconstruction.
    StealUserDevice,
    /// Capture the sensing device and attempt the same.
    CaptureSensingDevice,
    /// Brute-force a level tag within a hash budget, without K_s.
    LevelGuess { budget: u64, target: LevelGuessTarget },
    /// Run two concurrent sessions and cross-deliver their Message 5s.
    SpliceMsg5,
}

/// A complete scripted attack.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    #[serde(default = "default_level_pair")]
    pub user_level: u16,
    #[serde(default = "default_sensor_level")]
    pub sensor_level: u16,
    pub steps: Vec<AttackStep>,
}

fn default_level_pair() -> u16 {
    2
}

fn default_sensor_level() -> u16 {
    4
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario encodes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// The shipped regression suite.
pub fn builtin_suite() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "replay_all_messages".into(),
            description: "replay each of the seven recorded messages after the freshness window; \
                          every receiver must reject with a stale timestamp"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![
                AttackStep::HonestSession,
                AttackStep::AdvanceClock { ms: 5_001 },
                AttackStep::RestartActors,
                AttackStep::ReplayRecorded { kind: None },
            ],
        },
        Scenario {
            name: "user_impersonation".into(),
            description: "forged Message 1 with an attacker-chosen Temp_0 over a guessed X_2; \
                          the gateway must fail verification"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![AttackStep::InjectForged { forge: ForgeRecipe::Msg1GuessedX2 }],
        },
        Scenario {
            name: "sensor_impersonation".into(),
            description: "forged Message 3 and Message 5 without Y_2/D_j; the gateway must \
                          reject both legs"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![
                AttackStep::TamperedSession {
                    rules: vec![TapRule {
                        target: "msg3".into(),
                        occurrence: 0,
                        action: TapAction::Replace { forge: ForgeRecipe::Msg3ForgedTag },
                    }],
                },
                AttackStep::TamperedSession {
                    rules: vec![TapRule {
                        target: "msg5".into(),
                        occurrence: 0,
                        action: TapAction::Replace { forge: ForgeRecipe::Msg5RandomDigests },
                    }],
                },
            ],
        },
        Scenario {
            name: "gateway_impersonation".into(),
            description: "forged Temp_1, grant and key material; sensor and user must reject"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![
                AttackStep::TamperedSession {
                    rules: vec![TapRule {
                        target: "msg2".into(),
                        occurrence: 0,
                        action: TapAction::Replace { forge: ForgeRecipe::Msg2RandomTemp1 },
                    }],
                },
                AttackStep::TamperedSession {
                    rules: vec![TapRule {
                        target: "msg4".into(),
                        occurrence: 0,
                        action: TapAction::Replace { forge: ForgeRecipe::Msg4ForgedGrant },
                    }],
                },
                AttackStep::TamperedSession {
                    rules: vec![TapRule {
                        target: "msg6".into(),
                        occurrence: 0,
                        action: TapAction::Replace { forge: ForgeRecipe::Msg6ForgedKeyMaterial },
                    }],
                },
            ],
        },
        Scenario {
            name: "gateway_bypass".into(),
            description: "an insider device tries to act as the gateway by guessing Y_2; the \
                          sensor must reject the challenge"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![AttackStep::InjectForged { forge: ForgeRecipe::Msg2InsiderGuessY2 }],
        },
        Scenario {
            name: "stolen_user_device".into(),
            description: "dump X_1/X_2/RU_i plus the card and replay the full trace; r_t stays \
                          out of reach, so the reconstructed key must mismatch"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![AttackStep::HonestSession, AttackStep::StealUserDevice],
        },
        Scenario {
            name: "sensing_device_capture".into(),
            description: "dump Y_1/Y_2/RSN_j/D_j plus the trace; r_2 stays out of reach, so the \
                          reconstructed key must mismatch"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![AttackStep::HonestSession, AttackStep::CaptureSensingDevice],
        },
        Scenario {
            name: "level_side_channel".into(),
            description: "brute-force the card's level tag within a million hashes and no K_s; \
                          the level must stay unconfirmed"
                .into(),
            user_level: 3,
            sensor_level: 4,
            steps: vec![AttackStep::LevelGuess {
                budget: 1_000_000,
                target: LevelGuessTarget::UserCardTag,
            }],
        },
        Scenario {
            name: "mitm_splice".into(),
            description: "swap Message 5 between two concurrent sessions; the gateway must \
                          reject both spliced confirmations"
                .into(),
            user_level: 2,
            sensor_level: 4,
            steps: vec![AttackStep::SpliceMsg5],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_round_trip_through_json() {
        for scenario in builtin_suite() {
            let json = scenario.to_json();
            assert_eq!(Scenario::from_json(&json).unwrap(), scenario);
        }
    }

    #[test]
    fn suite_covers_the_catalogue() {
        let names: Vec<_> = builtin_suite().into_iter().map(|s| s.name).collect();
        for expected in [
            "replay_all_messages",
            "user_impersonation",
            "sensor_impersonation",
            "gateway_impersonation",
            "gateway_bypass",
            "stolen_user_device",
            "sensing_device_capture",
            "level_side_channel",
            "mitm_splice",
        ] {
            assert!(names.iter().any(|n| n == expected), "missing {expected}");
        }
    }
}
