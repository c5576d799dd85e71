//! Communication-cost accounting in bits.
//!
//! A configurable size model prices every protocol field; the report sums
//! per message and per sending entity, under either the plaintext-field
//! policy or the as-serialized wire policy.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

use crate::crypto::CurveParams;
use crate::protocol::{Role, WireMessage};
use crate::runtime::{decode_wire, Envelope};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountPolicy {
    /// Price the logical plaintext fields, ignoring ciphertext overhead.
    CountPlaintext,
    /// Count the serialized wire bytes as they travelled.
    CountWire,
}

/// Per-primitive widths in bits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SizeModel {
    pub identity_bits: u64,
    pub password_bits: u64,
    pub hash_bits: u64,
    pub timestamp_bits: u64,
    pub nonce_bits: u64,
    pub point_bits: u64,
    pub abort_code_bits: u64,
    pub policy: CountPolicy,
}

impl SizeModel {
    /// The measurement widths: 160-bit identities and passwords, 256-bit
    /// hashes, 32-bit timestamps, 128-bit nonces; points at the curve's
    /// uncompressed width.
    pub fn paper(params: &CurveParams) -> Self {
        SizeModel {
            identity_bits: 160,
            password_bits: 160,
            hash_bits: 256,
            timestamp_bits: 32,
            nonce_bits: 128,
            point_bits: 8 * (1 + 2 * params.field_len() as u64),
            abort_code_bits: 8,
            policy: CountPolicy::CountPlaintext,
        }
    }

    pub fn with_policy(mut self, policy: CountPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self) -> Result<(), AccountingError> {
        let widths = [
            self.identity_bits,
            self.password_bits,
            self.hash_bits,
            self.timestamp_bits,
            self.nonce_bits,
            self.point_bits,
            self.abort_code_bits,
        ];
        if widths.iter().any(|w| *w == 0) {
            return Err(AccountingError::InvalidModel);
        }
        Ok(())
    }

    /// Logical field widths of one message under the plaintext policy:
    /// encrypted payload fields count at their plaintext widths.
    fn message_bits(&self, msg: &WireMessage) -> u64 {
        let (h, t, n, p, i) = (
            self.hash_bits,
            self.timestamp_bits,
            self.nonce_bits,
            self.point_bits,
            self.identity_bits,
        );
        match msg {
            // M_1 = [Temp_0, PUB_Ui, PUB_Sj, r_t, B_i], clear Temp_0, T_1.
            WireMessage::Msg1 { .. } => (h + p + p + n + h) + h + t,
            WireMessage::Msg2 { .. } => h + t,
            // M_3 = [M_2, D_j, r_2], T_3.
            WireMessage::Msg3 { .. } => (h + h + n) + t,
            // M_5 = [M_4, SID_j, r_1], clear PUB_Ui, T_4.
            WireMessage::Msg4 { .. } => (h + i + n) + p + t,
            WireMessage::Msg5 { .. } => h + h + t,
            // M_13 = [M_8, M_9, M_11, r_1, r_2], T_6.
            WireMessage::Msg6 { .. } => (h + h + h + n + n) + t,
            // M_14 = [M_8, M_10, M_12, r_t], T_6.
            WireMessage::Msg7 { .. } => (h + h + h + n) + t,
            WireMessage::Abort { .. } => self.abort_code_bits + t,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccountingError {
    #[error("trace contains an undecodable message: {0}")]
    UnknownField(String),
    #[error("size model has a zero width")]
    InvalidModel,
}

#[derive(Clone, Debug, Serialize)]
pub struct MessageCost {
    pub kind: &'static str,
    pub sender: Role,
    pub bits: u64,
}

/// Bits sent per entity and in total, with the per-message breakdown.
#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub policy: CountPolicy,
    pub messages: Vec<MessageCost>,
    pub per_entity: BTreeMap<String, u64>,
    pub total: u64,
}

/// The communication-cost row the measurement campaign reported:
/// user 512, gateway 1344, sensor 704, total 2560 bits.
pub const BASELINE_COMM_BITS: (u64, u64, u64, u64) = (512, 1344, 704, 2560);

pub fn count_bits(
    trace: &[Envelope],
    model: &SizeModel,
    params: &CurveParams,
) -> Result<CostReport, AccountingError> {
    model.validate()?;
    let mut messages = Vec::with_capacity(trace.len());
    let mut per_entity: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    for envelope in trace {
        let msg = decode_wire(&envelope.payload, params)
            .map_err(|e| AccountingError::UnknownField(e.to_string()))?;
        let bits = match model.policy {
            CountPolicy::CountPlaintext => model.message_bits(&msg),
            CountPolicy::CountWire => 8 * envelope.payload.len() as u64,
        };
        messages.push(MessageCost {
            kind: msg.kind().tag(),
            sender: envelope.sender_role,
            bits,
        });
        *per_entity.entry(envelope.sender_role.to_string()).or_insert(0) += bits;
        total += bits;
    }
    Ok(CostReport { policy: model.policy, messages, per_entity, total })
}

impl CostReport {
    pub fn entity_bits(&self, role: Role) -> u64 {
        self.per_entity.get(&role.to_string()).copied().unwrap_or(0)
    }

    /// The internal identity: total equals the entity sums and the message
    /// sums, exactly.
    pub fn is_consistent(&self) -> bool {
        let by_entity: u64 = self.per_entity.values().sum();
        let by_message: u64 = self.messages.iter().map(|m| m.bits).sum();
        by_entity == self.total && by_message == self.total
    }

    pub fn render(&self, with_baseline: bool) -> String {
        let mut out = String::new();
        let policy = match self.policy {
            CountPolicy::CountPlaintext => "count-plaintext",
            CountPolicy::CountWire => "count-wire",
        };
        writeln!(out, "communication cost ({policy})").unwrap();
        writeln!(out, "  {:<8} {:<9} {:>8}", "message", "sender", "bits").unwrap();
        for m in &self.messages {
            writeln!(out, "  {:<8} {:<9} {:>8}", m.kind, m.sender.to_string(), m.bits).unwrap();
        }
        for (entity, bits) in &self.per_entity {
            writeln!(out, "  {entity:<18} {bits:>8} bits").unwrap();
        }
        writeln!(out, "  {:<18} {:>8} bits", "total", self.total).unwrap();
        if with_baseline {
            let (u, g, s, t) = BASELINE_COMM_BITS;
            writeln!(
                out,
                "  reference baseline: user {u} / gateway {g} / sensor {s} / total {t} bits"
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Level;
    use crate::runtime::{build_world, SessionResult, WorldConfig};

    #[test]
    fn empty_trace_is_all_zeros() {
        let params = CurveParams::tiny23();
        let model = SizeModel::paper(&params);
        let report = count_bits(&[], &model, &params).unwrap();
        assert_eq!(report.total, 0);
        assert!(report.per_entity.is_empty());
        assert!(report.is_consistent());
    }

    #[test]
    fn honest_trace_satisfies_the_accounting_identity() {
        let cfg = WorldConfig::new(CurveParams::tiny23(), 411).levels(Level(1), Level(2));
        let mut world = build_world(&cfg).unwrap();
        let outcome = world.run_one();
        assert_eq!(outcome.result, SessionResult::KeyAgreed);
        let model = SizeModel::paper(&world.params);
        let report = count_bits(&outcome.trace, &model, &world.params).unwrap();
        assert!(report.is_consistent());
        assert_eq!(report.messages.len(), 7);
        // User sends only Message 1: [hash,point,point,nonce,hash] + hash + ts.
        let p = model.point_bits;
        assert_eq!(report.entity_bits(Role::User), 256 + p + p + 128 + 256 + 256 + 32);
        let wire = count_bits(
            &outcome.trace,
            &model.clone().with_policy(CountPolicy::CountWire),
            &world.params,
        )
        .unwrap();
        assert!(wire.is_consistent());
        assert!(wire.total > report.total, "hex wire costs more than plaintext fields");
    }

    #[test]
    fn zero_width_model_is_rejected() {
        let params = CurveParams::tiny23();
        let mut model = SizeModel::paper(&params);
        model.hash_bits = 0;
        assert!(matches!(
            count_bits(&[], &model, &params),
            Err(AccountingError::InvalidModel)
        ));
    }

    #[test]
    fn garbage_payload_reports_unknown_field() {
        let params = CurveParams::tiny23();
        let model = SizeModel::paper(&params);
        let env = Envelope {
            topic: "auth/x/u2g".into(),
            sender_role: Role::User,
            payload: b"not json".to_vec(),
            enqueue_time: crate::crypto::Timestamp(0),
        };
        assert!(matches!(
            count_bits(&[env], &model, &params),
            Err(AccountingError::UnknownField(_))
        ));
    }
}
