//! Throughput: bits and packets per unit time per entity.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::crypto::CurveParams;
use crate::runtime::Envelope;

use super::size::{count_bits, AccountingError, SizeModel};

/// The average throughput figure the measurement campaign reported.
pub const BASELINE_AVG_BPS: f64 = 19.48;

#[derive(Clone, Debug, Serialize)]
pub struct EntityThroughput {
    pub bits_per_s: f64,
    pub bytes_per_s: f64,
    pub packets_per_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThroughputReport {
    pub duration: Duration,
    pub per_entity: BTreeMap<String, EntityThroughput>,
    pub total: EntityThroughput,
}

/// packets × size / time, the direct formula.
pub fn formula_throughput(packets: u64, packet_size_bytes: u64, duration: Duration) -> f64 {
    (packets * packet_size_bytes) as f64 / duration.as_secs_f64()
}

pub fn measure_throughput(
    trace: &[Envelope],
    duration: Duration,
    model: &SizeModel,
    params: &CurveParams,
) -> Result<ThroughputReport, AccountingError> {
    assert!(duration > Duration::ZERO);
    let cost = count_bits(trace, model, params)?;
    let secs = duration.as_secs_f64();
    let mut per_entity = BTreeMap::new();
    for (entity, bits) in &cost.per_entity {
        let packets =
            trace.iter().filter(|e| e.sender_role.to_string() == *entity).count() as f64;
        per_entity.insert(
            entity.clone(),
            EntityThroughput {
                bits_per_s: *bits as f64 / secs,
                bytes_per_s: *bits as f64 / 8.0 / secs,
                packets_per_s: packets / secs,
            },
        );
    }
    let total = EntityThroughput {
        bits_per_s: cost.total as f64 / secs,
        bytes_per_s: cost.total as f64 / 8.0 / secs,
        packets_per_s: trace.len() as f64 / secs,
    };
    Ok(ThroughputReport { duration, per_entity, total })
}

impl ThroughputReport {
    pub fn render(&self, with_baseline: bool) -> String {
        let mut out = String::new();
        writeln!(out, "throughput over {:?}", self.duration).unwrap();
        for (entity, t) in &self.per_entity {
            writeln!(
                out,
                "  {entity:<8} {:>12.2} bit/s {:>12.2} B/s {:>8.2} pkt/s",
                t.bits_per_s, t.bytes_per_s, t.packets_per_s
            )
            .unwrap();
        }
        writeln!(
            out,
            "  {:<8} {:>12.2} bit/s {:>12.2} B/s {:>8.2} pkt/s",
            "total", self.total.bits_per_s, self.total.bytes_per_s, self.total.packets_per_s
        )
        .unwrap();
        if with_baseline {
            writeln!(out, "  reference baseline: {BASELINE_AVG_BPS} bps average").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Level;
    use crate::runtime::{build_world, WorldConfig};

    #[test]
    fn formula_check() {
        assert_eq!(formula_throughput(10, 8, Duration::from_secs(4)), 20.0);
    }

    #[test]
    fn one_session_in_one_second() {
        let cfg = WorldConfig::new(CurveParams::tiny23(), 555).levels(Level(1), Level(1));
        let mut world = build_world(&cfg).unwrap();
        let outcome = world.run_one();
        let model = SizeModel::paper(&world.params);
        let report = measure_throughput(
            &outcome.trace,
            Duration::from_secs(1),
            &model,
            &world.params,
        )
        .unwrap();
        let cost = count_bits(&outcome.trace, &model, &world.params).unwrap();
        assert_eq!(report.total.bits_per_s, cost.total as f64);
        assert_eq!(report.total.packets_per_s, 7.0);
    }
}
