//! Round-trip delay measurement over in-process sessions.

use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Duration;

use crate::crypto::CurveParams;
use crate::protocol::Level;
use crate::runtime::{build_world, SessionResult, WorldConfig};

/// The round-trip figures the measurement campaign reported, in seconds.
pub const BASELINE_RTD_SENSOR_S: f64 = 0.4825;
pub const BASELINE_RTD_USER_S: f64 = 0.5282;

#[derive(Clone, Debug, Serialize)]
pub struct RtdReport {
    pub runs: u32,
    pub user_rtd_mean: Duration,
    pub sensor_rtd_mean: Duration,
    /// Gateway verification-and-decision span on the allowed path.
    pub gw_verify_allowed_mean: Duration,
    /// Same span on the denied path, including the 0-signal emission.
    pub gw_verify_denied_mean: Duration,
}

fn mean(samples: &[Duration]) -> Duration {
    if samples.is_empty() {
        return Duration::ZERO;
    }
    Duration::from_secs_f64(
        samples.iter().map(Duration::as_secs_f64).sum::<f64>() / samples.len() as f64,
    )
}

/// Runs `runs` allowed sessions (levels 2 -> 4) and `runs` denied sessions
/// (levels 4 -> 2), measuring delivery round trips and the gateway's
/// verification span. Measurement is serial by design.
pub fn measure_rtd(curve: Arc<CurveParams>, runs: u32, seed: u64) -> RtdReport {
    assert!(runs >= 1);
    let mut user_rtds = Vec::new();
    let mut sensor_rtds = Vec::new();
    let mut allowed_spans = Vec::new();
    let mut denied_spans = Vec::new();
    for i in 0..runs {
        let cfg = WorldConfig::new(curve.clone(), seed.wrapping_add(i as u64))
            .levels(Level(2), Level(4));
        let mut world = build_world(&cfg).expect("rtd world");
        let outcome = world.run_one();
        assert_eq!(outcome.result, SessionResult::KeyAgreed, "allowed run failed");
        user_rtds.extend(outcome.user_rtd);
        sensor_rtds.extend(outcome.sensor_rtd);
        allowed_spans.extend(outcome.gw_verify_time);
    }
    for i in 0..runs {
        let cfg = WorldConfig::new(curve.clone(), seed.wrapping_add(0x4000 + i as u64))
            .levels(Level(4), Level(2));
        let mut world = build_world(&cfg).expect("rtd world");
        let outcome = world.run_one();
        assert_eq!(outcome.result, SessionResult::Denied, "denied run did not deny");
        denied_spans.extend(outcome.gw_verify_time);
    }
    RtdReport {
        runs,
        user_rtd_mean: mean(&user_rtds),
        sensor_rtd_mean: mean(&sensor_rtds),
        gw_verify_allowed_mean: mean(&allowed_spans),
        gw_verify_denied_mean: mean(&denied_spans),
    }
}

impl RtdReport {
    pub fn render(&self, with_baseline: bool) -> String {
        let mut out = String::new();
        writeln!(out, "round-trip delay over {} runs per arm", self.runs).unwrap();
        writeln!(out, "  user RTD mean   {:>12.3?}", self.user_rtd_mean).unwrap();
        writeln!(out, "  sensor RTD mean {:>12.3?}", self.sensor_rtd_mean).unwrap();
        writeln!(
            out,
            "  gateway verification span: allowed {:>10.3?}, denied {:>10.3?}",
            self.gw_verify_allowed_mean, self.gw_verify_denied_mean
        )
        .unwrap();
        if with_baseline {
            writeln!(
                out,
                "  reference baseline: sensor {BASELINE_RTD_SENSOR_S} s, user \
                 {BASELINE_RTD_USER_S} s"
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_measures_positive_rtd() {
        let report = measure_rtd(CurveParams::tiny23(), 1, 321);
        assert!(report.user_rtd_mean > Duration::ZERO);
        assert!(report.sensor_rtd_mean > Duration::ZERO);
        assert!(report.gw_verify_denied_mean > Duration::ZERO);
    }
}
