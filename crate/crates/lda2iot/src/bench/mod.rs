//! Communication-bit accounting, primitive timing, round-trip delay and
//! throughput measurement with report generation.

pub mod rtd;
pub mod size;
pub mod throughput;
pub mod timing;

pub use rtd::{measure_rtd, RtdReport, BASELINE_RTD_SENSOR_S, BASELINE_RTD_USER_S};
pub use size::{
    count_bits, AccountingError, CostReport, CountPolicy, MessageCost, SizeModel,
    BASELINE_COMM_BITS,
};
pub use throughput::{
    formula_throughput, measure_throughput, EntityThroughput, ThroughputReport, BASELINE_AVG_BPS,
};
pub use timing::{
    count_session_ops, time_primitives, PartyOps, PrimitiveStats, SessionOpCounts, TimingReport,
    BASELINE_OP_COUNTS, BASELINE_TOTAL_MS,
};
