//! Timestamp freshness: a message is fresh when 0 ≤ now − sent ≤ ΔT,
//! inclusive at the boundary.

use crate::crypto::Timestamp;

use super::types::ProtocolError;

pub fn check_freshness(sent: Timestamp, now: Timestamp, delta_t_ms: u32) -> Result<(), ProtocolError> {
    let age = now.since(sent);
    if age < 0 {
        return Err(ProtocolError::ClockSkew);
    }
    if age > delta_t_ms as i64 {
        return Err(ProtocolError::StaleTimestamp);
    }
    Ok(())
}
