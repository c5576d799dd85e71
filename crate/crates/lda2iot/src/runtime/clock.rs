//! Injected clocks: a controllable virtual clock for deterministic runs and
//! the wall clock for the CLI boundary.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::crypto::Timestamp;

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;

    /// Moves a controllable clock forward; a no-op on the wall clock, where
    /// time passes by itself.
    fn advance(&self, _ms: u32) {}
}

/// Shared monotone virtual clock.
#[derive(Debug)]
pub struct VirtualClock {
    millis: AtomicU32,
}

impl VirtualClock {
    pub fn starting_at(ms: u32) -> Arc<Self> {
        Arc::new(VirtualClock { millis: AtomicU32::new(ms) })
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Timestamp {
        Timestamp(self.millis.load(Ordering::SeqCst))
    }

    fn advance(&self, ms: u32) {
        self.millis.fetch_add(ms, Ordering::SeqCst);
    }
}

/// Unix milliseconds truncated to the 32-bit wire width.
#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        let ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("clock before the unix epoch")
            .as_millis();
        Timestamp((ms & 0xffff_ffff) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_clock_advances() {
        let clock = VirtualClock::starting_at(10);
        assert_eq!(clock.now(), Timestamp(10));
        clock.advance(5);
        assert_eq!(clock.now(), Timestamp(15));
    }

    #[test]
    fn system_clock_is_monotone_locally() {
        let clock = SystemClock;
        let a = clock.now();
        let b = clock.now();
        assert!(b.since(a) >= 0);
    }
}
