//! 32-bit millisecond timestamps.
//!
//! Timestamps travel on the wire as 32 bits. Virtual clocks start near zero;
//! the wall clock maps to unix milliseconds mod 2³², the usual 32-bit wrap.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub u32);

impl Timestamp {
    pub const WIRE_LEN: usize = 4;

    pub fn millis(&self) -> u32 {
        self.0
    }

    pub fn encode(&self) -> [u8; 4] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(bytes: [u8; 4]) -> Self {
        Timestamp(u32::from_be_bytes(bytes))
    }

    /// `self - earlier` in milliseconds; negative when `self` is behind.
    pub fn since(&self, earlier: Timestamp) -> i64 {
        self.0 as i64 - earlier.0 as i64
    }

    pub fn saturating_add(&self, ms: u32) -> Timestamp {
        Timestamp(self.0.saturating_add(ms))
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_is_4_byte_big_endian() {
        let t = Timestamp(0x01020304);
        assert_eq!(t.encode(), [1, 2, 3, 4]);
        assert_eq!(Timestamp::from_bytes(t.encode()), t);
    }

    #[test]
    fn since_is_signed() {
        assert_eq!(Timestamp(10).since(Timestamp(4)), 6);
        assert_eq!(Timestamp(4).since(Timestamp(10)), -6);
    }
}
