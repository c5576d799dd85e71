//! Primitive-call accounting.
//!
//! A recorder installed on the current thread counts every hash, encryption,
//! decryption and point multiplication, attributed to the party whose handler
//! is running. Disabled (a single thread-local read) unless a measurement
//! explicitly installs a recorder, so protocol code ticks unconditionally.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Op {
    Hash,
    /// Hashes spent inside the gateway's bounded level search; kept apart
    /// from protocol-equation hashes because their number varies with the
    /// issued levels.
    LevelSearchHash,
    Encrypt,
    Decrypt,
    PointMul,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Party {
    User,
    Gateway,
    Sensor,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::User => write!(f, "user"),
            Party::Gateway => write!(f, "gateway"),
            Party::Sensor => write!(f, "sensor"),
        }
    }
}

/// Per-party operation counts collected by one recording.
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct OpCounts {
    counts: BTreeMap<(Party, Op), u64>,
}

impl OpCounts {
    pub fn get(&self, party: Party, op: Op) -> u64 {
        self.counts.get(&(party, op)).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Party, Op), &u64)> {
        self.counts.iter()
    }

    /// Hash + Encrypt + Decrypt for one party (the Table-style totals).
    pub fn protocol_ops(&self, party: Party) -> (u64, u64) {
        let hashes = self.get(party, Op::Hash);
        let encdec = self.get(party, Op::Encrypt) + self.get(party, Op::Decrypt);
        (hashes, encdec)
    }
}

struct Recorder {
    counts: OpCounts,
    party: Option<Party>,
    in_level_search: bool,
}

thread_local! {
    static RECORDER: RefCell<Option<Recorder>> = const { RefCell::new(None) };
}

/// Counts primitive calls made by `f` on this thread.
pub fn record<R>(f: impl FnOnce() -> R) -> (R, OpCounts) {
    RECORDER.with(|cell| {
        *cell.borrow_mut() = Some(Recorder {
            counts: OpCounts::default(),
            party: None,
            in_level_search: false,
        });
    });
    let out = f();
    let counts = RECORDER.with(|cell| cell.borrow_mut().take().map(|r| r.counts));
    (out, counts.unwrap_or_default())
}

/// Attributes calls inside `f` to `party`.
pub fn as_party<R>(party: Party, f: impl FnOnce() -> R) -> R {
    let prev = RECORDER.with(|cell| {
        cell.borrow_mut().as_mut().map(|r| std::mem::replace(&mut r.party, Some(party)))
    });
    let out = f();
    if let Some(prev) = prev {
        RECORDER.with(|cell| {
            if let Some(r) = cell.borrow_mut().as_mut() {
                r.party = prev;
            }
        });
    }
    out
}

/// Marks hashes inside `f` as level-search work.
pub fn in_level_search<R>(f: impl FnOnce() -> R) -> R {
    RECORDER.with(|cell| {
        if let Some(r) = cell.borrow_mut().as_mut() {
            r.in_level_search = true;
        }
    });
    let out = f();
    RECORDER.with(|cell| {
        if let Some(r) = cell.borrow_mut().as_mut() {
            r.in_level_search = false;
        }
    });
    out
}

pub(crate) fn tick(op: Op) {
    RECORDER.with(|cell| {
        if let Some(r) = cell.borrow_mut().as_mut() {
            let Some(party) = r.party else { return };
            let op = if op == Op::Hash && r.in_level_search {
                Op::LevelSearchHash
            } else {
                op
            };
            *r.counts.counts.entry((party, op)).or_insert(0) += 1;
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_attribute_to_party() {
        let ((), counts) = record(|| {
            as_party(Party::User, || {
                tick(Op::Hash);
                tick(Op::Encrypt);
            });
            as_party(Party::Gateway, || {
                tick(Op::Hash);
                in_level_search(|| tick(Op::Hash));
            });
            // Unattributed ticks are dropped.
            tick(Op::Hash);
        });
        assert_eq!(counts.get(Party::User, Op::Hash), 1);
        assert_eq!(counts.get(Party::User, Op::Encrypt), 1);
        assert_eq!(counts.get(Party::Gateway, Op::Hash), 1);
        assert_eq!(counts.get(Party::Gateway, Op::LevelSearchHash), 1);
        assert_eq!(counts.protocol_ops(Party::User), (1, 1));
    }

    #[test]
    fn no_recorder_is_a_noop() {
        tick(Op::Hash);
        let ((), counts) = record(|| {});
        assert_eq!(counts.get(Party::User, Op::Hash), 0);
    }
}
