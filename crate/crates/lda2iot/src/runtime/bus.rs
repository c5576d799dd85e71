//! Pluggable pub/sub transport and the in-process topic bus.
//!
//! The bus delivers at-most-once, in publish order per topic, fanned out to
//! every matching subscriber. The same contract backs the TCP broker
//! binding, so actors never care which transport they run on.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::crypto::Timestamp;
use crate::protocol::Role;

use super::topics::topic_matches;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("transport failure: {0}")]
    Io(String),
}

/// One delivered message as recorded in traces.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub topic: String,
    pub sender_role: Role,
    pub payload: Vec<u8>,
    pub enqueue_time: Timestamp,
}

pub trait Subscription: Send {
    /// Next (topic, payload) pair, waiting at most `timeout`.
    fn poll(&mut self, timeout: Duration) -> Option<(String, Vec<u8>)>;
}

pub trait Transport: Send + Sync {
    fn publish(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError>;
    /// Subscribes to a topic or a `+` single-level wildcard pattern.
    fn subscribe(&self, pattern: &str) -> Box<dyn Subscription>;
}

type Queue = Arc<(Mutex<VecDeque<(String, Vec<u8>)>>, Condvar)>;

struct SubEntry {
    pattern: String,
    queue: Queue,
}

/// Thread-safe in-process bus.
#[derive(Default)]
pub struct InProcessBus {
    subs: Mutex<Vec<SubEntry>>,
}

impl InProcessBus {
    pub fn new() -> Arc<Self> {
        Arc::new(InProcessBus::default())
    }
}

impl Transport for InProcessBus {
    fn publish(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        let subs = self.subs.lock().expect("bus lock");
        let mut delivered = 0usize;
        for entry in subs.iter() {
            if topic_matches(&entry.pattern, topic) {
                let (queue, condvar) = &*entry.queue;
                queue
                    .lock()
                    .expect("queue lock")
                    .push_back((topic.to_string(), payload.to_vec()));
                condvar.notify_one();
                delivered += 1;
            }
        }
        if delivered == 0 {
            log::warn!("no subscriber for topic {topic}");
        }
        Ok(())
    }

    fn subscribe(&self, pattern: &str) -> Box<dyn Subscription> {
        let queue: Queue = Arc::new((Mutex::new(VecDeque::new()), Condvar::new()));
        self.subs
            .lock()
            .expect("bus lock")
            .push(SubEntry { pattern: pattern.to_string(), queue: queue.clone() });
        Box::new(QueueSubscription { queue })
    }
}

struct QueueSubscription {
    queue: Queue,
}

impl Subscription for QueueSubscription {
    fn poll(&mut self, timeout: Duration) -> Option<(String, Vec<u8>)> {
        let (queue, condvar) = &*self.queue;
        let deadline = Instant::now() + timeout;
        let mut guard = queue.lock().expect("queue lock");
        loop {
            if let Some(item) = guard.pop_front() {
                return Some(item);
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return None;
            }
            let (next, result) = condvar.wait_timeout(guard, left).expect("queue lock");
            guard = next;
            if result.timed_out() && guard.is_empty() {
                return None;
            }
        }
    }
}
