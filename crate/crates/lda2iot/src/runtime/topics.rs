//! Topic layout for the pub/sub transport.
//!
//! Four directed topics per session: `auth/<sid>/u2g`, `g2s`, `s2g`, `g2u`.
//! The session id is routing metadata and never enters any hash input.

use crate::crypto::{CurveParams, CurvePoint, Timestamp};
use crate::crypto::hash::sha256_raw;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Direction {
    UserToGateway,
    GatewayToSensor,
    SensorToGateway,
    GatewayToUser,
}

impl Direction {
    pub fn suffix(&self) -> &'static str {
        match self {
            Direction::UserToGateway => "u2g",
            Direction::GatewayToSensor => "g2s",
            Direction::SensorToGateway => "s2g",
            Direction::GatewayToUser => "g2u",
        }
    }

    fn from_suffix(s: &str) -> Option<Self> {
        Some(match s {
            "u2g" => Direction::UserToGateway,
            "g2s" => Direction::GatewayToSensor,
            "s2g" => Direction::SensorToGateway,
            "g2u" => Direction::GatewayToUser,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TopicScheme {
    prefix: String,
}

impl Default for TopicScheme {
    fn default() -> Self {
        TopicScheme { prefix: "auth".to_string() }
    }
}

impl TopicScheme {
    pub fn topic(&self, session_id: &str, direction: Direction) -> String {
        format!("{}/{}/{}", self.prefix, session_id, direction.suffix())
    }

    /// Wildcard pattern for one direction across all sessions.
    pub fn pattern(&self, direction: Direction) -> String {
        format!("{}/+/{}", self.prefix, direction.suffix())
    }

    pub fn parse<'a>(&self, topic: &'a str) -> Option<(&'a str, Direction)> {
        let rest = topic.strip_prefix(&self.prefix)?.strip_prefix('/')?;
        let (session_id, suffix) = rest.rsplit_once('/')?;
        if session_id.is_empty() || session_id.contains('/') {
            return None;
        }
        Some((session_id, Direction::from_suffix(suffix)?))
    }
}

/// Session id: hex of H(PUB_Ui || PUB_Sj || T_1). Derived by the user when
/// it opens the session; everyone else reads it from the envelope topic.
pub fn derive_session_id(
    user_pub: &CurvePoint,
    sensor_pub: &CurvePoint,
    t1: Timestamp,
    params: &CurveParams,
) -> String {
    let digest = sha256_raw(&[
        &user_pub.encode(params),
        &sensor_pub.encode(params),
        &t1.encode(),
    ]);
    hex::encode(digest)
}

/// MQTT-style single-level wildcard match: `+` spans one path segment.
pub fn topic_matches(pattern: &str, topic: &str) -> bool {
    let mut pat = pattern.split('/');
    let mut top = topic.split('/');
    loop {
        match (pat.next(), top.next()) {
            (None, None) => return true,
            (Some("+"), Some(_)) => continue,
            (Some(p), Some(t)) if p == t => continue,
            _ => return false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_never_share_a_topic() {
        let scheme = TopicScheme::default();
        let dirs = [
            Direction::UserToGateway,
            Direction::GatewayToSensor,
            Direction::SensorToGateway,
            Direction::GatewayToUser,
        ];
        let topics: std::collections::HashSet<_> =
            dirs.iter().map(|d| scheme.topic("abc", *d)).collect();
        assert_eq!(topics.len(), 4);
        for d in dirs {
            let topic = scheme.topic("abc", d);
            assert_eq!(scheme.parse(&topic), Some(("abc", d)));
            assert!(topic_matches(&scheme.pattern(d), &topic));
        }
    }

    #[test]
    fn wildcard_spans_exactly_one_segment() {
        assert!(topic_matches("auth/+/u2g", "auth/xyz/u2g"));
        assert!(!topic_matches("auth/+/u2g", "auth/x/y/u2g"));
        assert!(!topic_matches("auth/+/u2g", "auth/xyz/g2u"));
        assert!(topic_matches("auth/xyz/u2g", "auth/xyz/u2g"));
    }
}
