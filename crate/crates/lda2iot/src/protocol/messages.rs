//! The seven key-agreement messages plus the 0-signal abort.

use crate::crypto::{Digest, PayloadCiphertext, Timestamp};

/// Tagged union of everything that travels the public channel.
#[derive(Clone, PartialEq, Debug)]
pub enum WireMessage {
    /// User -> gateway: encrypted request plus the clear Temp_0 copy.
    Msg1 { m1: PayloadCiphertext, temp0: Digest, t1: Timestamp },
    /// Gateway -> sensor: challenge digest.
    Msg2 { temp1: Digest, t2: Timestamp },
    /// Sensor -> gateway: encrypted response and level tag.
    Msg3 { m3: PayloadCiphertext, t3: Timestamp },
    /// Gateway -> sensor: encrypted grant with the user public key in clear.
    Msg4 { m5: PayloadCiphertext, pub_ui: Vec<u8>, t4: Timestamp },
    /// Sensor -> gateway: confirmation digests.
    Msg5 { m6: Digest, m7: Digest, t5: Timestamp },
    /// Gateway -> user: key material.
    Msg6 { m13: PayloadCiphertext, t6: Timestamp },
    /// Gateway -> sensor: key material.
    Msg7 { m14: PayloadCiphertext, t6: Timestamp },
    /// The 0 signal: access denied or protocol failure.
    Abort { code: u8, at: Timestamp },
}

pub const ABORT_CODE: u8 = 0;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum MsgKind {
    Msg1,
    Msg2,
    Msg3,
    Msg4,
    Msg5,
    Msg6,
    Msg7,
    Abort,
}

impl MsgKind {
    pub fn tag(&self) -> &'static str {
        match self {
            MsgKind::Msg1 => "msg1",
            MsgKind::Msg2 => "msg2",
            MsgKind::Msg3 => "msg3",
            MsgKind::Msg4 => "msg4",
            MsgKind::Msg5 => "msg5",
            MsgKind::Msg6 => "msg6",
            MsgKind::Msg7 => "msg7",
            MsgKind::Abort => "abort",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "msg1" => MsgKind::Msg1,
            "msg2" => MsgKind::Msg2,
            "msg3" => MsgKind::Msg3,
            "msg4" => MsgKind::Msg4,
            "msg5" => MsgKind::Msg5,
            "msg6" => MsgKind::Msg6,
            "msg7" => MsgKind::Msg7,
            "abort" => MsgKind::Abort,
            _ => return None,
        })
    }
}

impl WireMessage {
    pub fn kind(&self) -> MsgKind {
        match self {
            WireMessage::Msg1 { .. } => MsgKind::Msg1,
            WireMessage::Msg2 { .. } => MsgKind::Msg2,
            WireMessage::Msg3 { .. } => MsgKind::Msg3,
            WireMessage::Msg4 { .. } => MsgKind::Msg4,
            WireMessage::Msg5 { .. } => MsgKind::Msg5,
            WireMessage::Msg6 { .. } => MsgKind::Msg6,
            WireMessage::Msg7 { .. } => MsgKind::Msg7,
            WireMessage::Abort { .. } => MsgKind::Abort,
        }
    }

    /// The single timestamp every variant carries.
    pub fn timestamp(&self) -> Timestamp {
        match self {
            WireMessage::Msg1 { t1, .. } => *t1,
            WireMessage::Msg2 { t2, .. } => *t2,
            WireMessage::Msg3 { t3, .. } => *t3,
            WireMessage::Msg4 { t4, .. } => *t4,
            WireMessage::Msg5 { t5, .. } => *t5,
            WireMessage::Msg6 { t6, .. } | WireMessage::Msg7 { t6, .. } => *t6,
            WireMessage::Abort { at, .. } => *at,
        }
    }

    pub fn abort(at: Timestamp) -> Self {
        WireMessage::Abort { code: ABORT_CODE, at }
    }
}
