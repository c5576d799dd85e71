//! Canonical JSON wire codec.
//!
//! One JSON object per message: a `type` tag, field names sorted, binary
//! fields as lowercase hex, timestamps as integers. Encoding is
//! deterministic, so equal messages are byte-identical across processes.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::crypto::{CurveParams, Digest, PayloadCiphertext, Timestamp, DIGEST_LEN};
use crate::protocol::{MsgKind, WireMessage, ABORT_CODE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed wire object: {0}")]
    MalformedWire(String),
    #[error("unknown message tag {0:?}")]
    UnknownMessageTag(String),
    #[error("field {field} is {got} bytes, expected {expected}")]
    FieldWidthMismatch { field: &'static str, expected: usize, got: usize },
}

/// Serializes a message to its canonical JSON bytes.
pub fn encode_wire(msg: &WireMessage, params: &CurveParams) -> Vec<u8> {
    let value = match msg {
        WireMessage::Msg1 { m1, temp0, t1 } => json!({
            "type": "msg1",
            "m1": ct_value(m1),
            "temp0": temp0.to_hex(),
            "t": t1.millis(),
        }),
        WireMessage::Msg2 { temp1, t2 } => json!({
            "type": "msg2",
            "temp1": temp1.to_hex(),
            "t": t2.millis(),
        }),
        WireMessage::Msg3 { m3, t3 } => json!({
            "type": "msg3",
            "m3": ct_value(m3),
            "t": t3.millis(),
        }),
        WireMessage::Msg4 { m5, pub_ui, t4 } => json!({
            "type": "msg4",
            "m5": ct_value(m5),
            "pub_ui": hex::encode(pub_ui),
            "t": t4.millis(),
        }),
        WireMessage::Msg5 { m6, m7, t5 } => json!({
            "type": "msg5",
            "m6": m6.to_hex(),
            "m7": m7.to_hex(),
            "t": t5.millis(),
        }),
        WireMessage::Msg6 { m13, t6 } => json!({
            "type": "msg6",
            "m13": ct_value(m13),
            "t": t6.millis(),
        }),
        WireMessage::Msg7 { m14, t6 } => json!({
            "type": "msg7",
            "m14": ct_value(m14),
            "t": t6.millis(),
        }),
        WireMessage::Abort { code, at } => json!({
            "type": "abort",
            "code": code,
            "t": at.millis(),
        }),
    };
    // serde_json maps are BTree-backed: keys come out sorted.
    let _ = params;
    serde_json::to_vec(&value).expect("json encoding cannot fail")
}

/// Parses and validates canonical JSON bytes.
pub fn decode_wire(bytes: &[u8], params: &CurveParams) -> Result<WireMessage, WireError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| WireError::MalformedWire(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| WireError::MalformedWire("not an object".into()))?;
    let tag = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| WireError::MalformedWire("missing type tag".into()))?;
    let kind =
        MsgKind::from_tag(tag).ok_or_else(|| WireError::UnknownMessageTag(tag.to_string()))?;

    let expected_keys: &[&str] = match kind {
        MsgKind::Msg1 => &["m1", "t", "temp0", "type"],
        MsgKind::Msg2 => &["t", "temp1", "type"],
        MsgKind::Msg3 => &["m3", "t", "type"],
        MsgKind::Msg4 => &["m5", "pub_ui", "t", "type"],
        MsgKind::Msg5 => &["m6", "m7", "t", "type"],
        MsgKind::Msg6 => &["m13", "t", "type"],
        MsgKind::Msg7 => &["m14", "t", "type"],
        MsgKind::Abort => &["code", "t", "type"],
    };
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    if keys != expected_keys {
        return Err(WireError::MalformedWire(format!(
            "fields {keys:?} do not match {tag} schema"
        )));
    }

    let t = timestamp_field(obj)?;
    Ok(match kind {
        MsgKind::Msg1 => WireMessage::Msg1 {
            m1: ct_field(obj, "m1", params)?,
            temp0: digest_field(obj, "temp0")?,
            t1: t,
        },
        MsgKind::Msg2 => WireMessage::Msg2 { temp1: digest_field(obj, "temp1")?, t2: t },
        MsgKind::Msg3 => WireMessage::Msg3 { m3: ct_field(obj, "m3", params)?, t3: t },
        MsgKind::Msg4 => WireMessage::Msg4 {
            m5: ct_field(obj, "m5", params)?,
            pub_ui: point_field(obj, "pub_ui", params)?,
            t4: t,
        },
        MsgKind::Msg5 => WireMessage::Msg5 {
            m6: digest_field(obj, "m6")?,
            m7: digest_field(obj, "m7")?,
            t5: t,
        },
        MsgKind::Msg6 => WireMessage::Msg6 { m13: ct_field(obj, "m13", params)?, t6: t },
        MsgKind::Msg7 => WireMessage::Msg7 { m14: ct_field(obj, "m14", params)?, t6: t },
        MsgKind::Abort => {
            let code = obj
                .get("code")
                .and_then(Value::as_u64)
                .ok_or_else(|| WireError::MalformedWire("abort code".into()))?;
            if code != ABORT_CODE as u64 {
                return Err(WireError::MalformedWire(format!("abort code {code}, expected 0")));
            }
            WireMessage::Abort { code: ABORT_CODE, at: t }
        }
    })
}

fn ct_value(ct: &PayloadCiphertext) -> Value {
    json!({
        "body": hex::encode(&ct.body),
        "eph": hex::encode(&ct.ephemeral),
        "tag": hex::encode(ct.tag),
    })
}

fn timestamp_field(obj: &Map<String, Value>) -> Result<Timestamp, WireError> {
    let t = obj
        .get("t")
        .and_then(Value::as_u64)
        .ok_or_else(|| WireError::MalformedWire("missing timestamp".into()))?;
    u32::try_from(t)
        .map(Timestamp)
        .map_err(|_| WireError::MalformedWire("timestamp exceeds 32 bits".into()))
}

/// Hex string of an exact byte width.
pub fn hex_field(value: &Value, field: &'static str, expected: usize) -> Result<Vec<u8>, WireError> {
    let s = value
        .as_str()
        .ok_or_else(|| WireError::MalformedWire(format!("{field} is not a string")))?;
    let bytes =
        hex::decode(s).map_err(|_| WireError::MalformedWire(format!("{field} is not hex")))?;
    if bytes.len() != expected {
        return Err(WireError::FieldWidthMismatch { field, expected, got: bytes.len() });
    }
    Ok(bytes)
}

fn digest_field(obj: &Map<String, Value>, field: &'static str) -> Result<Digest, WireError> {
    let value = obj
        .get(field)
        .ok_or_else(|| WireError::MalformedWire(format!("missing {field}")))?;
    let bytes = hex_field(value, field, DIGEST_LEN)?;
    Ok(Digest::from_slice(&bytes).expect("length checked"))
}

fn point_field(
    obj: &Map<String, Value>,
    field: &'static str,
    params: &CurveParams,
) -> Result<Vec<u8>, WireError> {
    let value = obj
        .get(field)
        .ok_or_else(|| WireError::MalformedWire(format!("missing {field}")))?;
    let s = value
        .as_str()
        .ok_or_else(|| WireError::MalformedWire(format!("{field} is not a string")))?;
    let bytes =
        hex::decode(s).map_err(|_| WireError::MalformedWire(format!("{field} is not hex")))?;
    let expected = 1 + 2 * params.field_len();
    if bytes.len() != expected && bytes != [0u8] {
        return Err(WireError::FieldWidthMismatch { field, expected, got: bytes.len() });
    }
    Ok(bytes)
}

fn ct_field(
    obj: &Map<String, Value>,
    field: &'static str,
    params: &CurveParams,
) -> Result<PayloadCiphertext, WireError> {
    let inner = obj
        .get(field)
        .and_then(Value::as_object)
        .ok_or_else(|| WireError::MalformedWire(format!("{field} is not an object")))?;
    let mut keys: Vec<&str> = inner.keys().map(String::as_str).collect();
    keys.sort_unstable();
    if keys != ["body", "eph", "tag"] {
        return Err(WireError::MalformedWire(format!("{field} ciphertext schema")));
    }
    let eph_value = &inner["eph"];
    let eph_str = eph_value
        .as_str()
        .ok_or_else(|| WireError::MalformedWire("eph is not a string".into()))?;
    let ephemeral =
        hex::decode(eph_str).map_err(|_| WireError::MalformedWire("eph is not hex".into()))?;
    let expected = 1 + 2 * params.field_len();
    if ephemeral.len() != expected && ephemeral != [0u8] {
        return Err(WireError::FieldWidthMismatch { field: "eph", expected, got: ephemeral.len() });
    }
    let body_str = inner["body"]
        .as_str()
        .ok_or_else(|| WireError::MalformedWire("body is not a string".into()))?;
    let body =
        hex::decode(body_str).map_err(|_| WireError::MalformedWire("body is not hex".into()))?;
    let tag_bytes = hex_field(&inner["tag"], "tag", DIGEST_LEN)?;
    Ok(PayloadCiphertext {
        ephemeral,
        body,
        tag: tag_bytes.try_into().expect("length checked"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{hash, hybrid_encrypt, make_rng, keygen};

    fn sample_messages() -> (std::sync::Arc<CurveParams>, Vec<WireMessage>) {
        let params = CurveParams::tiny23();
        let mut rng = make_rng(Some(51));
        let (_, pk) = keygen(&params, &mut rng);
        let ct = || hybrid_encrypt(&pk, &[b"x".as_slice()], &params, &mut make_rng(Some(52))).unwrap();
        let msgs = vec![
            WireMessage::Msg1 { m1: ct(), temp0: hash(b"t0"), t1: Timestamp(1) },
            WireMessage::Msg2 { temp1: hash(b"t1"), t2: Timestamp(2) },
            WireMessage::Msg3 { m3: ct(), t3: Timestamp(3) },
            WireMessage::Msg4 { m5: ct(), pub_ui: pk.encode(&params), t4: Timestamp(4) },
            WireMessage::Msg5 { m6: hash(b"m6"), m7: hash(b"m7"), t5: Timestamp(5) },
            WireMessage::Msg6 { m13: ct(), t6: Timestamp(6) },
            WireMessage::Msg7 { m14: ct(), t6: Timestamp(6) },
            WireMessage::abort(Timestamp(7)),
        ];
        (params, msgs)
    }

    #[test]
    fn round_trip_all_variants() {
        let (params, msgs) = sample_messages();
        for msg in msgs {
            let bytes = encode_wire(&msg, &params);
            assert_eq!(decode_wire(&bytes, &params).unwrap(), msg);
        }
    }

    #[test]
    fn encoding_is_deterministic_with_sorted_keys() {
        let (params, msgs) = sample_messages();
        for msg in &msgs {
            assert_eq!(encode_wire(msg, &params), encode_wire(msg, &params));
        }
        let text = String::from_utf8(encode_wire(&msgs[1], &params)).unwrap();
        assert_eq!(text, format!("{{\"t\":2,\"temp1\":\"{}\",\"type\":\"msg2\"}}", hash(b"t1").to_hex()));
    }

    #[test]
    fn abort_carries_numeric_code_zero() {
        let (params, _) = sample_messages();
        let bytes = encode_wire(&WireMessage::abort(Timestamp(9)), &params);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text, "{\"code\":0,\"t\":9,\"type\":\"abort\"}");
        assert!(decode_wire(&bytes, &params).is_ok());
        assert!(matches!(
            decode_wire(b"{\"code\":1,\"t\":9,\"type\":\"abort\"}", &params),
            Err(WireError::MalformedWire(_))
        ));
    }

    #[test]
    fn negative_decodes() {
        let (params, msgs) = sample_messages();
        let bytes = encode_wire(&msgs[0], &params);
        assert!(matches!(
            decode_wire(&bytes[..bytes.len() / 2], &params),
            Err(WireError::MalformedWire(_))
        ));
        assert!(matches!(
            decode_wire(b"{\"t\":1,\"type\":\"msg9\"}", &params),
            Err(WireError::UnknownMessageTag(_))
        ));
        // Digest field one byte short.
        let short = format!("{{\"t\":2,\"temp1\":\"{}\",\"type\":\"msg2\"}}", "ab".repeat(31));
        assert!(matches!(
            decode_wire(short.as_bytes(), &params),
            Err(WireError::FieldWidthMismatch { field: "temp1", expected: 32, got: 31 })
        ));
        // Extra field violates the schema.
        let extra = format!(
            "{{\"t\":2,\"temp1\":\"{}\",\"type\":\"msg2\",\"x\":1}}",
            hash(b"t1").to_hex()
        );
        assert!(matches!(
            decode_wire(extra.as_bytes(), &params),
            Err(WireError::MalformedWire(_))
        ));
    }

    #[test]
    fn identity_width_check_rejects_19_bytes() {
        // The shared width checker guards identity-bearing records too.
        let value = Value::String(hex::encode([7u8; 19]));
        assert!(matches!(
            hex_field(&value, "uid", crate::protocol::IDENTITY_LEN),
            Err(WireError::FieldWidthMismatch { field: "uid", expected: 20, got: 19 })
        ));
    }
}
