//! Canonical JSON encoding for protocol artifacts.
//!
//! Every message is a JSON object with sorted keys, field elements as
//! decimal `a+b*u` strings, and two envelope fields: `"osidh_v": 1` and a
//! `"kind"` tag. Decoding here is structural only; the owning types run their
//! own validators on top.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const WIRE_VERSION: u64 = 1;

/// A type with a wire encoding.
pub trait Message: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

fn malformed(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Malformed {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Rebuilds every object with its keys in sorted order.
pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, canonicalize(v)))
                    .collect::<Map<String, Value>>(),
            )
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Canonical JSON text of a message.
pub fn encode<T: Message>(msg: &T) -> String {
    let mut v = serde_json::to_value(msg).expect("wire types serialize infallibly");
    let obj = v.as_object_mut().expect("wire types serialize to objects");
    obj.insert("osidh_v".into(), Value::from(WIRE_VERSION));
    obj.insert("kind".into(), Value::from(T::KIND));
    serde_json::to_string(&canonicalize(v)).expect("values serialize infallibly")
}

/// Parses a message, checking the envelope and the field structure.
pub fn decode<T: Message>(text: &str) -> Result<T> {
    let v: Value = serde_json::from_str(text).map_err(|e| malformed("", e.to_string()))?;
    decode_value(v)
}

pub fn decode_value<T: Message>(v: Value) -> Result<T> {
    let Value::Object(mut obj) = v else {
        return Err(malformed("", "expected a JSON object"));
    };
    match obj.remove("osidh_v") {
        Some(Value::Number(n)) if n.as_u64() == Some(WIRE_VERSION) => {}
        Some(other) => {
            return Err(malformed("/osidh_v", format!("unsupported version {other}")))
        }
        None => return Err(malformed("/osidh_v", "missing version")),
    }
    match obj.remove("kind") {
        Some(Value::String(k)) if k == T::KIND => {}
        Some(other) => {
            return Err(malformed(
                "/kind",
                format!("expected kind {:?}, found {other}", T::KIND),
            ))
        }
        None => return Err(malformed("/kind", "missing kind")),
    }
    serde_path_to_error::deserialize(Value::Object(obj)).map_err(|e| {
        let pointer = json_pointer(e.path());
        malformed(pointer, e.inner().to_string())
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Demo {
        zeta: u32,
        alpha: Vec<u32>,
    }

    impl Message for Demo {
        const KIND: &'static str = "demo";
    }

    #[test]
    fn encoding_is_sorted_and_roundtrips() {
        let d = Demo {
            zeta: 3,
            alpha: vec![1, 2],
        };
        let s = encode(&d);
        assert_eq!(s, r#"{"alpha":[1,2],"kind":"demo","osidh_v":1,"zeta":3}"#);
        assert_eq!(decode::<Demo>(&s).unwrap(), d);
    }

    #[test]
    fn errors_carry_pointers() {
        let bad = r#"{"alpha":[1,"x"],"kind":"demo","osidh_v":1,"zeta":3}"#;
        match decode::<Demo>(bad) {
            Err(Error::Malformed { pointer, .. }) => assert_eq!(pointer, "/alpha/1"),
            other => panic!("{other:?}"),
        }
        let wrong_v = r#"{"alpha":[],"kind":"demo","osidh_v":2,"zeta":3}"#;
        assert!(matches!(
            decode::<Demo>(wrong_v),
            Err(Error::Malformed { pointer, .. }) if pointer == "/osidh_v"
        ));
        let wrong_kind = r#"{"alpha":[],"kind":"other","osidh_v":1,"zeta":3}"#;
        assert!(matches!(
            decode::<Demo>(wrong_kind),
            Err(Error::Malformed { pointer, .. }) if pointer == "/kind"
        ));
        assert!(matches!(decode::<Demo>("[1"), Err(Error::Malformed { .. })));
    }
}
