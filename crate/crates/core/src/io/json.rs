//! Canonical JSON: object keys sorted, floats rounded to 9 significant
//! digits and printed in shortest round-trip form, two-space indentation,
//! trailing newline. Writing a parsed canonical document reproduces it
//! byte for byte.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits; `-0.0` becomes `0.0`.
pub fn round_significant(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap();
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn canonicalize(v: &mut Value) -> Result<()> {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap();
            *n = Number::from_f64(round_significant(f))
                .ok_or_else(|| Error::Format(format!("non-finite number {f}")))?;
        }
        Value::Array(items) => items.iter_mut().try_for_each(canonicalize)?,
        Value::Object(map) => map.values_mut().try_for_each(canonicalize)?,
        _ => {}
    }
    Ok(())
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Format(e.to_string()))?;
    canonicalize(&mut v)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
}

/// Parses `text`, checking its top-level `schema_version` before decoding.
pub fn from_versioned_str<T: DeserializeOwned>(text: &str, expected: u32) -> Result<T> {
    let v: Value = serde_json::from_str(text).map_err(parse_error)?;
    let found = v
        .get("schema_version")
        .ok_or_else(|| Error::parse("schema_version", "missing field"))?
        .as_u64()
        .ok_or_else(|| Error::parse("schema_version", "expected an unsigned integer"))?;
    if found != expected as u64 {
        return Err(Error::Version {
            expected,
            found: u32::try_from(found).unwrap_or(u32::MAX),
        });
    }
    serde_json::from_str(text).map_err(parse_error)
}
