//! Serializers that write floats with 17 significant digits so bundles
//! round-trip exactly and never fall below 15 digits.

use serde::ser::{Error as _, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

fn raw(v: f64) -> Result<Box<RawValue>, serde_json::Error> {
    if !v.is_finite() {
        return Err(serde_json::Error::custom(format!("cannot serialize non-finite value {v}")));
    }
    RawValue::from_string(format!("{v:.16e}"))
}

pub fn scalar<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let r = raw(*v).map_err(S::Error::custom)?;
    r.serialize(s)
}

pub fn vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&raw(x).map_err(S::Error::custom)?)?;
    }
    seq.end()
}
