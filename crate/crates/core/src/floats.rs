//! Round-trip-safe serialization for floats that may be non-finite.
//!
//! `serde_json` flattens `inf`, `-inf`, and `nan` to `null`, which a plain
//! `f64` field then refuses to read back. Snapshot state legitimately holds
//! such values — a failed evaluation stores `+inf` outputs, a fresh barrier
//! starts with an unbounded violation budget — so those fields serialize
//! through these adapters: finite values stay numbers, non-finite ones
//! become the strings `"inf"`, `"-inf"`, and `"nan"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Named(String),
}

fn encode(v: f64) -> Repr {
    if v.is_finite() {
        Repr::Number(v)
    } else if v.is_nan() {
        Repr::Named("nan".to_owned())
    } else if v > 0.0 {
        Repr::Named("inf".to_owned())
    } else {
        Repr::Named("-inf".to_owned())
    }
}

fn decode(r: Repr) -> Result<f64, String> {
    match r {
        Repr::Number(v) => Ok(v),
        Repr::Named(s) => match s.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(format!("not a float: {other:?}")),
        },
    }
}

/// Adapter for a single `f64` field (`#[serde(with = "floats::total")]`).
pub(crate) mod total {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        encode(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Repr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Adapter for a `Vec<f64>` field.
pub(crate) mod total_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .copied()
            .map(encode)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| decode(r).map_err(serde::de::Error::custom))
            .collect()
    }
}
