//! Exact rational values and their JSON representation.
//!
//! Synaptic weights, firing thresholds, stimulus charges, and crossbar costs
//! are exact rationals so that simulation and metric arithmetic never drift.
//! On the wire a rational is a JSON number when it is exactly representable
//! as an IEEE double (integers, dyadics, and anything that survives the
//! float round-trip), and a `"p/q"` string otherwise.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact conversion from a finite double. Every finite `f64` is a dyadic
/// rational, so this never loses information.
pub fn from_f64(value: f64) -> Option<BigRational> {
    BigRational::from_float(value)
}

pub fn from_i64(value: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn zero() -> BigRational {
    BigRational::zero()
}

/// True when `r` survives a round-trip through `f64` without loss.
fn f64_exact(r: &BigRational) -> Option<f64> {
    let f = r.to_f64()?;
    if !f.is_finite() {
        return None;
    }
    match BigRational::from_float(f) {
        Some(back) if back == *r => Some(f),
        _ => None,
    }
}

/// Shortest faithful text form: integers plain, dyadics via the float
/// round-trip, everything else `p/q`.
pub fn display(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    if let Some(f) = f64_exact(r) {
        let mut buf = ryu_format(f);
        if buf.ends_with(".0") {
            buf.truncate(buf.len() - 2);
        }
        return buf;
    }
    format!("{}/{}", r.numer(), r.denom())
}

fn ryu_format(f: f64) -> String {
    // `{}` on f64 is the shortest representation that round-trips.
    format!("{f}")
}

/// Parse `"p/q"` or a plain integer string.
pub fn parse(text: &str) -> Result<BigRational, String> {
    let make = |s: &str| -> Result<BigInt, String> {
        s.trim()
            .parse::<BigInt>()
            .map_err(|e| format!("bad rational component {s:?}: {e}"))
    };
    match text.split_once('/') {
        Some((num, den)) => {
            let den = make(den)?;
            if den.is_zero() {
                return Err(format!("zero denominator in {text:?}"));
            }
            Ok(BigRational::new(make(num)?, den))
        }
        None => Ok(BigRational::from_integer(make(text)?)),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Int(i64),
    Float(f64),
    Text(String),
}

fn from_repr<E: serde::de::Error>(repr: Repr) -> Result<BigRational, E> {
    match repr {
        Repr::Int(v) => Ok(from_i64(v)),
        Repr::Float(v) => from_f64(v).ok_or_else(|| E::custom("non-finite number")),
        Repr::Text(s) => parse(&s).map_err(E::custom),
    }
}

pub fn serialize_one<S: Serializer>(r: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
    if r.is_integer() {
        if let Some(v) = r.numer().to_i64() {
            return ser.serialize_i64(v);
        }
    }
    if let Some(f) = f64_exact(r) {
        return ser.serialize_f64(f);
    }
    ser.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub fn deserialize_one<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
    from_repr(Repr::deserialize(de)?)
}

/// `#[serde(with = "rational::serde_one")]` for a single rational field.
pub mod serde_one {
    pub use super::deserialize_one as deserialize;
    pub use super::serialize_one as serialize;
}

/// `#[serde(with = "rational::serde_vec")]` for `Vec<BigRational>` fields.
pub mod serde_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], ser: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wrap<'a>(#[serde(with = "super::serde_one")] &'a BigRational);
        ser.collect_seq(v.iter().map(Wrap))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<Repr>::deserialize(de)?;
        raw.into_iter().map(from_repr).collect()
    }
}
