//! Exact rational arithmetic helpers.
//!
//! All equilibrium verdicts in this crate are computed over arbitrary-precision
//! rationals; floating point appears only inside Monte Carlo estimates. On the
//! wire, rationals are always `"p/q"` strings (or `"p"` for integers).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for probabilities, utilities, and gains.
pub type Rat = BigRational;

/// Builds `num/den` as an exact rational.
///
/// Panics if `den == 0`; use [`parse_rat`] for untrusted input.
pub fn rat(num: i64, den: i64) -> Rat {
    assert!(den != 0, "rational denominator must be nonzero");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer-valued rational.
pub fn rat_int(v: i64) -> Rat {
    BigRational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"` or `"p"` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num_s, den_s) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num_s
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational {s:?}")))?;
    let den: BigInt = den_s
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational {s:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Formats a rational as `"p/q"` (or `"p"` when the denominator is 1).
pub fn format_rat(r: &Rat) -> String {
    r.to_string()
}

/// Lossy conversion for Monte Carlo estimates and report summaries.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Out-of-range rationals do not occur in this crate's games, but avoid
        // a panic on adversarial inputs.
        if r.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// Sign of `a - b` as a rational in `{-1, 0, 1}`.
pub fn sign_of_diff(a: i64, b: i64) -> Rat {
    match a.cmp(&b) {
        std::cmp::Ordering::Greater => Rat::one(),
        std::cmp::Ordering::Equal => Rat::zero(),
        std::cmp::Ordering::Less => -Rat::one(),
    }
}

/// Serde adapter serializing a [`Rat`] as a `"p/q"` string.
pub mod pq {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(de)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rat>` as a list of `"p/q"` strings.
pub mod pq_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(format_rat))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Vec<Rat>, D::Error> {
        let strings = Vec::<String>::deserialize(de)?;
        strings
            .iter()
            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["1/2", "-3/7", "0", "42", "9/10"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
        }
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_rat("0.9.1").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("a/b").is_err());
        assert!(parse_rat("").is_err());
    }

    #[test]
    fn sign_values() {
        assert_eq!(sign_of_diff(2, 0), rat_int(1));
        assert_eq!(sign_of_diff(1, 1), rat_int(0));
        assert_eq!(sign_of_diff(0, 3), rat_int(-1));
    }
}
