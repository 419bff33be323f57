//! Scalar abstraction shared by every exact and approximate computation.
//!
//! Geometry, integrands, distributions and order tests are written once
//! against [`Scalar`]. Instantiated with [`BigRational`] every comparison is
//! exact; instantiated with `f64`/`f32` comparisons carry a small absolute
//! tolerance.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// An ordered field usable by the exact engine and the order tests.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Absolute slack used by [`Scalar::le_tol`] and [`Scalar::eq_tol`].
    fn tolerance() -> Self {
        Self::zero()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i64(num).expect("integer conversion") / Self::from_i64(den).expect("integer conversion")
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer conversion")
    }

    /// Parses `"p/q"`, an integer, or a finite decimal such as `"0.25"`.
    fn parse(text: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self <= other` up to [`Scalar::tolerance`].
    fn le_tol(&self, other: &Self) -> bool {
        *self <= other.clone() + Self::tolerance()
    }

    /// Equality up to [`Scalar::tolerance`].
    fn eq_tol(&self, other: &Self) -> bool {
        self.le_tol(other) && other.le_tol(self)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn powu(&self, exp: usize) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        if let Some((num, den)) = text.split_once('/') {
            let num: BigInt = num.trim().parse().ok()?;
            let den: BigInt = den.trim().parse().ok()?;
            if den.is_zero() {
                return None;
            }
            return Some(BigRational::new(num, den));
        }
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        let negative = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut value = BigRational::from_integer(digits.parse::<BigInt>().ok()?);
        let scale = exponent - frac_part.len() as i32;
        let ten = BigRational::from_integer(BigInt::from(10));
        if scale >= 0 {
            value *= ten.powu(scale as usize);
        } else {
            value /= ten.powu((-scale) as usize);
        }
        Some(if negative { -value } else { value })
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-12
    }

    fn parse(text: &str) -> Option<Self> {
        match text.split_once('/') {
            Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
            None => text.trim().parse().ok(),
        }
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-5
    }

    fn parse(text: &str) -> Option<Self> {
        match text.split_once('/') {
            Some((n, d)) => Some(n.trim().parse::<f32>().ok()? / d.trim().parse::<f32>().ok()?),
            None => text.trim().parse().ok(),
        }
    }
}

/// Shorthand for building a [`BigRational`].
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::from_ratio(num, den)
}

/// Serde bridge: scalars travel as strings (`"3/4"`) or plain JSON numbers.
pub mod serde_scalar {
    use super::Scalar;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Number(serde_json::Number),
    }

    pub fn serialize<S: Scalar, Ser: Serializer>(value: &S, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        ser.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<S, D::Error> {
        let text = match Repr::deserialize(de)? {
            Repr::Text(s) => s,
            Repr::Number(n) => n.to_string(),
        };
        S::parse(&text).ok_or_else(|| D::Error::custom(format!("invalid number `{text}`")))
    }

    pub mod vec {
        use super::super::Scalar;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        #[serde(transparent)]
        struct Wrap<S: Scalar>(#[serde(with = "super")] S);

        pub fn serialize<S: Scalar, Ser: Serializer>(values: &[S], ser: Ser) -> Result<Ser::Ok, Ser::Error> {
            let wrapped: Vec<Wrap<S>> = values.iter().cloned().map(Wrap).collect();
            wrapped.serialize(ser)
        }

        pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<Vec<S>, D::Error> {
            let wrapped: Vec<Wrap<S>> = Vec::deserialize(de)?;
            Ok(wrapped.into_iter().map(|w| w.0).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(BigRational::parse("3/4"), Some(ratio(3, 4)));
        assert_eq!(BigRational::parse("0.25"), Some(ratio(1, 4)));
        assert_eq!(BigRational::parse("-1.5"), Some(ratio(-3, 2)));
        assert_eq!(BigRational::parse("2"), Some(ratio(2, 1)));
        assert_eq!(BigRational::parse("1e-2"), Some(ratio(1, 100)));
        assert_eq!(BigRational::parse("1/0"), None);
        assert_eq!(BigRational::parse("abc"), None);
        assert_eq!(f64::parse("1/4"), Some(0.25));
    }

    #[test]
    fn integer_powers() {
        assert_eq!(ratio(1, 2).powu(3), ratio(1, 8));
        assert_eq!(ratio(5, 7).powu(0), ratio(1, 1));
        assert_eq!(3.0f64.powu(4), 81.0);
    }

    #[test]
    fn float_comparisons_are_tolerant() {
        assert!((0.1f64 + 0.2).eq_tol(&0.3));
        assert!(!ratio(1, 3).eq_tol(&ratio(333_333, 1_000_000)));
    }
}
