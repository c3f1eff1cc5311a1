//! Extended reals `ℝ ∪ {−∞, +∞}`, the codomain of Orlicz functions.
//!
//! Two conventions matter and are fixed here: in sums `−∞ + ∞ = +∞`, and in
//! products `0 · (+∞) = +∞`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);
    pub const ONE: ExtendedReal = ExtendedReal::Finite(1.0);

    /// Maps `±inf` floats to the infinite variants. NaN is rejected.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an extended real");
        if x == f64::INFINITY {
            ExtendedReal::PosInfinity
        } else if x == f64::NEG_INFINITY {
            ExtendedReal::NegInfinity
        } else {
            ExtendedReal::Finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            ExtendedReal::Finite(x) => x,
            ExtendedReal::PosInfinity => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Scaling by a nonnegative weight with `0 · (±∞)` resolved to `+∞`.
    pub fn scale(self, w: f64) -> Self {
        debug_assert!(w >= 0.0);
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(w * x),
            ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
            ExtendedReal::NegInfinity if w == 0.0 => ExtendedReal::PosInfinity,
            ExtendedReal::NegInfinity => ExtendedReal::NegInfinity,
        }
    }

    /// Geometric-convexity product `a^λ b^(1−λ)` of nonnegative extended
    /// values, with `0 · (+∞) = +∞`.
    pub fn geometric_combination(a: Self, b: Self, lambda: f64) -> Self {
        use ExtendedReal::*;
        match (a, b) {
            (PosInfinity, _) | (_, PosInfinity) => PosInfinity,
            (Finite(x), Finite(y)) => Finite(x.powf(lambda) * y.powf(1.0 - lambda)),
            _ => panic!("geometric combination of negative infinity"),
        }
    }

    /// Arithmetic combination `λa + (1−λ)b` with `−∞ + ∞ = +∞`.
    pub fn arithmetic_combination(a: Self, b: Self, lambda: f64) -> Self {
        a.scale(lambda) + b.scale(1.0 - lambda)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        use ExtendedReal::*;
        match (self, rhs) {
            (PosInfinity, _) | (_, PosInfinity) => PosInfinity,
            (NegInfinity, _) | (_, NegInfinity) => NegInfinity,
            (Finite(a), Finite(b)) => Finite(a + b),
        }
    }
}

impl std::iter::Sum for ExtendedReal {
    fn sum<I: Iterator<Item = ExtendedReal>>(iter: I) -> Self {
        iter.fold(ExtendedReal::ZERO, |acc, x| acc + x)
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        ExtendedReal::from_f64(x)
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_f64().total_cmp(&other.to_f64())
    }
}

impl PartialEq<f64> for ExtendedReal {
    fn eq(&self, other: &f64) -> bool {
        self.to_f64() == *other
    }
}

impl PartialOrd<f64> for ExtendedReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.to_f64().partial_cmp(other)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => write!(f, "-inf"),
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInfinity => write!(f, "inf"),
        }
    }
}

// JSON has no infinities: finite values are numbers, the others strings.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => serializer.serialize_f64(*x),
            ExtendedReal::PosInfinity => serializer.serialize_str("inf"),
            ExtendedReal::NegInfinity => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => Ok(ExtendedReal::Finite(x)),
            Repr::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(ExtendedReal::PosInfinity),
                "-inf" => Ok(ExtendedReal::NegInfinity),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::ExtendedReal::*;
    use super::*;

    #[test]
    fn opposite_infinities_sum_to_plus_infinity() {
        assert_eq!(NegInfinity + PosInfinity, PosInfinity);
        assert_eq!(PosInfinity + NegInfinity, PosInfinity);
        assert_eq!(NegInfinity + Finite(3.0), NegInfinity);
    }

    #[test]
    fn zero_times_infinity_is_plus_infinity() {
        assert_eq!(NegInfinity.scale(0.0), PosInfinity);
        assert_eq!(PosInfinity.scale(0.0), PosInfinity);
        assert_eq!(ExtendedReal::geometric_combination(Finite(0.0), PosInfinity, 0.5), PosInfinity);
        assert_eq!(ExtendedReal::geometric_combination(Finite(4.0), Finite(1.0), 0.5), Finite(2.0));
    }

    #[test]
    fn ordering_is_total() {
        let mut v = vec![Finite(1.0), PosInfinity, NegInfinity, Finite(-2.0)];
        v.sort();
        assert_eq!(v, vec![NegInfinity, Finite(-2.0), Finite(1.0), PosInfinity]);
        assert!(Finite(1.0) <= 1.0);
    }
}
