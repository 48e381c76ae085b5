use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// A real number or one of the two infinities, with the arithmetic
/// conventions log 0 = -inf, exp(-inf) = 0, 0 * (+-inf) = 0 and 0^0 = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities to the matching variant. NaN is rejected.
    pub fn from_f64(x: f64) -> ExtReal {
        assert!(!x.is_nan(), "ExtReal cannot hold NaN");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    /// Natural log of a nonnegative number, log 0 = -inf.
    pub fn ln(x: f64) -> ExtReal {
        assert!(x >= 0.0, "log of negative number {x}");
        if x == 0.0 {
            ExtReal::NegInf
        } else {
            ExtReal::from_f64(x.ln())
        }
    }

    pub fn exp(self) -> f64 {
        match self {
            ExtReal::NegInf => 0.0,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::Finite(x) => x.exp(),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Finite value, or the matching IEEE infinity.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::Finite(x) => x,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Multiplication by a real scalar with 0 * (+-inf) = 0.
    pub fn scale(self, s: f64) -> ExtReal {
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(x * s),
            _ if s == 0.0 => ExtReal::ZERO,
            ExtReal::PosInf if s > 0.0 => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf if s > 0.0 => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        }
    }

    pub fn mul(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(x), o) => o.scale(x),
            (s, ExtReal::Finite(y)) => s.scale(y),
            (a, b) if a == b => ExtReal::PosInf,
            _ => ExtReal::NegInf,
        }
    }

    /// Sum; `None` for the undefined +inf + -inf.
    pub fn checked_add(self, other: ExtReal) -> Option<ExtReal> {
        match (self, other) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => Some(ExtReal::from_f64(x + y)),
            (ExtReal::PosInf, ExtReal::NegInf) | (ExtReal::NegInf, ExtReal::PosInf) => None,
            (ExtReal::Finite(_), inf) | (inf, _) => Some(inf),
        }
    }

    pub fn add_f64(self, y: f64) -> ExtReal {
        self.checked_add(ExtReal::from_f64(y))
            .expect("finite addend cannot produce an undefined sum")
    }

    pub fn neg(self) -> ExtReal {
        self.scale(-1.0)
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// x^p with 0^0 = 1 and 0^p = 0 for p > 0.
pub fn pow0(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        if p == 0.0 {
            1.0
        } else if p > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        x.powf(p)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::PosInf => s.serialize_str("+inf"),
            ExtReal::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtReal::Finite(x)),
            Raw::Text(t) => match t.as_str() {
                "+inf" | "inf" => Ok(ExtReal::PosInf),
                "-inf" => Ok(ExtReal::NegInf),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}
