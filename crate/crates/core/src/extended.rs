use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number or an explicit infinity.
///
/// Relative entropies are `+∞` when absolute continuity fails and specific
/// entropies can be `−∞`; both are carried as flags, never as float
/// overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Finite value, panicking on an infinity. Test and report helper.
    pub fn expect_finite(self, what: &str) -> f64 {
        self.finite()
            .unwrap_or_else(|| panic!("{what}: expected a finite value, got {self}"))
    }

    /// Adds a finite offset; infinities absorb it.
    pub fn offset(self, by: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v + by),
            other => other,
        }
    }

    /// Divides by a positive count.
    pub fn per(self, n: usize) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v / n as f64),
            other => other,
        }
    }

    /// `self - other`, or `None` when the difference is undefined (`∞ − ∞`).
    pub fn minus(self, other: ExtendedReal) -> Option<ExtendedReal> {
        use ExtendedReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Some(Finite(a - b)),
            (PlusInfinity, PlusInfinity) | (MinusInfinity, MinusInfinity) => None,
            (PlusInfinity, _) | (_, MinusInfinity) => Some(PlusInfinity),
            (MinusInfinity, _) | (_, PlusInfinity) => Some(MinusInfinity),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v:.16e}"),
            ExtendedReal::PlusInfinity => f.write_str("inf"),
            ExtendedReal::MinusInfinity => f.write_str("-inf"),
        }
    }
}

// JSON has no infinities: finite values are numbers, infinities the
// strings "inf" / "-inf".
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => serializer.serialize_f64(*v),
            ExtendedReal::PlusInfinity => serializer.serialize_str("inf"),
            ExtendedReal::MinusInfinity => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(ExtendedReal::Finite(v)),
            Repr::Text(s) if s == "inf" => Ok(ExtendedReal::PlusInfinity),
            Repr::Text(s) if s == "-inf" => Ok(ExtendedReal::MinusInfinity),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number, \"inf\" or \"-inf\", got {s:?}"
            ))),
        }
    }
}

impl std::ops::Neg for ExtendedReal {
    type Output = ExtendedReal;

    fn neg(self) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(-v),
            ExtendedReal::PlusInfinity => ExtendedReal::MinusInfinity,
            ExtendedReal::MinusInfinity => ExtendedReal::PlusInfinity,
        }
    }
}
