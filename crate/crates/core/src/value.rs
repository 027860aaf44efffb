//! Attribute values: exact scaled decimals and interned categorical labels.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CspError;

/// Largest number of fractional digits a [`Decimal`] may carry.
pub const MAX_SCALE: u32 = 9;

/// An exact decimal number stored as `mantissa * 10^-scale`.
///
/// Values that differ only by trailing zeros (`2.2` and `2.20`) are equal and
/// hash identically; the scale only affects how the value is printed.
#[derive(Clone, Copy, Debug)]
pub struct Decimal {
    mantissa: i64,
    scale: u32,
}

impl Decimal {
    pub fn new(mantissa: i64, scale: u32) -> Self {
        assert!(scale <= MAX_SCALE, "decimal scale {scale} exceeds {MAX_SCALE}");
        Decimal { mantissa, scale }
    }

    pub fn from_int(value: i64) -> Self {
        Decimal::new(value, 0)
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Number of fractional digits actually needed to print the value.
    pub fn significant_scale(&self) -> u32 {
        self.normalized().scale
    }

    /// Re-expresses the value at `scale`, failing if digits would be lost.
    pub fn rescale(&self, scale: u32) -> Option<Decimal> {
        if scale > MAX_SCALE {
            return None;
        }
        if scale >= self.scale {
            let factor = 10i64.checked_pow(scale - self.scale)?;
            let mantissa = self.mantissa.checked_mul(factor)?;
            Some(Decimal { mantissa, scale })
        } else {
            let factor = 10i64.pow(self.scale - scale);
            if self.mantissa % factor != 0 {
                return None;
            }
            Some(Decimal {
                mantissa: self.mantissa / factor,
                scale,
            })
        }
    }

    fn normalized(&self) -> Decimal {
        let mut d = *self;
        while d.scale > 0 && d.mantissa % 10 == 0 {
            d.mantissa /= 10;
            d.scale -= 1;
        }
        d
    }

    fn widened(&self, scale: u32) -> i128 {
        self.mantissa as i128 * 10i128.pow(scale - self.scale)
    }

    /// Shortest rendering without trailing fractional zeros (`10.0` -> `10`).
    pub fn to_plain_string(&self) -> String {
        self.normalized().to_string()
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Decimal {}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.scale == other.scale {
            return self.mantissa.cmp(&other.mantissa);
        }
        let scale = self.scale.max(other.scale);
        self.widened(scale).cmp(&other.widened(scale))
    }
}

impl Hash for Decimal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let n = self.normalized();
        n.mantissa.hash(state);
        n.scale.hash(state);
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        let factor = 10u64.pow(self.scale);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / factor,
            abs % factor,
            width = self.scale as usize
        )
    }
}

impl FromStr for Decimal {
    type Err = CspError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CspError::InvalidNumber(s.to_string());
        let text = s.trim();
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = frac_part.len() as u32;
        if scale > MAX_SCALE {
            return Err(bad());
        }
        let joined = format!("{int_part}{frac_part}");
        let magnitude: i64 = if joined.is_empty() {
            0
        } else {
            joined.parse().map_err(|_| bad())?
        };
        let mantissa = if negative { -magnitude } else { magnitude };
        Ok(Decimal { mantissa, scale })
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Kind of an attribute: ordered numbers or unordered labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Numeric,
    Categorical,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Numeric => f.write_str("numeric"),
            ValueKind::Categorical => f.write_str("categorical"),
        }
    }
}

/// A single domain element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttributeValue {
    Numeric(Decimal),
    Categorical(Arc<str>),
}

impl AttributeValue {
    pub fn num(text: &str) -> Result<Self, CspError> {
        Ok(AttributeValue::Numeric(text.parse()?))
    }

    pub fn cat(text: &str) -> Self {
        AttributeValue::Categorical(Arc::from(text))
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            AttributeValue::Numeric(_) => ValueKind::Numeric,
            AttributeValue::Categorical(_) => ValueKind::Categorical,
        }
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            AttributeValue::Numeric(d) => Some(*d),
            AttributeValue::Categorical(_) => None,
        }
    }

    /// Human-facing rendering: numbers lose trailing zeros.
    pub fn to_plain_string(&self) -> String {
        match self {
            AttributeValue::Numeric(d) => d.to_plain_string(),
            AttributeValue::Categorical(s) => s.to_string(),
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Numeric(d) => d.fmt(f),
            AttributeValue::Categorical(s) => f.write_str(s),
        }
    }
}

/// Domain order: numbers ascending, then labels lexicographically.
impl Ord for AttributeValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (AttributeValue::Numeric(a), AttributeValue::Numeric(b)) => a.cmp(b),
            (AttributeValue::Categorical(a), AttributeValue::Categorical(b)) => a.cmp(b),
            (AttributeValue::Numeric(_), AttributeValue::Categorical(_)) => Ordering::Less,
            (AttributeValue::Categorical(_), AttributeValue::Numeric(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for AttributeValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for AttributeValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
