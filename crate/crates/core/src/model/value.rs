use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Sort of a process variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Bool,
    Int,
    Rat,
    String,
}

impl Sort {
    pub fn is_numeric(self) -> bool {
        matches!(self, Sort::Int | Sort::Rat)
    }

    /// Value used for the initial assignment when a model does not provide one.
    pub fn default_value(self) -> Value {
        match self {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Rat => Value::Rat(BigRational::zero()),
            Sort::String => Value::Str(Arc::from("")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sort::Bool => "bool",
            Sort::Int => "int",
            Sort::Rat => "rat",
            Sort::String => "string",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sort {
    type Err = String;

    /// Accepts the short sort names as well as the Java class names used by
    /// ProM-style PNML files.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "bool" | "boolean" | "java.lang.Boolean" => Ok(Sort::Bool),
            "int" | "integer" | "long" | "java.lang.Integer" | "java.lang.Long" => Ok(Sort::Int),
            "rat" | "rational" | "real" | "float" | "double" | "java.lang.Double"
            | "java.lang.Float" => Ok(Sort::Rat),
            "string" | "java.lang.String" => Ok(Sort::String),
            other => Err(format!("unknown sort `{other}`")),
        }
    }
}

/// A concrete data value. Rationals are exact and always kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Rat(BigRational),
    Str(Arc<str>),
}

impl Value {
    pub fn int(v: i64) -> Self {
        Value::Int(BigInt::from(v))
    }

    pub fn rat(numer: i64, denom: i64) -> Self {
        Value::Rat(BigRational::new(numer.into(), denom.into()))
    }

    pub fn str(s: &str) -> Self {
        Value::Str(Arc::from(s))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Rat(_) => Sort::Rat,
            Value::Str(_) => Sort::String,
        }
    }

    /// Numeric view of the value, `None` for booleans and strings.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(i) => Some(BigRational::from_integer(i.clone())),
            Value::Rat(r) => Some(r.clone()),
            _ => None,
        }
    }

    /// Converts the value to `sort` when this is lossless (int to rat, and
    /// integral rat to int).
    pub fn coerce(&self, sort: Sort) -> Option<Value> {
        match (self, sort) {
            (v, s) if v.sort() == s => Some(v.clone()),
            (Value::Int(i), Sort::Rat) => Some(Value::Rat(BigRational::from_integer(i.clone()))),
            (Value::Rat(r), Sort::Int) if r.is_integer() => Some(Value::Int(r.to_integer())),
            _ => None,
        }
    }

    /// Semantic equality: numeric values compare by magnitude regardless of tag.
    pub fn sem_eq(&self, other: &Value) -> bool {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => a == b,
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Value::Str(s) => write!(f, "\"{}\"", s.replace('"', "\\\"")),
        }
    }
}

/// Parses a decimal literal such as `-12`, `0.1` or `1.5E-3` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let t = text.trim();
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().ok()?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(numer);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    if negative {
        r = -r;
    }
    Some(r)
}

/// Renders a rational the way it would be written in a guard: integral values
/// without a denominator, others as an exact decimal when one exists and as a
/// quotient otherwise.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut denom = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut digits = 0usize;
    while (&denom % &two).is_zero() || (&denom % &five).is_zero() {
        if (&denom % &two).is_zero() {
            denom /= &two;
        } else {
            denom /= &five;
        }
        digits += 1;
    }
    if !denom.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let scaled = r * BigRational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let abs = n.abs().to_string();
    let padded = format!("{abs:0>width$}", width = digits + 1);
    let (i, f) = padded.split_at(padded.len() - digits);
    format!("{sign}{i}.{f}")
}
