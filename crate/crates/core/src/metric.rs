//! Distance functions and the payload types they operate on.
//!
//! Every index structure in this crate relies only on the metric axioms:
//! non-negativity, identity, symmetry and the triangle inequality. Vector
//! payloads use [`Metric::L2`] or [`Metric::L1`], byte strings use
//! [`Metric::Edit`] (unit-cost Levenshtein).

use std::fmt;

use crate::error::{Error, Result};

/// A data object. Vectors are compared bitwise, strings bytewise.
#[derive(Clone, Debug)]
pub enum Payload {
    Vector(Vec<f64>),
    Text(Vec<u8>),
}

impl Payload {
    pub fn text(s: &str) -> Self {
        Payload::Text(s.as_bytes().to_vec())
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Payload::Vector(v) => Some(v),
            Payload::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&[u8]> {
        match self {
            Payload::Text(t) => Some(t),
            Payload::Vector(_) => None,
        }
    }

    /// Vector length, or byte length for strings.
    pub fn len(&self) -> usize {
        match self {
            Payload::Vector(v) => v.len(),
            Payload::Text(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PartialEq for Payload {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Payload::Vector(a), Payload::Vector(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Payload::Text(a), Payload::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Payload {}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Vector(v) => {
                write!(f, "[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Payload::Text(t) => write!(f, "{}", String::from_utf8_lossy(t)),
        }
    }
}

/// Distance function tag. The numeric value is the on-disk metric tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    L2 = 0,
    L1 = 1,
    Edit = 2,
}

impl Metric {
    pub fn tag(self) -> u32 {
        self as u32
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(Metric::L2),
            1 => Ok(Metric::L1),
            2 => Ok(Metric::Edit),
            other => Err(Error::format(format!("unknown metric tag {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::L1 => "l1",
            Metric::Edit => "edit",
        }
    }

    pub fn is_vector(self) -> bool {
        !matches!(self, Metric::Edit)
    }

    /// Checks that `p` has the shape this metric expects. `dim` is the
    /// vector length for vector metrics and is ignored for strings.
    pub fn validate(self, p: &Payload, dim: usize) -> Result<()> {
        match (self, p) {
            (Metric::L2 | Metric::L1, Payload::Vector(v)) => {
                if v.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: v.len() });
                }
                Ok(())
            }
            (Metric::Edit, Payload::Text(t)) => {
                if t.is_empty() {
                    return Err(Error::param("string payloads must be non-empty"));
                }
                Ok(())
            }
            _ => Err(Error::PayloadKind(self.name())),
        }
    }

    /// Distance between two payloads already validated for this metric.
    ///
    /// Mixed payload kinds are a caller bug and panic.
    #[inline]
    pub fn distance(self, a: &Payload, b: &Payload) -> f64 {
        match (self, a, b) {
            (Metric::L2, Payload::Vector(x), Payload::Vector(y)) => l2(x, y),
            (Metric::L1, Payload::Vector(x), Payload::Vector(y)) => l1(x, y),
            (Metric::Edit, Payload::Text(x), Payload::Text(y)) => levenshtein(x, y) as f64,
            _ => panic!("payload kind does not match metric {}", self.name()),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "l1" => Ok(Metric::L1),
            "edit" => Ok(Metric::Edit),
            other => Err(Error::param(format!("unknown metric {other:?}"))),
        }
    }
}

/// Euclidean distance.
pub fn l2_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(l2(a, b))
}

/// Manhattan distance.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(l1(a, b))
}

/// Unit-cost Levenshtein distance over bytes.
pub fn edit_distance(s: &[u8], t: &[u8]) -> usize {
    levenshtein(s, t)
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), got: b.len() });
    }
    Ok(())
}

#[inline]
fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn levenshtein(s: &[u8], t: &[u8]) -> usize {
    if s.is_empty() {
        return t.len();
    }
    if t.is_empty() {
        return s.len();
    }
    // single-row DP over the shorter string
    let (long, short) = if s.len() >= t.len() { (s, t) } else { (t, s) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let above = row[j + 1];
            let cost = usize::from(lc != sc);
            row[j + 1] = (diag + cost).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[short.len()]
}
