//! Finite index sets. Pair indices a = (a0, a1) are products of scalar domains.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexDomain {
    /// Z_N with arithmetic mod N; values are stored as 0..N-1.
    Cyclic {
        n: u32,
    },
    /// The integer window lo..=hi.
    Window {
        lo: i64,
        hi: i64,
    },
    /// 0..cutoff-1.
    NonNeg {
        cutoff: u32,
    },
    Product {
        factors: Vec<IndexDomain>,
    },
}

/// Result of adding two scalar indices inside a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DomainSum {
    pub value: i64,
    /// The exact sum left a truncated window. Never set for cyclic domains.
    pub escaped: bool,
}

impl IndexDomain {
    pub fn cyclic(n: u32) -> Self {
        IndexDomain::Cyclic { n }
    }

    pub fn window(lo: i64, hi: i64) -> Self {
        IndexDomain::Window { lo, hi }
    }

    pub fn nonneg(cutoff: u32) -> Self {
        IndexDomain::NonNeg { cutoff }
    }

    pub fn pair(d: IndexDomain) -> Self {
        IndexDomain::Product { factors: vec![d.clone(), d] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IndexDomain::Cyclic { n } if *n == 0 => Err(Error::InvalidInput("Z_0 is empty".into())),
            IndexDomain::Window { lo, hi } if lo > hi => Err(Error::InvalidInput(format!("empty window {lo}..={hi}"))),
            IndexDomain::NonNeg { cutoff } if *cutoff == 0 => Err(Error::InvalidInput("cutoff must be positive".into())),
            IndexDomain::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidInput("empty product domain".into()));
                }
                factors.iter().try_for_each(|f| {
                    if matches!(f, IndexDomain::Product { .. }) {
                        Err(Error::InvalidInput("nested product domains".into()))
                    } else {
                        f.validate()
                    }
                })
            }
            _ => Ok(()),
        }
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, IndexDomain::Product { .. })
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(self, IndexDomain::Cyclic { .. })
    }

    /// Scalar components: the factors of a product, or the domain itself.
    pub fn components(&self) -> Vec<&IndexDomain> {
        match self {
            IndexDomain::Product { factors } => factors.iter().collect(),
            d => vec![d],
        }
    }

    pub fn cardinality(&self) -> usize {
        match self {
            IndexDomain::Cyclic { n } => *n as usize,
            IndexDomain::Window { lo, hi } => (hi - lo + 1).max(0) as usize,
            IndexDomain::NonNeg { cutoff } => *cutoff as usize,
            IndexDomain::Product { factors } => factors.iter().map(|f| f.cardinality()).product(),
        }
    }

    /// Smallest stored value of a scalar domain.
    pub fn lo(&self) -> i64 {
        match self {
            IndexDomain::Window { lo, .. } => *lo,
            _ => 0,
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo() + self.cardinality() as i64 - 1
    }

    /// Position of a scalar value; cyclic domains reduce mod N.
    pub fn position(&self, v: i64) -> Option<usize> {
        match self {
            IndexDomain::Cyclic { n } => Some(v.rem_euclid(*n as i64) as usize),
            IndexDomain::Window { lo, hi } => (v >= *lo && v <= *hi).then(|| (v - lo) as usize),
            IndexDomain::NonNeg { cutoff } => (v >= 0 && v < *cutoff as i64).then_some(v as usize),
            IndexDomain::Product { .. } => None,
        }
    }

    pub fn value_at(&self, pos: usize) -> i64 {
        self.lo() + pos as i64
    }

    pub fn contains(&self, v: i64) -> bool {
        self.position(v).is_some()
    }

    pub fn values(&self) -> Vec<i64> {
        (0..self.cardinality()).map(|p| self.value_at(p)).collect()
    }

    pub fn add(&self, a: i64, b: i64) -> DomainSum {
        match self {
            IndexDomain::Cyclic { n } => DomainSum { value: (a + b).rem_euclid(*n as i64), escaped: false },
            _ => DomainSum { value: a + b, escaped: !self.contains(a + b) },
        }
    }

    /// Row-major position of a tuple in a product domain (or of a scalar in a scalar domain).
    pub fn flatten(&self, tuple: &[i64]) -> Option<usize> {
        let comps = self.components();
        if comps.len() != tuple.len() {
            return None;
        }
        let mut pos = 0usize;
        for (d, &v) in comps.iter().zip(tuple) {
            pos = pos * d.cardinality() + d.position(v)?;
        }
        Some(pos)
    }

    pub fn unflatten(&self, mut pos: usize) -> Vec<i64> {
        let comps = self.components();
        let mut out = vec![0; comps.len()];
        for (i, d) in comps.iter().enumerate().rev() {
            let c = d.cardinality();
            out[i] = d.value_at(pos % c);
            pos /= c;
        }
        out
    }

    pub fn label(&self) -> String {
        match self {
            IndexDomain::Cyclic { n } => format!("Z{n}"),
            IndexDomain::Window { lo, hi } => format!("[{lo},{hi}]"),
            IndexDomain::NonNeg { cutoff } => format!("N<{cutoff}"),
            IndexDomain::Product { factors } => factors.iter().map(|f| f.label()).collect::<Vec<_>>().join("x"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_wraps() {
        let d = IndexDomain::cyclic(3);
        assert_eq!(d.add(2, 2), DomainSum { value: 1, escaped: false });
        assert_eq!(d.position(-1), Some(2));
    }

    #[test]
    fn window_flags_escape() {
        let d = IndexDomain::window(-2, 2);
        assert!(d.add(2, 1).escaped);
        assert!(!d.add(-2, 1).escaped);
        assert_eq!(d.cardinality(), 5);
    }

    #[test]
    fn product_roundtrip() {
        let d = IndexDomain::pair(IndexDomain::nonneg(4));
        assert_eq!(d.cardinality(), 16);
        for p in 0..16 {
            assert_eq!(d.flatten(&d.unflatten(p)), Some(p));
        }
        assert_eq!(d.flatten(&[1, 2]), Some(6));
    }

    #[test]
    fn validation() {
        assert!(IndexDomain::window(3, 1).validate().is_err());
        assert!(IndexDomain::cyclic(0).validate().is_err());
        assert!(IndexDomain::pair(IndexDomain::cyclic(2)).validate().is_ok());
    }
}
