//! Index and site layouts of the equations.
//!
//! Five-leg occurrences are written as leg symbols (a, b, c, d, e) with a
//! barred flag. Symbols not listed as external are summed, separately on
//! each side.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Occurrence = (bool, [&'static str; 5]);

pub const MMM2_EXTERNAL: [&str; 9] = ["a1", "a2", "a3", "a4", "a5", "a6", "c1", "c2", "c3"];

pub const MMM2_LHS: [Occurrence; 3] =
    [(false, ["a1", "a2", "a3", "b1", "b2"]), (false, ["b1", "a4", "a5", "c1", "b3"]), (false, ["b2", "b3", "a6", "c2", "c3"])];

pub const MMM2_RHS: [Occurrence; 3] =
    [(false, ["a3", "a5", "a6", "b2", "b3"]), (false, ["a2", "a4", "b3", "b1", "c3"]), (false, ["a1", "b1", "b2", "c1", "c2"])];

pub const M6_EXTERNAL: [&str; 12] = ["c1", "c2", "i1", "i2", "i3", "i4", "a1", "a2", "k1", "k2", "k3", "k4"];

pub const M6_LHS: [Occurrence; 6] = [
    (true, ["b1", "b2", "b3", "c1", "c2"]),
    (false, ["b1", "i1", "i2", "j1", "j2"]),
    (true, ["a1", "l1", "j3", "j1", "i3"]),
    (false, ["b2", "l1", "i4", "k1", "j4"]),
    (true, ["a2", "k2", "l4", "j2", "j4"]),
    (false, ["b3", "j3", "l4", "k3", "k4"]),
];

pub const M6_RHS: [Occurrence; 6] = [
    (false, ["b1", "b2", "b3", "a1", "a2"]),
    (true, ["b3", "j2", "j4", "i2", "i4"]),
    (false, ["c2", "i3", "j4", "j3", "l4"]),
    (true, ["b2", "j1", "k4", "i1", "l4"]),
    (false, ["c1", "j1", "j2", "l1", "k2"]),
    (true, ["b1", "k1", "k3", "l1", "j3"]),
];

/// Name of a symbol inside one side: externals keep their name, internals get "@L"/"@R".
pub fn side_symbol(sym: &str, externals: &[&str], side: usize) -> String {
    if externals.contains(&sym) {
        sym.to_string()
    } else {
        format!("{sym}@{}", if side == 0 { "L" } else { "R" })
    }
}

/// One factor of an operator word: a named operator placed on sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedName {
    pub op: String,
    pub sites: Vec<usize>,
}

/// Operator words of both sides of an equation on `total_sites` sites (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationLayout {
    pub equation_id: String,
    pub total_sites: usize,
    pub lhs: Vec<PlacedName>,
    pub rhs: Vec<PlacedName>,
}

fn word(op: &str, sites: &[&[usize]]) -> Vec<PlacedName> {
    sites.iter().map(|s| PlacedName { op: op.to_string(), sites: s.to_vec() }).collect()
}

impl EquationLayout {
    fn reversed(id: &str, total_sites: usize, lhs: Vec<PlacedName>) -> Self {
        let mut rhs = lhs.clone();
        rhs.reverse();
        EquationLayout { equation_id: id.to_string(), total_sites, lhs, rhs }
    }

    /// R_{0123} R_{0456} R_{1478} R_{2579} R_{3689} = reversed product.
    pub fn simplex4() -> Self {
        let s: [&[usize]; 5] = [&[0, 1, 2, 3], &[0, 4, 5, 6], &[1, 4, 7, 8], &[2, 5, 7, 9], &[3, 6, 8, 9]];
        Self::reversed("4s", 10, word("R", &s))
    }

    /// Six factors on 15 sites; every pair of factors shares exactly one site.
    pub fn simplex5() -> Self {
        let s: [&[usize]; 6] = [&[0, 1, 2, 3, 4], &[0, 5, 6, 7, 8], &[1, 5, 9, 10, 11], &[2, 6, 9, 12, 13], &[3, 7, 10, 12, 14], &[4, 8, 11, 13, 14]];
        Self::reversed("5s", 15, word("R", &s))
    }

    /// R_{123} R_{145} R_{246} R_{356} = reversed product, sites shifted to 0..5.
    pub fn tetrahedron() -> Self {
        let s: [&[usize]; 4] = [&[0, 1, 2], &[0, 3, 4], &[1, 3, 5], &[2, 4, 5]];
        Self::reversed("tetrahedron", 6, word("R", &s))
    }

    /// S_{23} S_{13} S_{12} = S_{12} S_{23} on sites 0..2.
    pub fn pentagon() -> Self {
        EquationLayout { equation_id: "pentagon".into(), total_sites: 3, lhs: word("S", &[&[1, 2], &[0, 2], &[0, 1]]), rhs: word("S", &[&[0, 1], &[1, 2]]) }
    }

    /// S̄_{12} S̄_{13} S̄_{23} = S̄_{23} S̄_{12}.
    pub fn pentagon_bar() -> Self {
        EquationLayout {
            equation_id: "pentagon-bar".into(),
            total_sites: 3,
            lhs: word("Sbar", &[&[0, 1], &[0, 2], &[1, 2]]),
            rhs: word("Sbar", &[&[1, 2], &[0, 1]]),
        }
    }

    /// S_{12} S̄_{13} S_{14} S̄_{24} S_{34} = S̄_{24} S_{34} S̄_{14} S_{12} S̄_{13}.
    pub fn ten_term() -> Self {
        let p = |op: &str, s: &[usize]| PlacedName { op: op.into(), sites: s.to_vec() };
        EquationLayout {
            equation_id: "10term".into(),
            total_sites: 4,
            lhs: vec![p("S", &[0, 1]), p("Sbar", &[0, 2]), p("S", &[0, 3]), p("Sbar", &[1, 3]), p("S", &[2, 3])],
            rhs: vec![p("Sbar", &[1, 3]), p("S", &[2, 3]), p("Sbar", &[0, 3]), p("S", &[0, 1]), p("Sbar", &[0, 2])],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for f in self.lhs.iter().chain(&self.rhs) {
            if f.sites.iter().any(|&s| s >= self.total_sites) {
                return Err(Error::InvalidInput(format!("{}: site out of range in {:?}", self.equation_id, f.sites)));
            }
            for (i, s) in f.sites.iter().enumerate() {
                if f.sites[..i].contains(s) {
                    return Err(Error::InvalidInput(format!("{}: repeated site in {:?}", self.equation_id, f.sites)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let l: EquationLayout = serde_json::from_str(s)?;
        l.validate()?;
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shared(a: &[usize], b: &[usize]) -> usize {
        a.iter().filter(|x| b.contains(x)).count()
    }

    #[test]
    fn simplex_layouts_share_one_site_per_pair() {
        for l in [EquationLayout::tetrahedron(), EquationLayout::simplex4(), EquationLayout::simplex5()] {
            l.validate().unwrap();
            for i in 0..l.lhs.len() {
                for j in i + 1..l.lhs.len() {
                    assert_eq!(shared(&l.lhs[i].sites, &l.lhs[j].sites), 1, "{}", l.equation_id);
                }
            }
            // every site is used by exactly two factors
            for s in 0..l.total_sites {
                assert_eq!(l.lhs.iter().filter(|f| f.sites.contains(&s)).count(), 2);
            }
        }
    }

    #[test]
    fn every_internal_symbol_appears_twice() {
        for (side, ext) in
            [(&MMM2_LHS[..], &MMM2_EXTERNAL[..]), (&MMM2_RHS[..], &MMM2_EXTERNAL[..]), (&M6_LHS[..], &M6_EXTERNAL[..]), (&M6_RHS[..], &M6_EXTERNAL[..])]
        {
            let mut count = std::collections::BTreeMap::new();
            for (_, legs) in side {
                for l in legs {
                    *count.entry(*l).or_insert(0) += 1;
                }
            }
            for (sym, n) in count {
                if ext.contains(&sym) {
                    assert_eq!(n, 1, "{sym}");
                } else {
                    assert_eq!(n, 2, "{sym}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let l = EquationLayout::ten_term();
        let s = serde_json::to_string(&l).unwrap();
        assert_eq!(EquationLayout::from_json(&s).unwrap(), l);
        assert!(EquationLayout::from_json(r#"{"equation_id":"x","total_sites":2,"lhs":[{"op":"S","sites":[0,2]}],"rhs":[]}"#).is_err());
    }
}
