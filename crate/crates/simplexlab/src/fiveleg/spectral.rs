//! Spectral parameters: one complex λ per leg component, tied together by the
//! additivity constraints of every Five-leg occurrence in an equation.
//!
//! Labels are the leg symbol followed by the component, so "a0" is the first
//! component of leg a and "j4@L1" the second component of the internal leg j4
//! of a left hand side.

use crate::error::{Error, Result};
use crate::simplex::layout::{side_symbol, Occurrence, M6_EXTERNAL, M6_LHS, M6_RHS, MMM2_EXTERNAL, MMM2_LHS, MMM2_RHS};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde_json::{Map, Value};
use std::collections::{BTreeMap, BTreeSet};

pub fn label(sym: &str, comp: usize) -> String {
    format!("{sym}{comp}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectralAssignment {
    values: BTreeMap<String, C64>,
}

impl SpectralAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, C64)>) -> Self {
        SpectralAssignment { values: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }

    pub fn get(&self, label: &str) -> Option<C64> {
        self.values.get(label).copied()
    }

    pub fn set(&mut self, label: &str, v: C64) {
        self.values.insert(label.to_string(), v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &C64)> {
        self.values.iter()
    }

    /// λ of the ten components of an occurrence with the given leg symbols.
    pub fn occurrence(&self, legs: &[String]) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(2 * legs.len());
        for l in legs {
            for c in 0..2 {
                let key = label(l, c);
                out.push(self.get(&key).ok_or_else(|| Error::Spectral(format!("no value for {key}")))?);
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.values {
            m.insert(k.clone(), serde_json::json!([v.re, v.im]));
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Parse("spectral assignment must be an object".into()))?;
        let mut s = SpectralAssignment::new();
        for (k, x) in obj {
            let pair = x.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Parse(format!("{k}: expected [re, im]")))?;
            let re = pair[0].as_f64().ok_or_else(|| Error::Parse(format!("{k}: bad real part")))?;
            let im = pair[1].as_f64().ok_or_else(|| Error::Parse(format!("{k}: bad imaginary part")))?;
            s.set(k, C64::new(re, im));
        }
        Ok(s)
    }
}

/// Which relations an M6 assignment must satisfy beyond additivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSet {
    Svz,
    SvzUsl,
}

/// A homogeneous linear system over spectral labels.
#[derive(Clone, Debug, Default)]
pub struct SpectralSystem {
    labels: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
}

const PIVOT_EPS: f64 = 1e-12;

impl SpectralSystem {
    pub fn new() -> Self {
        Self::default()
    }

    fn index(&mut self, l: &str) -> usize {
        match self.labels.iter().position(|x| x == l) {
            Some(i) => i,
            None => {
                self.labels.push(l.to_string());
                self.labels.len() - 1
            }
        }
    }

    fn add_row(&mut self, terms: &[(&str, f64)]) {
        let row = terms.iter().map(|(l, c)| (self.index(l), *c)).collect();
        self.rows.push(row);
    }

    /// λ_{a0}+λ_{b0}=λ_{d0}, λ_{b1}+λ_{c1}=λ_{e1}, λ_{a1}=λ_{d1}, λ_{c0}=λ_{e0}.
    pub fn add_occurrence<S: AsRef<str>>(&mut self, legs: &[S]) {
        let l = |i: usize, c: usize| label(legs[i].as_ref(), c);
        let (a0, a1, b0, b1, c0, c1) = (l(0, 0), l(0, 1), l(1, 0), l(1, 1), l(2, 0), l(2, 1));
        let (d0, d1, e0, e1) = (l(3, 0), l(3, 1), l(4, 0), l(4, 1));
        self.add_row(&[(&a0, 1.0), (&b0, 1.0), (&d0, -1.0)]);
        self.add_row(&[(&b1, 1.0), (&c1, 1.0), (&e1, -1.0)]);
        self.add_row(&[(&a1, 1.0), (&d1, -1.0)]);
        self.add_row(&[(&c0, 1.0), (&e0, -1.0)]);
    }

    pub fn add_equal(&mut self, a: &str, b: &str) {
        self.add_row(&[(a, 1.0), (b, -1.0)]);
    }

    /// The system of a single Five-leg with legs a, b, c, d, e.
    pub fn single() -> Self {
        let mut s = Self::new();
        s.add_occurrence(&["a", "b", "c", "d", "e"]);
        s
    }

    /// Both sides of an index identity, internals renamed per side.
    pub fn from_sides(sides: &[&[Occurrence]], externals: &[&str]) -> Self {
        let mut s = Self::new();
        for (k, side) in sides.iter().enumerate() {
            for (_, legs) in side.iter() {
                let names: Vec<String> = legs.iter().map(|l| side_symbol(l, externals, k)).collect();
                s.add_occurrence(&names);
            }
        }
        s
    }

    pub fn mmm2() -> Self {
        Self::from_sides(&[&MMM2_LHS, &MMM2_RHS], &MMM2_EXTERNAL)
    }

    pub fn m6(set: ConstraintSet) -> Self {
        let mut s = Self::from_sides(&[&M6_LHS, &M6_RHS], &M6_EXTERNAL);
        if set == ConstraintSet::SvzUsl {
            s.add_equal("c10", "a10");
            s.add_equal("i31", "k21");
            s.add_equal("j4@L1", "l4@R1");
            s.add_equal("j1@L0", "l1@R0");
        }
        s
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Row-reduces [A | rhs] in place; returns the pivot column of each pivot row.
    fn reduce(a: &mut [Vec<f64>], rhs: &mut [C64], ncols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == a.len() {
                break;
            }
            let best = (r..a.len()).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
            if a[best][c].abs() < PIVOT_EPS {
                continue;
            }
            a.swap(r, best);
            rhs.swap(r, best);
            let p = a[r][c];
            for x in a[r].iter_mut() {
                *x /= p;
            }
            rhs[r] /= p;
            for i in 0..a.len() {
                if i != r && a[i][c] != 0.0 {
                    let f = a[i][c];
                    for k in 0..ncols {
                        a[i][k] -= f * a[r][k];
                    }
                    let t = rhs[r] * f;
                    rhs[i] -= t;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut v = vec![0.0; self.labels.len()];
                for &(i, c) in row {
                    v[i] += c;
                }
                v
            })
            .collect()
    }

    /// Labels whose values can be chosen freely; all others follow.
    pub fn free_labels(&self) -> Vec<String> {
        let mut a = self.dense();
        let mut rhs = vec![C64::new(0.0, 0.0); a.len()];
        let pivots = Self::reduce(&mut a, &mut rhs, self.labels.len());
        (0..self.labels.len()).filter(|c| !pivots.contains(c)).map(|c| self.labels[c].clone()).collect()
    }

    /// Completes an assignment from prescribed values. The prescribed labels
    /// must pin down every label and must not contradict the constraints.
    pub fn assign(&self, given: &BTreeMap<String, C64>) -> Result<SpectralAssignment> {
        let n = self.labels.len();
        let mut a = self.dense();
        let mut rhs = vec![C64::new(0.0, 0.0); a.len()];
        let mut scale: f64 = 1.0;
        for (k, v) in given {
            let c = self.labels.iter().position(|x| x == k).ok_or_else(|| Error::Spectral(format!("unknown label {k}")))?;
            let mut row = vec![0.0; n];
            row[c] = 1.0;
            a.push(row);
            rhs.push(*v);
            scale = scale.max(v.norm());
        }
        let pivots = Self::reduce(&mut a, &mut rhs, n);
        for r in pivots.len()..a.len() {
            if rhs[r].norm() > 1e-10 * scale {
                return Err(Error::Spectral(format!("prescribed values are inconsistent (excess {:.3e})", rhs[r].norm())));
            }
        }
        let missing: Vec<&str> = (0..n).filter(|c| !pivots.contains(c)).map(|c| self.labels[c].as_str()).collect();
        if !missing.is_empty() {
            return Err(Error::Spectral(format!("underdetermined; also prescribe {}", missing.join(", "))));
        }
        let mut out = SpectralAssignment::new();
        for (r, &c) in pivots.iter().enumerate() {
            out.set(&self.labels[c], rhs[r]);
        }
        Ok(out)
    }

    /// Free labels drawn with real parts in [−1, 1] and imaginary parts in [−0.5, 0.5].
    pub fn random<R: Rng>(&self, rng: &mut R) -> SpectralAssignment {
        let free: BTreeMap<String, C64> = self.free_labels().into_iter().map(|l| (l, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)))).collect();
        self.assign(&free).expect("free labels determine the system")
    }

    /// Largest violation of any constraint.
    pub fn residual(&self, s: &SpectralAssignment) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for &(i, c) in row {
                let l = &self.labels[i];
                acc += s.get(l).ok_or_else(|| Error::Spectral(format!("no value for {l}")))? * c;
            }
            worst = worst.max(acc.norm());
        }
        Ok(worst)
    }

    pub fn check(&self, s: &SpectralAssignment, tol: f64) -> Result<()> {
        let r = self.residual(s)?;
        if r > tol {
            return Err(Error::Spectral(format!("constraint violated by {r:.3e}")));
        }
        Ok(())
    }

    pub fn label_set(&self) -> BTreeSet<String> {
        self.labels.iter().cloned().collect()
    }
}

/// Completes an M6 assignment from values of its free labels.
pub fn make_spectral(free_values: &BTreeMap<String, C64>, set: ConstraintSet) -> Result<SpectralAssignment> {
    SpectralSystem::m6(set).assign(free_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_counts() {
        assert_eq!(SpectralSystem::single().free_labels().len(), 6);
        assert_eq!(SpectralSystem::mmm2().free_labels().len(), 12);
        assert_eq!(SpectralSystem::m6(ConstraintSet::Svz).free_labels().len(), 20);
        assert_eq!(SpectralSystem::m6(ConstraintSet::SvzUsl).free_labels().len(), 16);
    }

    #[test]
    fn zero_and_random_assignments() {
        let sys = SpectralSystem::m6(ConstraintSet::SvzUsl);
        let zero: BTreeMap<String, C64> = sys.free_labels().into_iter().map(|l| (l, C64::new(0.0, 0.0))).collect();
        let s = make_spectral(&zero, ConstraintSet::SvzUsl).unwrap();
        assert!(s.iter().all(|(_, v)| *v == C64::new(0.0, 0.0)));
        assert_eq!(s.len(), sys.labels().len());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let s = sys.random(&mut rng);
            assert!(sys.residual(&s).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn rejections() {
        let sys = SpectralSystem::single();
        let mut given: BTreeMap<String, C64> = sys.free_labels().into_iter().map(|l| (l, C64::new(0.5, 0.0))).collect();
        let mut s = sys.assign(&given).unwrap();
        assert!(sys.check(&s, 1e-14).is_ok());
        s.set("d0", s.get("d0").unwrap() + 0.1);
        assert!(sys.check(&s, 1e-14).is_err());
        let first = sys.free_labels()[0].clone();
        given.remove(&first);
        assert!(sys.assign(&given).is_err());
        given.insert(first, C64::new(0.5, 0.0));
        let all: BTreeMap<String, C64> = sys.labels().iter().map(|l| (l.clone(), C64::new(0.5, 0.0))).collect();
        assert!(sys.assign(&all).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = SpectralAssignment::from_pairs([("a0", C64::new(0.25, -1.5)), ("e1", C64::new(2.0, 0.0))]);
        assert_eq!(SpectralAssignment::from_json(&s.to_json()).unwrap(), s);
    }
}
