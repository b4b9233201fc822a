//! Residual reports: side norms, absolute and relative residual, verdict.

use crate::error::{Error, Result};
use crate::tensor::ComplexTensor;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Sampled,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation_id: String,
    pub params: BTreeMap<String, Value>,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub mode: Mode,
    pub flags: Vec<String>,
    pub elapsed_ms: f64,
}

pub fn complex_json(z: C64) -> Value {
    serde_json::json!([z.re, z.im])
}

pub fn relative(abs: f64, lhs: f64, rhs: f64) -> f64 {
    abs / lhs.max(rhs).max(1e-300)
}

impl ResidualReport {
    pub fn new(equation_id: &str, lhs_norm: f64, rhs_norm: f64, abs_residual: f64, tolerance: f64) -> Self {
        let rel = relative(abs_residual, lhs_norm, rhs_norm);
        Self {
            equation_id: equation_id.to_string(),
            params: BTreeMap::new(),
            lhs_norm,
            rhs_norm,
            abs_residual,
            rel_residual: rel,
            tolerance,
            pass: rel <= tolerance,
            mode: Mode::Full,
            flags: Vec::new(),
            elapsed_ms: 0.0,
        }
    }

    pub fn scalar(equation_id: &str, lhs: C64, rhs: C64, tolerance: f64) -> Self {
        Self::new(equation_id, lhs.norm(), rhs.norm(), (lhs - rhs).norm(), tolerance)
    }

    pub fn from_acc(equation_id: &str, acc: &Accumulator, tolerance: f64) -> Self {
        Self::new(equation_id, acc.lhs_sqr.sqrt(), acc.rhs_sqr.sqrt(), acc.diff_sqr.sqrt(), tolerance)
    }

    pub fn param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn cparam(self, key: &str, z: C64) -> Self {
        self.param(key, complex_json(z))
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn flag(mut self, f: &str) -> Self {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.to_string());
        }
        self
    }

    pub fn inconclusive(self, reason: &str) -> Self {
        self.mode(Mode::Inconclusive).flag(reason)
    }

    pub fn elapsed_since(mut self, start: Instant) -> Self {
        self.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.rel_residual <= tolerance;
        self
    }
}

/// Running sums of squared side norms and squared differences.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub lhs_sqr: f64,
    pub rhs_sqr: f64,
    pub diff_sqr: f64,
    pub count: usize,
}

impl Accumulator {
    pub fn push(&mut self, l: C64, r: C64) {
        self.lhs_sqr += l.norm_sqr();
        self.rhs_sqr += r.norm_sqr();
        self.diff_sqr += (l - r).norm_sqr();
        self.count += 1;
    }

    pub fn merge(&mut self, o: &Accumulator) {
        self.lhs_sqr += o.lhs_sqr;
        self.rhs_sqr += o.rhs_sqr;
        self.diff_sqr += o.diff_sqr;
        self.count += o.count;
    }

    pub fn rel(&self) -> f64 {
        relative(self.diff_sqr.sqrt(), self.lhs_sqr.sqrt(), self.rhs_sqr.sqrt())
    }
}

pub fn residual(lhs: &ComplexTensor, rhs: &ComplexTensor, equation_id: &str, tolerance: f64) -> Result<ResidualReport> {
    if lhs.shape() != rhs.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", lhs.shape(), rhs.shape())));
    }
    Ok(ResidualReport::new(equation_id, lhs.norm(), rhs.norm(), lhs.distance(rhs)?, tolerance))
}
