//! The bilinear exponent ⟨a;b⟩ and the Gauss exponent ⟨x⟩ in their three regimes.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelMode {
    QReal,
    RootOfUnity,
    FourierReal,
}

/// An argument of the exponent: an index, a real or a complex number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arg {
    Int(i64),
    Real(f64),
    Complex(C64),
}

impl From<i64> for Arg {
    fn from(v: i64) -> Self {
        Arg::Int(v)
    }
}
impl From<i32> for Arg {
    fn from(v: i32) -> Self {
        Arg::Int(v as i64)
    }
}
impl From<f64> for Arg {
    fn from(v: f64) -> Self {
        Arg::Real(v)
    }
}
impl From<C64> for Arg {
    fn from(v: C64) -> Self {
        Arg::Complex(v)
    }
}

impl Arg {
    fn as_complex(self) -> C64 {
        match self {
            Arg::Int(v) => C64::new(v as f64, 0.0),
            Arg::Real(v) => C64::new(v, 0.0),
            Arg::Complex(v) => v,
        }
    }

    fn as_int(self) -> Option<i64> {
        match self {
            Arg::Int(v) => Some(v),
            Arg::Real(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Some(v as i64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentKernel {
    mode: KernelMode,
    q: C64,
    n: u32,
}

/// exp(2πi k/n) with the quarter-turn values made exact.
pub fn root_of_unity_power(k: i64, n: u32) -> C64 {
    let n = n as i64;
    let k = k.rem_euclid(n);
    if 4 * k % n == 0 {
        return match 4 * k / n {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// Integer power that stays exact for small exponents.
pub fn int_pow(z: C64, e: i64) -> C64 {
    if e.unsigned_abs() <= i32::MAX as u64 {
        z.powi(e as i32)
    } else {
        (z.ln() * e as f64).exp()
    }
}

impl ExponentKernel {
    pub fn q_real(q: C64) -> Result<Self> {
        if !(q.norm() < 1.0) || q == C64::new(0.0, 0.0) {
            return Err(Error::InvalidInput(format!("QReal kernel needs 0 < |q| < 1, got {q}")));
        }
        Ok(Self { mode: KernelMode::QReal, q, n: 0 })
    }

    pub fn root_of_unity(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("RootOfUnity kernel needs N >= 1".into()));
        }
        Ok(Self { mode: KernelMode::RootOfUnity, q: C64::new(0.0, 0.0), n })
    }

    pub fn fourier_real() -> Self {
        Self { mode: KernelMode::FourierReal, q: C64::new(0.0, 0.0), n: 0 }
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn label(&self) -> String {
        match self.mode {
            KernelMode::QReal => format!("qreal(q={})", self.q),
            KernelMode::RootOfUnity => format!("root_of_unity(N={})", self.n),
            KernelMode::FourierReal => "fourier_real".to_string(),
        }
    }

    /// ⟨a;b⟩ for integer arguments. Valid in every mode.
    pub fn bracket_int(&self, a: i64, b: i64) -> C64 {
        match self.mode {
            KernelMode::QReal => int_pow(self.q, 2 * a * b),
            KernelMode::RootOfUnity => {
                let n = self.n as i64;
                root_of_unity_power(a.rem_euclid(n) * b.rem_euclid(n), self.n)
            }
            KernelMode::FourierReal => C64::new(1.0, 0.0),
        }
    }

    pub fn bracket(&self, a: impl Into<Arg>, b: impl Into<Arg>) -> Result<C64> {
        let (a, b) = (a.into(), b.into());
        if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
            return Ok(self.bracket_int(x, y));
        }
        match self.mode {
            KernelMode::RootOfUnity => Err(Error::Domain(format!("RootOfUnity kernel takes integer arguments, got {a:?}, {b:?}"))),
            KernelMode::QReal => Ok((self.q.ln() * (a.as_complex() * b.as_complex() * 2.0)).exp()),
            KernelMode::FourierReal => Ok((C64::new(0.0, 2.0 * PI) * a.as_complex() * b.as_complex()).exp()),
        }
    }

    /// Gauss exponent ⟨x⟩.
    pub fn gauss(&self, x: impl Into<Arg>) -> Result<C64> {
        let x = x.into();
        match self.mode {
            KernelMode::RootOfUnity => {
                if self.n % 2 == 0 {
                    return Err(Error::Unsupported(format!("Gauss exponent at a root of unity needs odd N, got N={}", self.n)));
                }
                let v = x.as_int().ok_or_else(|| Error::Domain(format!("RootOfUnity kernel takes integers, got {x:?}")))?;
                let n = self.n as i64;
                let r = v.rem_euclid(n);
                Ok(root_of_unity_power(r * r % n * ((n + 1) / 2), self.n))
            }
            KernelMode::QReal => match x.as_int() {
                Some(v) => Ok(int_pow(self.q, v * v)),
                None => {
                    let z = x.as_complex();
                    Ok((self.q.ln() * z * z).exp())
                }
            },
            KernelMode::FourierReal => match x.as_int() {
                Some(v) => Ok(if v.rem_euclid(2) == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) }),
                None => {
                    let z = x.as_complex();
                    Ok((C64::new(0.0, PI) * z * z).exp())
                }
            },
        }
    }

    pub fn gauss_int(&self, x: i64) -> Result<C64> {
        self.gauss(Arg::Int(x))
    }
}

pub fn bracket(kernel: &ExponentKernel, a: impl Into<Arg>, b: impl Into<Arg>) -> Result<C64> {
    kernel.bracket(a, b)
}

pub fn gauss_bracket(kernel: &ExponentKernel, x: impl Into<Arg>) -> Result<C64> {
    kernel.gauss(x)
}
