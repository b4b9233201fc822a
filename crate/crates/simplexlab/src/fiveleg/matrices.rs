//! Matrix realizations of u, v and the direct operator check of
//! (S_c)_{23} (S_b)_{13} (S_a)_{12} = Σ_{d,e} M_{a,b,c}^{d,e} (S_d)_{12} (S_e)_{23}
//! with S_a = u^{a0} ⊗ v^{a1}.

use super::FiveLeg;
use crate::error::{Error, Result};
use crate::kernel::root_of_unity_power;
use crate::qseries::QParams;
use crate::report::{Accumulator, ResidualReport};
use crate::sites::{apply_word, basis_state, state_distance_sqr, state_norm_sqr, LocalOp, Placed, Space, State};
use crate::tensor::{new_map, ComplexTensor};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::time::Instant;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Clock u = diag(ω^n) and shift v|n⟩ = |n+1 mod N⟩, so that u v = ω v u.
pub fn weyl_matrices(n: usize) -> Result<(ComplexTensor, ComplexTensor)> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("Weyl pair needs N >= 2, got {n}")));
    }
    let u = ComplexTensor::from_fn_dense(&[n, n], |i| if i[0] == i[1] { root_of_unity_power(i[0] as i64, n as u32) } else { ZERO })?;
    let v = ComplexTensor::from_fn_dense(&[n, n], |i| if i[0] == (i[1] + 1) % n { ONE } else { ZERO })?;
    Ok((u, v))
}

/// Truncated q-oscillator: v|n⟩ = |n+1⟩ (dropped at the top), u|n⟩ = (1−q^{2n})|n−1⟩.
/// Then u v − q² v u = 1 − q² on every row but the last.
pub fn qosc_matrices(qp: &QParams, cutoff: usize) -> Result<(ComplexTensor, ComplexTensor)> {
    if cutoff < 2 {
        return Err(Error::InvalidInput(format!("q-oscillator needs cutoff >= 2, got {cutoff}")));
    }
    let q2 = qp.q2();
    let u = ComplexTensor::from_fn_dense(&[cutoff, cutoff], |i| if i[0] + 1 == i[1] { ONE - q2.powi(i[1] as i32) } else { ZERO })?;
    let v = ComplexTensor::from_fn_dense(&[cutoff, cutoff], |i| if i[0] == i[1] + 1 { ONE } else { ZERO })?;
    Ok((u, v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFamily {
    /// Clock and shift of order N (q² = e^{2πi/N}).
    Weyl { n: usize },
    /// q-oscillator truncated to `cutoff` levels.
    Qosc { qp: QParams, cutoff: usize },
}

fn mat(t: &ComplexTensor) -> Vec<Vec<C64>> {
    let n = t.shape()[0];
    (0..n).map(|i| (0..n).map(|j| t.get(&[i, j]).unwrap()).collect()).collect()
}

fn mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let mut c = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != ZERO {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

fn power(m: &[Vec<C64>], e: usize) -> Vec<Vec<C64>> {
    let n = m.len();
    let mut r: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| if i == j { ONE } else { ZERO }).collect()).collect();
    for _ in 0..e {
        r = mul(&r, m);
    }
    r
}

/// u^{x} ⊗ v^{y} as a two-site operator.
fn s_op(u: &[Vec<C64>], v: &[Vec<C64>], x: usize, y: usize) -> Result<LocalOp> {
    let (ux, vy) = (power(u, x), power(v, y));
    let d = u.len();
    let mut t = ComplexTensor::sparse(&[d, d, d, d])?;
    for i1 in 0..d {
        for k1 in 0..d {
            if ux[i1][k1] == ZERO {
                continue;
            }
            for i2 in 0..d {
                for k2 in 0..d {
                    let val = ux[i1][k1] * vy[i2][k2];
                    if val != ZERO {
                        t.set(&[i1, i2, k1, k2], val)?;
                    }
                }
            }
        }
    }
    LocalOp::from_tensor(&t)
}

/// Compares both sides of the pentagon relation of the S_a on three sites.
///
/// For the oscillator only kets with every occupation ≤ cutoff−1−(a1+b1+c1)
/// are used, where truncation cannot interfere; the check is flagged
/// inconclusive if a1+b1+c1 exceeds cutoff/2.
pub fn verify_peg_matrix(family: MatrixFamily, m: &FiveLeg, labels: [[i64; 2]; 3]) -> Result<ResidualReport> {
    let start = Instant::now();
    if m.arity() != 2 {
        return Err(Error::InvalidInput("the operator check needs pair legs".into()));
    }
    let (u, v, d, cyclic) = match family {
        MatrixFamily::Weyl { n } => {
            let (u, v) = weyl_matrices(n)?;
            (mat(&u), mat(&v), n, Some(n as i64))
        }
        MatrixFamily::Qosc { qp, cutoff } => {
            let (u, v) = qosc_matrices(&qp, cutoff)?;
            (mat(&u), mat(&v), cutoff, None)
        }
    };
    let exps = |x: i64| -> Result<usize> {
        match cyclic {
            Some(n) => Ok(x.rem_euclid(n) as usize),
            None if x >= 0 => Ok(x as usize),
            None => Err(Error::InvalidInput(format!("oscillator labels must be non-negative, got {x}"))),
        }
    };
    let s = |l: [i64; 2]| -> Result<LocalOp> { s_op(&u, &v, exps(l[0])?, exps(l[1])?) };
    let (sa, sb, sc) = (s(labels[0])?, s(labels[1])?, s(labels[2])?);
    let space = Space::new(3, d)?;
    let lhs = [Placed { op: &sc, sites: &[1, 2] }, Placed { op: &sb, sites: &[0, 2] }, Placed { op: &sa, sites: &[0, 1] }];

    // Terms of the right hand side: all (d, e) with nonzero structure constant.
    let [a, b, c] = labels;
    let range: Vec<i64> = match cyclic {
        Some(n) => (0..n).collect(),
        None => (0..=labels.iter().flatten().sum::<i64>()).collect(),
    };
    let mut terms: Vec<(C64, LocalOp, LocalOp)> = Vec::new();
    for &d0 in &range {
        for &d1 in &range {
            for &e0 in &range {
                for &e1 in &range {
                    let coef = m.entry(&[a[0], a[1], b[0], b[1], c[0], c[1], d0, d1, e0, e1])?;
                    if coef != ZERO {
                        terms.push((coef, s([d0, d1])?, s([e0, e1])?));
                    }
                }
            }
        }
    }

    let raise = (a[1] + b[1] + c[1]) as usize;
    let (columns, inconclusive): (Vec<u64>, bool) = match family {
        MatrixFamily::Weyl { .. } => ((0..space.dim()).collect(), false),
        MatrixFamily::Qosc { cutoff, .. } => {
            let top = cutoff as i64 - 1 - raise as i64;
            let cols = (0..space.dim()).filter(|&k| space.digits(k).iter().all(|&x| x as i64 <= top)).collect::<Vec<_>>();
            let empty = cols.is_empty();
            (cols, 2 * raise > cutoff || empty)
        }
    };
    let per: Vec<Result<Accumulator>> = columns
        .par_iter()
        .map(|&k| {
            let s0 = basis_state(k);
            let l = apply_word(&space, &lhs, &s0)?;
            let mut r: State = new_map();
            for (coef, sd, se) in &terms {
                let word = [Placed { op: sd, sites: &[0, 1] }, Placed { op: se, sites: &[1, 2] }];
                for (bra, x) in apply_word(&space, &word, &s0)? {
                    *r.entry(bra).or_insert(ZERO) += coef * x;
                }
            }
            Ok(Accumulator { lhs_sqr: state_norm_sqr(&l), rhs_sqr: state_norm_sqr(&r), diff_sqr: state_distance_sqr(&l, &r), count: 1 })
        })
        .collect();
    let mut acc = Accumulator::default();
    for p in per {
        acc.merge(&p?);
    }
    let mut rep =
        ResidualReport::from_acc("peg", &acc, 1e-10).param("labels", serde_json::json!(labels)).param("columns", columns.len()).param("terms", terms.len());
    rep = match family {
        MatrixFamily::Weyl { n } => rep.param("realization", "weyl").param("N", n),
        MatrixFamily::Qosc { qp, cutoff } => rep.param("realization", "qosc").cparam("q", qp.q).param("cutoff", cutoff).flag("protected-block"),
    };
    if inconclusive {
        rep = rep.inconclusive("margin");
    }
    Ok(rep.elapsed_since(start))
}
