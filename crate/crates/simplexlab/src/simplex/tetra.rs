//! The oscillator R-matrix of the tetrahedron equation, the tetrahedral
//! algebra with Λ, and the block identities behind the third example.
//!
//! Operators are truncated to `cutoff` levels per site. R conserves the total
//! occupation and Λ never lowers it from ket to bra, so products compared on
//! bras of total ≤ cutoff−1 see no truncation at all.

use super::layout::{EquationLayout, PlacedName};
use super::operators::words;
use crate::error::{Error, Result};
use crate::fiveleg::{lambda_kernel, phi_delta, phibar, psibar};
use crate::qseries::QParams;
use crate::report::{Accumulator, ResidualReport};
use crate::sites::{compare_words, LocalOp, Space};
use crate::tensor::ComplexTensor;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::time::Instant;

/// R^{k1,k2,k3}_{i1,i2,i3} = Φ_{i1,i3}^{k2} Φ̄^{k1,k3}_{i2}(λ, μ), axes (i, k).
pub fn build_r3_trivial(qp: &QParams, lambda: C64, mu: C64, cutoff: usize) -> Result<ComplexTensor> {
    if cutoff < 1 {
        return Err(Error::InvalidInput("cutoff must be positive".into()));
    }
    let mut t = ComplexTensor::sparse(&[cutoff; 6])?;
    for i1 in 0..cutoff {
        for i3 in 0..cutoff {
            let k2 = i1 + i3;
            if k2 >= cutoff || phi_delta(i1 as i64, i3 as i64, k2 as i64).norm() == 0.0 {
                continue;
            }
            for i2 in 0..cutoff {
                for k1 in 0..=i2 {
                    let k3 = i2 - k1;
                    let v = phibar(qp, lambda, mu, k1 as i64, k3 as i64, i2 as i64);
                    if v.norm() > 0.0 {
                        t.set(&[i1, i2, i3, k1, k2, k3], v)?;
                    }
                }
            }
        }
    }
    Ok(t)
}

/// Λ_{a,c}^{a',c'} as a two-site operator, axes (a, c, a', c').
pub fn build_lambda2(qp: &QParams, cutoff: usize) -> Result<ComplexTensor> {
    let mut t = ComplexTensor::sparse(&[cutoff; 4])?;
    for a in 0..cutoff {
        for c in 0..cutoff {
            for s in 0..=a.min(c) {
                let v = lambda_kernel(qp, a as i64, c as i64, (a - s) as i64, (c - s) as i64);
                if v.norm() > 0.0 {
                    t.set(&[a, c, a - s, c - s], v)?;
                }
            }
        }
    }
    Ok(t)
}

/// Λ_{123} = Λ_{13} P_{23}: ⟨i|Λ_{123}|k⟩ = Λ_{i1,i3}^{k1,k2} δ_{i2,k3}.
pub fn build_lambda3(qp: &QParams, cutoff: usize) -> Result<ComplexTensor> {
    let l2 = build_lambda2(qp, cutoff)?;
    let mut t = ComplexTensor::sparse(&[cutoff; 6])?;
    for (lin, v) in l2.entries() {
        let [a, c, ap, cp] = l2.unravel(lin)[..] else { unreachable!() };
        for i2 in 0..cutoff {
            t.set(&[a, i2, c, ap, cp, i2], v)?;
        }
    }
    Ok(t)
}

/// The four factors R_{123}, R_{145}, R_{246}, R_{356} with site-attached
/// spectral values λ1, λ3, λ6 and λ2 = λ1+λ3, λ5 = λ3+λ6, λ4 = λ1+λ3+λ6.
/// R_{abc} uses Φ̄(λ_a, λ_c).
pub fn tetra_factors(qp: &QParams, cutoff: usize, l1: C64, l3: C64, l6: C64) -> Result<[ComplexTensor; 4]> {
    let lam = |s: usize| match s {
        1 => l1,
        2 => l1 + l3,
        3 => l3,
        4 => l1 + l3 + l6,
        5 => l3 + l6,
        _ => l6,
    };
    Ok([
        build_r3_trivial(qp, lam(1), lam(3), cutoff)?,
        build_r3_trivial(qp, lam(1), lam(5), cutoff)?,
        build_r3_trivial(qp, lam(2), lam(6), cutoff)?,
        build_r3_trivial(qp, lam(3), lam(6), cutoff)?,
    ])
}

fn total_filter(space: &Space, top: usize) -> impl Fn(u64) -> bool + Sync + '_ {
    move |b| space.digits(b).iter().sum::<usize>() <= top
}

fn compare_on_low_totals(layout: &EquationLayout, ops: &BTreeMap<String, ComplexTensor>, tol: f64) -> Result<ResidualReport> {
    let start = Instant::now();
    let mut local = BTreeMap::new();
    for (k, t) in ops {
        if t.rank() != 6 {
            return Err(Error::Shape(format!("{k}: expected a three-site operator")));
        }
        local.insert(k.clone(), LocalOp::from_tensor(t)?);
    }
    let d = local.values().next().map(|o| o.d).ok_or_else(|| Error::InvalidInput("no operators".into()))?;
    let refs: BTreeMap<String, &LocalOp> = local.iter().map(|(k, v)| (k.clone(), v)).collect();
    let (l, r) = words(layout, &refs)?;
    let space = Space::new(layout.total_sites, d)?;
    let top = d - 1;
    let keep = total_filter(&space, top);
    // Kets above the bound cannot reach bras below it.
    let cols: Vec<u64> = (0..space.dim()).filter(|&b| keep(b)).collect();
    let acc = compare_words(&space, &l, &r, &cols, Some(&keep))?;
    Ok(ResidualReport::from_acc(&layout.equation_id, &acc, tol)
        .param("cutoff", d)
        .param("max_total", top)
        .param("columns", cols.len())
        .flag("occupation-restricted")
        .elapsed_since(start))
}

/// R_{123} R_{145} R_{246} R_{356} = R_{356} R_{246} R_{145} R_{123}.
/// One tensor is used for every factor, or four are given in that order.
pub fn verify_tetrahedron(factors: &[ComplexTensor], tol: f64) -> Result<ResidualReport> {
    let names = ["R123", "R145", "R246", "R356"];
    let four: Vec<&ComplexTensor> = match factors.len() {
        1 => vec![&factors[0]; 4],
        4 => factors.iter().collect(),
        n => return Err(Error::InvalidInput(format!("expected 1 or 4 factors, got {n}"))),
    };
    let base = EquationLayout::tetrahedron();
    let rename = |side: Vec<PlacedName>| -> Vec<PlacedName> {
        side.into_iter()
            .map(|f| {
                let k = base.lhs.iter().position(|g| g.sites == f.sites).unwrap_or(0);
                PlacedName { op: names[k].to_string(), ..f }
            })
            .collect()
    };
    let layout = EquationLayout { lhs: rename(base.lhs.clone()), rhs: rename(base.rhs.clone()), ..base.clone() };
    let ops = names.iter().zip(four).map(|(n, t)| (n.to_string(), t.clone())).collect();
    compare_on_low_totals(&layout, &ops, tol)
}

/// R_{123} Λ_{145} Λ_{246} Λ_{356} = Λ_{356} Λ_{246} Λ_{145} R_{123}.
pub fn verify_tetrahedral_algebra(r3: &ComplexTensor, lambda3: &ComplexTensor, tol: f64) -> Result<ResidualReport> {
    let p = |op: &str, s: &[usize]| PlacedName { op: op.into(), sites: s.to_vec() };
    let lhs = vec![p("R", &[0, 1, 2]), p("L", &[0, 3, 4]), p("L", &[1, 3, 5]), p("L", &[2, 4, 5])];
    let mut rhs = lhs.clone();
    rhs.reverse();
    let layout = EquationLayout { equation_id: "tetra-algebra".into(), total_sites: 6, lhs, rhs };
    let ops = [("R".to_string(), r3.clone()), ("L".to_string(), lambda3.clone())].into_iter().collect();
    compare_on_low_totals(&layout, &ops, tol)
}

/// Spectral values of the block identities: λ_a = λ_c = a, λ_b = λ_d = b and
/// λ_{e2} = λ_{f1} = e for the splitting block; the last block uses (a, b).
#[derive(Clone, Copy, Debug)]
pub struct BlockSpectral {
    pub a: C64,
    pub b: C64,
    pub e: C64,
}

fn tuples(n: usize, top: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|t| (0..=top).map(move |x| [t.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Evaluates the three block identities over all externals in 0..=ext_max.
/// Internal sums run over 0..=4·ext_max, which covers every configuration
/// allowed by the deltas.
pub fn verify_as_blocks(qp: &QParams, sp: BlockSpectral, ext_max: i64, tol: f64) -> Result<Vec<ResidualReport>> {
    if ext_max < 0 || ![sp.a, sp.b, sp.e].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput("bad block parameters".into()));
    }
    let top = 4 * ext_max;
    let lam = |a, c, ap, cp| lambda_kernel(qp, a, c, ap, cp);
    let mut reps = Vec::new();

    // Λ_{a,c}^{a',c'} Λ_{b,c'}^{b',c''} Φ_{a',b'}^{d} = Φ_{a,b}^{d'} Λ_{d',c}^{d,c''}
    let start = Instant::now();
    let mut acc = Accumulator::default();
    for t in tuples(5, ext_max) {
        let [a, b, c, cpp, d] = t[..] else { unreachable!() };
        let mut l = C64::new(0.0, 0.0);
        for s in 0..=a.min(c) {
            let (ap, cp) = (a - s, c - s);
            let x = lam(a, c, ap, cp);
            for bp in 0..=top {
                l += x * lam(b, cp, bp, cpp) * phi_delta(ap, bp, d);
            }
        }
        let mut r = C64::new(0.0, 0.0);
        for dp in 0..=top {
            r += phi_delta(a, b, dp) * lam(dp, c, d, cpp);
        }
        acc.push(l, r);
    }
    reps.push(ResidualReport::from_acc("as1", &acc, tol).param("ext_max", ext_max).elapsed_since(start));

    // Splitting block, for P = Ψ̄ and P = Φ̄.
    let start = Instant::now();
    let mut acc = Accumulator::default();
    let mut parts = Vec::new();
    for (name, p) in [("psibar", psibar as fn(&QParams, C64, C64, i64, i64, i64) -> C64), ("phibar", phibar)] {
        let pk = |l: C64, m: C64, x, y, z| p(qp, l, m, x, y, z);
        let (aa, bb, ee) = (sp.a, sp.b, sp.e);
        let mut part = Accumulator::default();
        for t in tuples(4, ext_max) {
            let [a, b, c, d] = t[..] else { unreachable!() };
            let mut l = C64::new(0.0, 0.0);
            for e2 in 0..=a.min(d) {
                let (e1, e4) = (a - e2, d - e2);
                for e3 in 0..=top {
                    l += pk(aa - ee, ee, e1, e2, a) * phi_delta(e1, b, e3) * pk(aa, bb - ee, c, e4, e3) * phi_delta(e2, e4, d);
                }
            }
            let mut r = C64::new(0.0, 0.0);
            for f2 in 0..=b {
                let f1 = b - f2;
                let f4 = c - f1;
                if f4 < 0 {
                    continue;
                }
                for f3 in 0..=top {
                    r += pk(ee, bb - ee, f1, f2, b) * phi_delta(a, f2, f3) * pk(aa - ee, bb, f4, d, f3) * phi_delta(f4, f1, c);
                }
            }
            part.push(l, r);
        }
        parts.push((name, part.rel()));
        acc.merge(&part);
    }
    let mut rep = ResidualReport::from_acc("as2", &acc, tol).param("ext_max", ext_max);
    for (n, rel) in parts {
        rep = rep.param(&format!("{n}_rel"), rel);
    }
    reps.push(rep.elapsed_since(start));

    // Final blocks with (λ, μ) = (a, b).
    let start = Instant::now();
    let (l0, m0) = (sp.a, sp.b);
    let mut first = Accumulator::default();
    for t in tuples(5, ext_max) {
        let [d, c, ap, bp, cpp] = t[..] else { unreachable!() };
        let mut l = C64::new(0.0, 0.0);
        for a in 0..=d {
            let b = d - a;
            let x = phibar(qp, l0, m0, a, b, d);
            for s in 0..=a.min(c) {
                if a - s != ap {
                    continue;
                }
                let cp = c - s;
                l += x * lam(a, c, ap, cp) * lam(b, cp, bp, cpp);
            }
        }
        let mut r = C64::new(0.0, 0.0);
        for dp in 0..=top {
            r += lam(d, c, dp, cpp) * phibar(qp, l0, m0, ap, bp, dp);
        }
        first.push(l, r);
    }
    let mut second = Accumulator::default();
    for t in tuples(5, ext_max) {
        let [d, a, app, cp, bp] = t[..] else { unreachable!() };
        let mut l = C64::new(0.0, 0.0);
        for c in 0..=d {
            let b = d - c;
            let x = psibar(qp, l0, m0, c, b, d);
            for a1 in 0..=top {
                l += x * lam(a, b, a1, bp) * lam(a1, c, app, cp);
            }
        }
        let mut r = C64::new(0.0, 0.0);
        for dp in 0..=top {
            r += lam(a, d, app, dp) * psibar(qp, l0, m0, cp, bp, dp);
        }
        second.push(l, r);
    }
    let (r1, r2) = (first.rel(), second.rel());
    let mut acc = first;
    acc.merge(&second);
    reps.push(ResidualReport::from_acc("as3", &acc, tol).param("ext_max", ext_max).param("first_rel", r1).param("second_rel", r2).elapsed_since(start));
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp() -> QParams {
        QParams::real(0.5).unwrap()
    }

    #[test]
    fn r3_support_and_values() {
        let (l, m) = (C64::new(0.3, 0.2), C64::new(-0.4, 0.1));
        let t = build_r3_trivial(&qp(), l, m, 3).unwrap();
        // (i1, i3) with i1+i3 < 3: 6 pairs; i2 with its i2+1 splittings: 1+2+3
        assert_eq!(t.nnz(), 36);
        assert_eq!(t.get(&[0; 6]).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(t.get(&[1, 0, 0, 0, 0, 0]).unwrap(), C64::new(0.0, 0.0));
        let v = t.get(&[1, 2, 1, 1, 2, 1]).unwrap();
        assert!((v - phibar(&qp(), l, m, 1, 1, 2)).norm() < 1e-15);
    }

    #[test]
    fn lambda3_moves_the_middle_site() {
        let t = build_lambda3(&qp(), 3).unwrap();
        let l2 = build_lambda2(&qp(), 3).unwrap();
        assert_eq!(t.get(&[1, 2, 1, 0, 0, 2]).unwrap(), l2.get(&[1, 1, 0, 0]).unwrap());
        assert_eq!(t.get(&[1, 2, 1, 0, 0, 1]).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn tetrahedral_algebra_and_equation() {
        let q = qp();
        let (l, m) = (C64::new(0.3, 0.2), C64::new(-0.4, 0.1));
        let r = build_r3_trivial(&q, l, m, 3).unwrap();
        let rep = verify_tetrahedral_algebra(&r, &build_lambda3(&q, 3).unwrap(), 1e-10).unwrap();
        assert!(rep.pass && rep.lhs_norm > 1.0, "{rep:?}");
        let f = tetra_factors(&q, 4, C64::new(0.3, 0.2), C64::new(-0.4, 0.1), C64::new(0.25, -0.15)).unwrap();
        let rep = verify_tetrahedron(&f, 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        let bad = r.map_values(|i, v| if i == [0, 1, 0, 1, 0, 0] { v * 1.001 } else { v });
        let rep = verify_tetrahedral_algebra(&bad, &build_lambda3(&q, 3).unwrap(), 1e-10).unwrap();
        assert!(rep.rel_residual > 1e-5);
    }

    #[test]
    fn blocks() {
        let sp = BlockSpectral { a: C64::new(0.3, 0.2), b: C64::new(-0.4, 0.1), e: C64::new(0.7, -0.3) };
        let reps = verify_as_blocks(&qp(), sp, 3, 1e-12).unwrap();
        assert_eq!(reps.len(), 3);
        for r in reps {
            assert!(r.pass && r.lhs_norm > 0.0, "{r:?}");
        }
    }
}
