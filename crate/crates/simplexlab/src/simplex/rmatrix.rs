//! R-matrices built from a Five-leg pair and the simplex-equation checks.

use super::index::Coverage;
use super::layout::{EquationLayout, PlacedName};
use super::operators::{by_first_leg, uniform_dim, words};
use crate::error::{Error, Result};
use crate::fiveleg::FiveLeg;
use crate::report::{Mode, ResidualReport};
use crate::sites::{compare_words, compare_words_per_column, dense_word, LocalOp, Space};
use crate::tensor::ComplexTensor;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub tolerance: f64,
    pub coverage: Coverage,
    /// Random basis columns in sampled mode.
    pub samples: usize,
    pub seed: u64,
    /// Largest total dimension compared with dense matrix products.
    pub dense_max: u64,
    /// Largest total dimension compared column by column in full.
    pub column_max: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tolerance: 1e-10, coverage: Coverage::Auto, samples: 100, seed: 0, dense_max: 1024, column_max: 100_000 }
    }
}

fn check_legs(m: &FiveLeg, mbar: &FiveLeg) -> Result<usize> {
    let d = uniform_dim(m)?;
    if uniform_dim(mbar)? != d || m.domains()[0].cardinality() != mbar.domains()[0].cardinality() {
        return Err(Error::InvalidInput("M and M̄ leg domains differ".into()));
    }
    Ok(d)
}

/// R^{k0..k3}_{i0..i3} = Σ_a M_{a,i1,i3}^{k0,k2} M̄^{a,k1,k3}_{i0,i2}, axes (i0..i3, k0..k3).
pub fn build_r4(m: &FiveLeg, mbar: &FiveLeg) -> Result<ComplexTensor> {
    let d = check_legs(m, mbar)?;
    let (_, mg) = by_first_leg(m)?;
    let (_, bg) = by_first_leg(mbar)?;
    let mut r = ComplexTensor::sparse(&[d; 8])?;
    for (me, be) in mg.iter().zip(&bg) {
        for &([i1, i3, k0, k2], v) in me {
            for &([k1, k3, i0, i2], w) in be {
                r.add_at(&[i0, i1, i2, i3, k0, k1, k2, k3], v * w)?;
            }
        }
    }
    r.prune(0.0);
    Ok(r)
}

/// R^{k0..k4}_{i0..i4} = M_{i0,i2,i4}^{k1,k3} M̄^{k0,k2,k4}_{i1,i3}, axes (i0..i4, k0..k4).
pub fn build_r5(m: &FiveLeg, mbar: &FiveLeg) -> Result<ComplexTensor> {
    let d = check_legs(m, mbar)?;
    if m.domains()[0].cardinality() != d {
        return Err(Error::InvalidInput("all five legs must share one domain".into()));
    }
    let (mt, bt) = (m.to_tensor()?, mbar.to_tensor()?);
    let be: Vec<(Vec<usize>, C64)> = bt.entries().into_iter().map(|(l, v)| (bt.unravel(l), v)).collect();
    let mut r = ComplexTensor::sparse(&[d; 10])?;
    for (lin, v) in mt.entries() {
        let a = mt.unravel(lin);
        for (b, w) in &be {
            let idx = [a[0], b[3], a[1], b[4], a[2], b[0], a[3], b[1], a[4], b[2]];
            r.add_at(&idx, v * w)?;
        }
    }
    Ok(r)
}

fn op_of(t: &ComplexTensor, rank: usize) -> Result<LocalOp> {
    if t.rank() != rank {
        return Err(Error::Shape(format!("expected rank {rank}, got {}", t.rank())));
    }
    LocalOp::from_tensor(t)
}

/// Compares both sides of a layout over named operators.
///
/// Dense products are used up to `dense_max`, every basis column up to
/// `column_max`, and random columns beyond that (flagged "sampled").
/// `prefer_sampled` makes sampling the default under [`Coverage::Auto`].
/// The reported residual of a sampled check is the worst single column.
pub fn verify_layout(layout: &EquationLayout, ops: &BTreeMap<String, ComplexTensor>, opts: &SimplexOptions, prefer_sampled: bool) -> Result<ResidualReport> {
    let start = Instant::now();
    layout.validate()?;
    let mut local = BTreeMap::new();
    for (k, t) in ops {
        local.insert(k.clone(), LocalOp::from_tensor(t)?);
    }
    let d = local.values().next().map(|o| o.d).ok_or_else(|| Error::InvalidInput("no operators".into()))?;
    if local.values().any(|o| o.d != d) {
        return Err(Error::Shape("operators differ in local dimension".into()));
    }
    let refs: BTreeMap<String, &LocalOp> = local.iter().map(|(k, v)| (k.clone(), v)).collect();
    let (l, r) = words(layout, &refs)?;
    let space = Space::new(layout.total_sites, d)?;
    let dim = space.dim();
    let sampled = match opts.coverage {
        Coverage::Sampled => true,
        Coverage::Full => false,
        Coverage::Auto => prefer_sampled || dim > opts.column_max,
    };
    let id = layout.equation_id.as_str();
    let rep = if !sampled && dim <= opts.dense_max {
        let (lm, rm) = (dense_word(&space, &l)?, dense_word(&space, &r)?);
        ResidualReport::new(id, lm.norm(), rm.norm(), lm.distance(&rm), opts.tolerance).param("path", "dense")
    } else if !sampled {
        let cols: Vec<u64> = (0..dim).collect();
        let acc = compare_words(&space, &l, &r, &cols, None)?;
        ResidualReport::from_acc(id, &acc, opts.tolerance).param("path", "columns").param("columns", dim)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let cols: Vec<u64> = (0..opts.samples).map(|_| rng.gen_range(0..dim)).collect();
        let (acc, worst) = compare_words_per_column(&space, &l, &r, &cols)?;
        let mut rep = ResidualReport::from_acc(id, &acc, opts.tolerance)
            .mode(Mode::Sampled)
            .flag("sampled")
            .param("path", "sampled-columns")
            .param("columns", cols.len())
            .param("seed", opts.seed)
            .param("aggregate_rel", acc.rel());
        rep.rel_residual = worst;
        rep.pass = worst <= opts.tolerance;
        rep
    };
    Ok(rep.param("d", d).param("sites", layout.total_sites).elapsed_since(start))
}

fn with_prime(layout: EquationLayout) -> EquationLayout {
    let rhs = layout.rhs.into_iter().map(|f| PlacedName { op: format!("{}'", f.op), ..f }).collect();
    EquationLayout { rhs, ..layout }
}

fn simplex_ops(r: &ComplexTensor, rprime: Option<&ComplexTensor>, rank: usize) -> Result<BTreeMap<String, ComplexTensor>> {
    op_of(r, rank)?;
    let rp = rprime.unwrap_or(r);
    op_of(rp, rank)?;
    if rp.shape() != r.shape() {
        return Err(Error::Shape("R and R' differ in shape".into()));
    }
    Ok([("R".to_string(), r.clone()), ("R'".to_string(), rp.clone())].into_iter().collect())
}

/// The 4-simplex equation on sites 0..9; `rprime` (default R) is used on the right.
pub fn verify_4simplex(r: &ComplexTensor, rprime: Option<&ComplexTensor>, opts: &SimplexOptions) -> Result<ResidualReport> {
    let ops = simplex_ops(r, rprime, 8)?;
    verify_layout(&with_prime(EquationLayout::simplex4()), &ops, opts, false).map(|rep| rep.param("nnz_r", r.nnz()))
}

/// The 5-simplex equation on 15 sites, sampled over basis columns unless
/// full coverage is requested.
pub fn verify_5simplex(r5: &ComplexTensor, opts: &SimplexOptions) -> Result<ResidualReport> {
    let ops = simplex_ops(r5, None, 10)?;
    verify_layout(&with_prime(EquationLayout::simplex5()), &ops, opts, true).map(|rep| rep.param("nnz_r", r5.nnz()))
}

/// R·R̄ = c·Id with c = tr(R·R̄)/d⁴.
pub fn verify_r_inverse(r: &ComplexTensor, rbar: &ComplexTensor, tol: f64) -> Result<ResidualReport> {
    let start = Instant::now();
    if r.shape() != rbar.shape() || r.rank() % 2 != 0 {
        return Err(Error::Shape("R and R̄ must be square operators of equal shape".into()));
    }
    let (a, b) = (LocalOp::from_tensor(r)?, LocalOp::from_tensor(rbar)?);
    let space = Space::new(a.k, a.d)?;
    let all: Vec<usize> = (0..a.k).collect();
    let p = dense_word(&space, &[crate::sites::Placed { op: &a, sites: &all }, crate::sites::Placed { op: &b, sites: &all }])?;
    let n = p.n;
    let c = p.trace() / n as f64;
    let mut id = crate::sites::DenseMatrix::identity(n);
    for v in id.data.iter_mut() {
        *v *= c;
    }
    let mut rep = ResidualReport::new("inverse", p.norm(), id.norm(), p.distance(&id), tol).cparam("c", c).param("dim", n);
    if c.norm() <= 1e-12 * p.norm().max(1e-300) {
        rep = rep.flag("singular");
        rep.pass = false;
    }
    Ok(rep.elapsed_since(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::IndexDomain;
    use crate::fiveleg::{example1, Form};
    use crate::kernel::ExponentKernel;

    fn ex1(n: u32) -> FiveLeg {
        let k = ExponentKernel::root_of_unity(n).unwrap();
        example1(&k, &IndexDomain::cyclic(n), Form::M2).unwrap()
    }

    #[test]
    fn r4_support_and_origin() {
        for n in 2..5 {
            let m = ex1(n);
            let r = build_r4(&m, &m.clone().as_barred(true)).unwrap();
            assert_eq!(r.nnz(), (n as usize).pow(5));
            assert_eq!(r.get(&[0; 8]).unwrap(), C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn r5_support() {
        let m = ex1(2);
        let r = build_r5(&m, &m.clone().as_barred(true)).unwrap();
        // three independent pairs of delta constraints over ten indices
        assert_eq!(r.nnz(), 64);
        assert_eq!(r.get(&[0; 10]).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(r.get(&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn identity_r_solves_everything() {
        let id4 = LocalOp::identity(4, 2).to_tensor().unwrap();
        let rep = verify_4simplex(&id4, None, &SimplexOptions::default()).unwrap();
        assert_eq!(rep.abs_residual, 0.0);
        let id5 = LocalOp::identity(5, 2).to_tensor().unwrap();
        let rep = verify_5simplex(&id5, &SimplexOptions { samples: 5, ..Default::default() }).unwrap();
        assert_eq!(rep.abs_residual, 0.0);
        assert_eq!(rep.mode, Mode::Sampled);
    }

    #[test]
    fn inverse_scalar() {
        let id = LocalOp::identity(4, 2).to_tensor().unwrap();
        let rep = verify_r_inverse(&id, &id, 1e-12).unwrap();
        assert!(rep.pass);
        let z = ComplexTensor::sparse(&[2; 8]).unwrap();
        let rep = verify_r_inverse(&id, &z, 1e-12).unwrap();
        assert!(!rep.pass && rep.flags.contains(&"singular".to_string()));
    }
}
