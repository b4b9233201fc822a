//! Two-site operators: the adjoint families of a Five-leg, the pentagon and
//! 10-term checks, the generalized 10-term identity and the factorized
//! R-matrices.

use super::layout::EquationLayout;
use crate::error::{Error, Result};
use crate::fiveleg::FiveLeg;
use crate::report::{Accumulator, ResidualReport};
use crate::sites::{apply_word, basis_state, compare_words, dense_word, LocalOp, Placed, Space, State};
use crate::tensor::{new_map, ComplexTensor};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Operators S_a indexed by the positions of the label domain.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    pub ops: Vec<LocalOp>,
    /// Local dimension of each of the two sites.
    pub dim: usize,
}

impl OperatorFamily {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn get(&self, a: usize) -> &LocalOp {
        &self.ops[a]
    }
}

pub(crate) fn uniform_dim(m: &FiveLeg) -> Result<usize> {
    let d = m.domains()[1].cardinality();
    if m.domains()[1..].iter().any(|x| x.cardinality() != d) {
        return Err(Error::InvalidInput("legs b..e must share one domain".into()));
    }
    Ok(d)
}

/// Splits the entries of M by their first leg: (a, [b, c, d, e], value).
pub(crate) fn by_first_leg(m: &FiveLeg) -> Result<(usize, Vec<Vec<([usize; 4], C64)>>)> {
    let t = m.to_tensor()?;
    let na = t.shape()[0];
    let mut out = vec![Vec::new(); na];
    for (lin, v) in t.entries() {
        let idx = t.unravel(lin);
        out[idx[0]].push(([idx[1], idx[2], idx[3], idx[4]], v));
    }
    Ok((na, out))
}

/// ⟨i1,i2|S_a|k1,k2⟩ = M_{a,i1,i2}^{k1,k2}.
pub fn adjoint_s(m: &FiveLeg) -> Result<OperatorFamily> {
    let d = uniform_dim(m)?;
    let (_, groups) = by_first_leg(m)?;
    let ops = groups
        .into_iter()
        .map(|g| {
            let t = ComplexTensor::from_entries(&[d; 4], g.into_iter().map(|(i, v)| (i.to_vec(), v)))?;
            LocalOp::from_tensor(&t)
        })
        .collect::<Result<_>>()?;
    Ok(OperatorFamily { ops, dim: d })
}

/// ⟨i1,i2|S̄^a|k1,k2⟩ = M̄^{a,k1,k2}_{i1,i2}.
pub fn adjoint_sbar(mbar: &FiveLeg) -> Result<OperatorFamily> {
    let d = uniform_dim(mbar)?;
    let (_, groups) = by_first_leg(mbar)?;
    let ops = groups
        .into_iter()
        .map(|g| {
            let t = ComplexTensor::from_entries(&[d; 4], g.into_iter().map(|([k1, k2, i1, i2], v)| (vec![i1, i2, k1, k2], v)))?;
            LocalOp::from_tensor(&t)
        })
        .collect::<Result<_>>()?;
    Ok(OperatorFamily { ops, dim: d })
}

fn two_site(t: &ComplexTensor) -> Result<LocalOp> {
    if t.rank() != 4 {
        return Err(Error::Shape(format!("expected a two-site operator (rank 4), got rank {}", t.rank())));
    }
    LocalOp::from_tensor(t)
}

fn all_columns(space: &Space) -> Vec<u64> {
    (0..space.dim()).collect()
}

fn place<'a>(op: &'a LocalOp, sites: &'a [usize]) -> Placed<'a> {
    Placed { op, sites }
}

/// Residuals of S23 S13 S12 = S12 S23 and of S̄12 S̄13 S̄23 = S̄23 S̄12, combined.
pub fn verify_pentagon(s: &ComplexTensor, sbar: &ComplexTensor, tol: f64) -> Result<ResidualReport> {
    let start = Instant::now();
    let (s, sb) = (two_site(s)?, two_site(sbar)?);
    if s.d != sb.d {
        return Err(Error::Shape("S and S̄ differ in local dimension".into()));
    }
    let ops: BTreeMap<String, &LocalOp> = [("S".to_string(), &s), ("Sbar".to_string(), &sb)].into_iter().collect();
    let space = Space::new(3, s.d)?;
    let cols = all_columns(&space);
    let mut acc = Accumulator::default();
    let mut rep_parts = Vec::new();
    for layout in [EquationLayout::pentagon(), EquationLayout::pentagon_bar()] {
        let (l, r) = words(&layout, &ops)?;
        let a = compare_words(&space, &l, &r, &cols, None)?;
        rep_parts.push((layout.equation_id.clone(), a.rel()));
        acc.merge(&a);
    }
    let mut rep = ResidualReport::from_acc("pentagon", &acc, tol).param("d", s.d);
    for (id, rel) in rep_parts {
        rep = rep.param(&format!("{id}_rel"), rel);
    }
    Ok(rep.elapsed_since(start))
}

/// S12 S̄13 S14 S̄24 S34 = S̄24 S34 S̄14 S12 S̄13 on four sites.
pub fn verify_10term(s: &ComplexTensor, sbar: &ComplexTensor, tol: f64) -> Result<ResidualReport> {
    let start = Instant::now();
    let (s, sb) = (two_site(s)?, two_site(sbar)?);
    let ops: BTreeMap<String, &LocalOp> = [("S".to_string(), &s), ("Sbar".to_string(), &sb)].into_iter().collect();
    let layout = EquationLayout::ten_term();
    let space = Space::new(4, s.d)?;
    let (l, r) = words(&layout, &ops)?;
    let acc = compare_words(&space, &l, &r, &all_columns(&space), None)?;
    Ok(ResidualReport::from_acc("10term", &acc, tol).param("d", s.d).elapsed_since(start))
}

/// Resolves the operator names of a layout.
pub fn words<'a>(layout: &'a EquationLayout, ops: &BTreeMap<String, &'a LocalOp>) -> Result<(Vec<Placed<'a>>, Vec<Placed<'a>>)> {
    layout.validate()?;
    let res = |side: &'a [super::layout::PlacedName]| -> Result<Vec<Placed<'a>>> {
        side.iter()
            .map(|f| {
                let op = ops.get(&f.op).ok_or_else(|| Error::InvalidInput(format!("unknown operator {}", f.op)))?;
                Ok(place(op, &f.sites))
            })
            .collect()
    };
    Ok((res(&layout.lhs)?, res(&layout.rhs)?))
}

/// The pentagon relation of the adjoint family,
/// (S_c)_{23}(S_b)_{13}(S_a)_{12} = Σ_{d,e} M_{a,b,c}^{d,e} (S_d)_{12}(S_e)_{23},
/// aggregated over all label triples.
pub fn verify_peg_adjoint(m: &FiveLeg, tol: f64) -> Result<ResidualReport> {
    let start = Instant::now();
    let fam = adjoint_s(m)?;
    let (_, groups) = by_first_leg(m)?;
    let n = fam.len();
    let space = Space::new(3, fam.dim)?;
    let cols = all_columns(&space);
    let triples: Vec<(usize, usize, usize)> = (0..n).flat_map(|a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c)))).collect();
    let per: Vec<Result<Accumulator>> = triples
        .par_iter()
        .map(|&(a, b, c)| {
            let lhs = [place(fam.get(c), &[1, 2]), place(fam.get(b), &[0, 2]), place(fam.get(a), &[0, 1])];
            let terms: Vec<_> = groups[a].iter().filter(|(i, _)| i[0] == b && i[1] == c).map(|(i, v)| (i[2], i[3], *v)).collect();
            let mut acc = Accumulator::default();
            for &k in &cols {
                let s0 = basis_state(k);
                let l = apply_word(&space, &lhs, &s0)?;
                let mut r: State = new_map();
                for &(d, e, coef) in &terms {
                    let word = [place(fam.get(d), &[0, 1]), place(fam.get(e), &[1, 2])];
                    for (bra, x) in apply_word(&space, &word, &s0)? {
                        *r.entry(bra).or_insert(ZERO) += coef * x;
                    }
                }
                acc.merge(&state_acc(&l, &r));
            }
            Ok(acc)
        })
        .collect();
    let acc = merge_all(per)?;
    Ok(ResidualReport::from_acc("peg", &acc, tol).param("realization", "adjoint").param("labels", n).elapsed_since(start))
}

fn state_acc(l: &State, r: &State) -> Accumulator {
    use crate::sites::{state_distance_sqr, state_norm_sqr};
    Accumulator { lhs_sqr: state_norm_sqr(l), rhs_sqr: state_norm_sqr(r), diff_sqr: state_distance_sqr(l, r), count: 1 }
}

fn merge_all(per: Vec<Result<Accumulator>>) -> Result<Accumulator> {
    let mut acc = Accumulator::default();
    for p in per {
        acc.merge(&p?);
    }
    Ok(acc)
}

/// The generalized 10-term identity in the adjoint representation, for every
/// external label tuple (a1, a2, c1, c2):
///   Σ_b M̄^{b1,b2,b3}_{c1,c2} (S_{b1})_{12}(S̄^{a1})_{13}(S_{b2})_{14}(S̄^{a2})_{24}(S_{b3})_{34}
/// = Σ_b M_{b1,b2,b3}^{a1,a2} (S̄^{b3})_{24}(S_{c2})_{34}(S̄^{b2})_{14}(S_{c1})_{12}(S̄^{b1})_{13}.
pub fn verify_10g_operator(m: &FiveLeg, mbar: &FiveLeg, tol: f64) -> Result<ResidualReport> {
    let start = Instant::now();
    let s = adjoint_s(m)?;
    let sb = adjoint_sbar(mbar)?;
    if s.dim != sb.dim || s.len() != sb.len() {
        return Err(Error::InvalidInput("M and M̄ families differ in shape".into()));
    }
    let n = s.len();
    let (mt, mbt) = (m.to_tensor()?, mbar.to_tensor()?);
    // Coefficients keyed by the pair of fixed legs.
    let mut lhs_terms: BTreeMap<(usize, usize), Vec<([usize; 3], C64)>> = BTreeMap::new();
    for (lin, v) in mbt.entries() {
        let i = mbt.unravel(lin);
        lhs_terms.entry((i[3], i[4])).or_default().push(([i[0], i[1], i[2]], v));
    }
    let mut rhs_terms: BTreeMap<(usize, usize), Vec<([usize; 3], C64)>> = BTreeMap::new();
    for (lin, v) in mt.entries() {
        let i = mt.unravel(lin);
        rhs_terms.entry((i[3], i[4])).or_default().push(([i[0], i[1], i[2]], v));
    }
    let space = Space::new(4, s.dim)?;
    let cols = all_columns(&space);
    let labels: Vec<[usize; 4]> = (0..n.pow(4)).map(|x| [x / n.pow(3), (x / n / n) % n, (x / n) % n, x % n]).collect();
    let empty = Vec::new();
    let per: Vec<Result<Accumulator>> = labels
        .par_iter()
        .map(|&[a1, a2, c1, c2]| {
            let lt = lhs_terms.get(&(c1, c2)).unwrap_or(&empty);
            let rt = rhs_terms.get(&(a1, a2)).unwrap_or(&empty);
            let mut acc = Accumulator::default();
            for &k in &cols {
                let s0 = basis_state(k);
                let mut l: State = new_map();
                for &([b1, b2, b3], coef) in lt {
                    let w = [
                        place(s.get(b1), &[0, 1]),
                        place(sb.get(a1), &[0, 2]),
                        place(s.get(b2), &[0, 3]),
                        place(sb.get(a2), &[1, 3]),
                        place(s.get(b3), &[2, 3]),
                    ];
                    for (bra, x) in apply_word(&space, &w, &s0)? {
                        *l.entry(bra).or_insert(ZERO) += coef * x;
                    }
                }
                let mut r: State = new_map();
                for &([b1, b2, b3], coef) in rt {
                    let w = [
                        place(sb.get(b3), &[1, 3]),
                        place(s.get(c2), &[2, 3]),
                        place(sb.get(b2), &[0, 3]),
                        place(s.get(c1), &[0, 1]),
                        place(sb.get(b1), &[0, 2]),
                    ];
                    for (bra, x) in apply_word(&space, &w, &s0)? {
                        *r.entry(bra).or_insert(ZERO) += coef * x;
                    }
                }
                acc.merge(&state_acc(&l, &r));
            }
            Ok(acc)
        })
        .collect();
    let acc = merge_all(per)?;
    Ok(ResidualReport::from_acc("10g", &acc, tol).param("labels", n).param("family", m.family().label()).elapsed_since(start))
}

/// Swap of two sites of dimension d.
pub fn swap(d: usize) -> Result<LocalOp> {
    let mut t = ComplexTensor::sparse(&[d, d, d, d])?;
    for a in 0..d {
        for b in 0..d {
            t.set(&[a, b, b, a], ONE)?;
        }
    }
    LocalOp::from_tensor(&t)
}

/// S|x,y⟩ = |x+y, y⟩ over Z_N, a pentagon solution, with its inverse.
pub fn shift_solution(n: usize) -> Result<(ComplexTensor, ComplexTensor)> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    let make = |sign: i64| -> Result<ComplexTensor> {
        let mut t = ComplexTensor::sparse(&[n; 4])?;
        for x in 0..n {
            for y in 0..n {
                let bra = (x as i64 + sign * y as i64).rem_euclid(n as i64) as usize;
                t.set(&[bra, y, x, y], C64::new(1.0, 0.0))?;
            }
        }
        Ok(t)
    };
    Ok((make(1)?, make(-1)?))
}

pub(crate) fn dense_to_tensor(m: &crate::sites::DenseMatrix, sites: usize, d: usize) -> Result<ComplexTensor> {
    let mut t = ComplexTensor::sparse(&vec![d; 2 * sites])?;
    let n = m.n as u64;
    for i in 0..n {
        for k in 0..n {
            let v = m.get(i as usize, k as usize);
            if v != ZERO {
                t.add_linear(i * n + k, v);
            }
        }
    }
    Ok(t)
}

/// R = S_{13} P_{01} P_{23} S̄_{13} on sites 0..3.
pub fn build_r4_factorized(s: &ComplexTensor, sbar: &ComplexTensor) -> Result<ComplexTensor> {
    let (s, sb) = (two_site(s)?, two_site(sbar)?);
    let p = swap(s.d)?;
    let space = Space::new(4, s.d)?;
    let w = [place(&s, &[1, 3]), place(&p, &[0, 1]), place(&p, &[2, 3]), place(&sb, &[1, 3])];
    dense_to_tensor(&dense_word(&space, &w)?, 4, s.d)
}

/// R = S_{13} P_{23} S̄_{13} on sites 1..3 (0-based: S on (0,2), P on (1,2)).
pub fn build_r3_factorized(s: &ComplexTensor, sbar: &ComplexTensor) -> Result<ComplexTensor> {
    let (s, sb) = (two_site(s)?, two_site(sbar)?);
    let p = swap(s.d)?;
    let space = Space::new(3, s.d)?;
    let w = [place(&s, &[0, 2]), place(&p, &[1, 2]), place(&sb, &[0, 2])];
    dense_to_tensor(&dense_word(&space, &w)?, 3, s.d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::IndexDomain;
    use crate::fiveleg::{example1, Form};
    use crate::kernel::ExponentKernel;

    fn identity2(d: usize) -> ComplexTensor {
        LocalOp::identity(2, d).to_tensor().unwrap()
    }

    #[test]
    fn adjoint_family_entries() {
        let k = ExponentKernel::root_of_unity(2).unwrap();
        let m = example1(&k, &IndexDomain::cyclic(2), Form::M2).unwrap();
        let f = adjoint_s(&m).unwrap();
        assert_eq!(f.len(), 2);
        let t = f.get(0).to_tensor().unwrap();
        assert_eq!(t.get(&[0, 0, 0, 0]).unwrap(), ONE);
        let mt = m.to_tensor().unwrap();
        let fb = adjoint_sbar(&m).unwrap();
        let tb = fb.get(1).to_tensor().unwrap();
        for i in 0..16usize {
            let (i1, i2, k1, k2) = (i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1);
            assert_eq!(tb.get(&[i1, i2, k1, k2]).unwrap(), mt.get(&[1, k1, k2, i1, i2]).unwrap());
        }
    }

    #[test]
    fn pentagon_checks() {
        let id = identity2(3);
        assert_eq!(verify_pentagon(&id, &id, 1e-12).unwrap().abs_residual, 0.0);
        let (s, sinv) = shift_solution(3).unwrap();
        assert!(verify_pentagon(&s, &sinv, 1e-12).unwrap().pass);
        assert!(verify_10term(&s, &sinv, 1e-12).unwrap().pass);
        // a generic operator is not a solution
        let mut r = ComplexTensor::sparse(&[2; 4]).unwrap();
        for (i, v) in [0.3, -1.1, 0.7, 0.2, 0.9, 0.4, -0.6, 1.3].iter().enumerate() {
            r.set(&[i >> 2 & 1, i >> 1 & 1, i & 1, (i + 1) & 1], C64::new(*v, 0.1)).unwrap();
        }
        assert!(verify_pentagon(&r, &r, 1e-12).unwrap().rel_residual > 1e-2);
    }

    #[test]
    fn adjoint_pentagon_and_10g() {
        for n in [2, 3] {
            let k = ExponentKernel::root_of_unity(n).unwrap();
            let m = example1(&k, &IndexDomain::cyclic(n), Form::M2).unwrap();
            let r = verify_peg_adjoint(&m, 1e-12).unwrap();
            assert!(r.pass, "{r:?}");
            let mb = m.clone().as_barred(true);
            let r = verify_10g_operator(&m, &mb, 1e-12).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.lhs_norm > 0.0);
        }
        let k = ExponentKernel::root_of_unity(2).unwrap();
        let m = example1(&k, &IndexDomain::cyclic(2), Form::M2).unwrap();
        let bad = m.perturb_entry(&[1, 1, 0, 0, 1], 1e-3).unwrap();
        assert!(verify_peg_adjoint(&bad, 1e-12).unwrap().rel_residual > 1e-5);
    }

    #[test]
    fn factorized_r_with_identity_is_a_permutation() {
        let d = 2;
        let id = identity2(d);
        let r4 = build_r4_factorized(&id, &id).unwrap();
        let r3 = build_r3_factorized(&id, &id).unwrap();
        for i in 0..16usize {
            let v: Vec<usize> = (0..4).map(|s| i >> (3 - s) & 1).collect();
            // P01 P23 maps |k0 k1 k2 k3⟩ to |k1 k0 k3 k2⟩
            assert_eq!(r4.get(&[v[1], v[0], v[3], v[2], v[0], v[1], v[2], v[3]]).unwrap(), ONE);
        }
        assert_eq!(r4.nnz(), 16);
        assert_eq!(r3.nnz(), 8);
        assert_eq!(r3.get(&[0, 1, 0, 0, 0, 1]).unwrap(), ONE);
    }

    #[test]
    fn factorized_r4_inverts_with_inverse_factors() {
        let (s, sinv) = shift_solution(3).unwrap();
        let r = build_r4_factorized(&s, &sinv).unwrap();
        let n = 81;
        let dense = |f: &dyn Fn(usize, usize) -> C64| crate::sites::DenseMatrix { n, data: (0..n * n).map(|x| f(x / n, x % n)).collect() };
        let rm = dense(&|i, k| r.get_linear((i * n + k) as u64));
        // a real permutation matrix: the inverse is the transpose
        let rt = dense(&|i, k| r.get_linear((k * n + i) as u64));
        assert!(rm.matmul(&rt).distance(&crate::sites::DenseMatrix::identity(n)) <= 1e-12);
    }
}
