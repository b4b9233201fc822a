//! Operators on products of identical local sites.
//!
//! An operator on k sites is a tensor of rank 2k over local dimension d, bra
//! axes first: ⟨i_1..i_k| X |k_1..k_k⟩ = X[i_1, .., i_k, k_1, .., k_k].
//! Global basis states are numbered with site 0 as the most significant digit.
//! Operator words are written left to right and act on kets right to left.

use crate::error::{Error, Result};
use crate::report::Accumulator;
use crate::tensor::{new_map, ComplexTensor, SparseMap, DENSE_CAP};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub type State = SparseMap;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    pub sites: usize,
    pub d: usize,
    pow: Vec<u64>,
}

impl Space {
    pub fn new(sites: usize, d: usize) -> Result<Self> {
        let total = (d as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
        if d == 0 || total > u64::MAX as u128 {
            return Err(Error::TooLarge { need: total, cap: u64::MAX as u128 });
        }
        let pow = (0..sites).map(|s| (d as u64).pow((sites - 1 - s) as u32)).collect();
        Ok(Space { sites, d, pow })
    }

    pub fn dim(&self) -> u64 {
        (self.d as u64).pow(self.sites as u32)
    }

    pub fn digit(&self, basis: u64, site: usize) -> usize {
        ((basis / self.pow[site]) % self.d as u64) as usize
    }

    pub fn digits(&self, basis: u64) -> Vec<usize> {
        (0..self.sites).map(|s| self.digit(basis, s)).collect()
    }

    pub fn basis(&self, digits: &[usize]) -> u64 {
        digits.iter().zip(&self.pow).map(|(&x, &p)| x as u64 * p).sum()
    }
}

/// A k-site operator stored by columns: for every local ket, its nonzero bras.
#[derive(Clone, Debug)]
pub struct LocalOp {
    pub k: usize,
    pub d: usize,
    cols: Vec<Vec<(u64, C64)>>,
}

impl LocalOp {
    pub fn from_tensor(t: &ComplexTensor) -> Result<Self> {
        let r = t.rank();
        if r == 0 || r % 2 != 0 {
            return Err(Error::Shape(format!("operator tensor must have even rank, got {r}")));
        }
        let d = t.shape()[0];
        if t.shape().iter().any(|&s| s != d) {
            return Err(Error::Shape(format!("operator axes must share one length: {:?}", t.shape())));
        }
        let k = r / 2;
        let dim = (d as u64).pow(k as u32);
        let mut cols = vec![Vec::new(); dim as usize];
        for (lin, v) in t.entries() {
            let bra = lin / dim;
            let ket = lin % dim;
            cols[ket as usize].push((bra, v));
        }
        Ok(LocalOp { k, d, cols })
    }

    pub fn identity(k: usize, d: usize) -> Self {
        let dim = (d as u64).pow(k as u32);
        LocalOp { k, d, cols: (0..dim).map(|i| vec![(i, C64::new(1.0, 0.0))]).collect() }
    }

    pub fn dim(&self) -> u64 {
        self.cols.len() as u64
    }

    pub fn column(&self, ket: u64) -> &[(u64, C64)] {
        &self.cols[ket as usize]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn to_tensor(&self) -> Result<ComplexTensor> {
        let mut t = ComplexTensor::sparse(&vec![self.d; 2 * self.k])?;
        let dim = self.dim();
        let shape = vec![self.d; 2 * self.k];
        for (ket, col) in self.cols.iter().enumerate() {
            for &(bra, v) in col {
                let lin = bra * dim + ket as u64;
                let mut idx = vec![0usize; 2 * self.k];
                let mut l = lin;
                for i in (0..shape.len()).rev() {
                    idx[i] = (l % self.d as u64) as usize;
                    l /= self.d as u64;
                }
                t.add_at(&idx, v)?;
            }
        }
        Ok(t)
    }
}

/// An operator placed on named sites.
#[derive(Clone, Copy, Debug)]
pub struct Placed<'a> {
    pub op: &'a LocalOp,
    pub sites: &'a [usize],
}

pub fn basis_state(b: u64) -> State {
    let mut s = new_map();
    s.insert(b, C64::new(1.0, 0.0));
    s
}

fn check_sites(space: &Space, op: &LocalOp, sites: &[usize]) -> Result<()> {
    if sites.len() != op.k || op.d != space.d {
        return Err(Error::Shape(format!("operator on {} sites of dim {} placed on {:?} in a space of dim {}", op.k, op.d, sites, space.d)));
    }
    for (i, &s) in sites.iter().enumerate() {
        if s >= space.sites || sites[..i].contains(&s) {
            return Err(Error::InvalidInput(format!("bad site list {sites:?}")));
        }
    }
    Ok(())
}

pub fn apply(space: &Space, op: &LocalOp, sites: &[usize], state: &State) -> Result<State> {
    check_sites(space, op, sites)?;
    let mut out = new_map();
    let mut entries: Vec<(u64, C64)> = state.iter().map(|(k, v)| (*k, *v)).collect();
    entries.sort_unstable_by_key(|e| e.0);
    let d = space.d as u64;
    for (b, amp) in entries {
        let mut ket = 0u64;
        let mut rest = b;
        for &s in sites {
            let x = space.digit(b, s) as u64;
            ket = ket * d + x;
            rest -= x * space.pow[s];
        }
        for &(bra, v) in op.column(ket) {
            let mut nb = rest;
            let mut l = bra;
            for &s in sites.iter().rev() {
                nb += (l % d) * space.pow[s];
                l /= d;
            }
            *out.entry(nb).or_insert(ZERO) += amp * v;
        }
    }
    out.retain(|_, v| *v != ZERO);
    Ok(out)
}

/// Applies a word written left to right (the rightmost factor acts first).
pub fn apply_word(space: &Space, word: &[Placed], state: &State) -> Result<State> {
    let mut s = state.clone();
    for p in word.iter().rev() {
        s = apply(space, p.op, p.sites, &s)?;
    }
    Ok(s)
}

pub fn state_distance_sqr(a: &State, b: &State) -> f64 {
    let mut acc = 0.0;
    for (k, v) in a {
        acc += (v - b.get(k).copied().unwrap_or(ZERO)).norm_sqr();
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            acc += v.norm_sqr();
        }
    }
    acc
}

pub fn state_norm_sqr(a: &State) -> f64 {
    a.values().map(|v| v.norm_sqr()).sum()
}

pub type RowFilter<'a> = &'a (dyn Fn(u64) -> bool + Sync);

/// Applies both words to every listed basis column and accumulates squared
/// norms. Rows rejected by `rows` are ignored.
pub fn compare_words(space: &Space, lhs: &[Placed], rhs: &[Placed], columns: &[u64], rows: Option<RowFilter>) -> Result<Accumulator> {
    let per: Vec<Result<Accumulator>> = columns
        .par_iter()
        .map(|&c| {
            let s0 = basis_state(c);
            let mut l = apply_word(space, lhs, &s0)?;
            let mut r = apply_word(space, rhs, &s0)?;
            if let Some(f) = rows {
                l.retain(|k, _| f(*k));
                r.retain(|k, _| f(*k));
            }
            Ok(Accumulator { lhs_sqr: state_norm_sqr(&l), rhs_sqr: state_norm_sqr(&r), diff_sqr: state_distance_sqr(&l, &r), count: 1 })
        })
        .collect();
    let mut acc = Accumulator::default();
    for a in per {
        acc.merge(&a?);
    }
    Ok(acc)
}

/// Like [`compare_words`] but also returns the largest per-column relative residual.
pub fn compare_words_per_column(space: &Space, lhs: &[Placed], rhs: &[Placed], columns: &[u64]) -> Result<(Accumulator, f64)> {
    let per: Vec<Result<Accumulator>> = columns
        .par_iter()
        .map(|&c| {
            let s0 = basis_state(c);
            let l = apply_word(space, lhs, &s0)?;
            let r = apply_word(space, rhs, &s0)?;
            Ok(Accumulator { lhs_sqr: state_norm_sqr(&l), rhs_sqr: state_norm_sqr(&r), diff_sqr: state_distance_sqr(&l, &r), count: 1 })
        })
        .collect();
    let mut acc = Accumulator::default();
    let mut worst: f64 = 0.0;
    for a in per {
        let a = a?;
        worst = worst.max(a.rel());
        acc.merge(&a);
    }
    Ok((acc, worst))
}

pub fn embed_on_sites(op: &ComplexTensor, sites: &[usize], total_sites: usize, local_dim: usize) -> Result<ComplexTensor> {
    embed_on_sites_capped(op, sites, total_sites, local_dim, DENSE_CAP)
}

/// Operator on `total_sites` acting as `op` on `sites` and as the identity elsewhere.
pub fn embed_on_sites_capped(op: &ComplexTensor, sites: &[usize], total_sites: usize, local_dim: usize, cap: u128) -> Result<ComplexTensor> {
    let lop = LocalOp::from_tensor(op)?;
    if lop.d != local_dim {
        return Err(Error::Shape(format!("operator local dim {} vs {local_dim}", lop.d)));
    }
    let space = Space::new(total_sites, local_dim)?;
    check_sites(&space, &lop, sites)?;
    let entries = (local_dim as u128).pow(2 * total_sites as u32);
    if entries > cap && op.is_dense() {
        return Err(Error::TooLarge { need: entries, cap });
    }
    let shape = vec![local_dim; 2 * total_sites];
    let dim = space.dim();
    let others: Vec<usize> = (0..total_sites).filter(|s| !sites.contains(s)).collect();
    let n_other = (local_dim as u64).pow(others.len() as u32);
    let mut out = if op.is_dense() { ComplexTensor::zeros_dense(&shape)? } else { ComplexTensor::sparse(&shape)? };
    let d = local_dim as u64;
    for ket_local in 0..lop.dim() {
        for &(bra_local, v) in lop.column(ket_local) {
            for o in 0..n_other {
                let mut digits_k = vec![0usize; total_sites];
                let mut digits_b = vec![0usize; total_sites];
                let mut r = o;
                for &s in others.iter().rev() {
                    digits_k[s] = (r % d) as usize;
                    digits_b[s] = digits_k[s];
                    r /= d;
                }
                let (mut kl, mut bl) = (ket_local, bra_local);
                for &s in sites.iter().rev() {
                    digits_k[s] = (kl % d) as usize;
                    digits_b[s] = (bl % d) as usize;
                    kl /= d;
                    bl /= d;
                }
                let lin = space.basis(&digits_b) * dim + space.basis(&digits_k);
                out.add_linear(lin, v);
            }
        }
    }
    Ok(out)
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(1.0, 0.0);
        }
        DenseMatrix { n, data }
    }

    /// Dense matrix of a placed operator on the whole space.
    pub fn embed(space: &Space, op: &LocalOp, sites: &[usize]) -> Result<Self> {
        let n = space.dim();
        if (n as u128) * (n as u128) > DENSE_CAP {
            return Err(Error::TooLarge { need: n as u128 * n as u128, cap: DENSE_CAP });
        }
        let n = n as usize;
        let mut data = vec![ZERO; n * n];
        for ket in 0..n as u64 {
            for (bra, v) in apply(space, op, sites, &basis_state(ket))? {
                data[bra as usize * n + ket as usize] = v;
            }
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    /// self · b, skipping zero entries of b.
    pub fn matmul(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let rows_b: Vec<Vec<(usize, C64)>> = (0..n)
            .map(|k| {
                (0..n)
                    .filter_map(|j| {
                        let v = b.data[k * n + j];
                        (v != ZERO).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        let data: Vec<C64> = self
            .data
            .par_chunks(n)
            .flat_map_iter(|row| {
                let mut out = vec![ZERO; n];
                for (k, &a) in row.iter().enumerate() {
                    if a == ZERO {
                        continue;
                    }
                    for &(j, v) in &rows_b[k] {
                        out[j] += a * v;
                    }
                }
                out
            })
            .collect();
        DenseMatrix { n, data }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, o: &DenseMatrix) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// Dense product of a word, written left to right.
pub fn dense_word(space: &Space, word: &[Placed]) -> Result<DenseMatrix> {
    let mut acc = DenseMatrix::identity(space.dim() as usize);
    for p in word {
        acc = acc.matmul(&DenseMatrix::embed(space, p.op, p.sites)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap(d: usize) -> ComplexTensor {
        let mut t = ComplexTensor::sparse(&[d, d, d, d]).unwrap();
        for a in 0..d {
            for b in 0..d {
                t.set(&[b, a, a, b], C64::new(1.0, 0.0)).unwrap();
            }
        }
        t
    }

    #[test]
    fn permutation_acts_on_basis() {
        let space = Space::new(3, 3).unwrap();
        let p = LocalOp::from_tensor(&swap(3)).unwrap();
        let v = apply(&space, &p, &[0, 1], &basis_state(space.basis(&[1, 2, 0]))).unwrap();
        assert_eq!(v.get(&space.basis(&[2, 1, 0])), Some(&C64::new(1.0, 0.0)));
    }

    #[test]
    fn embed_identity_is_identity() {
        let id = ComplexTensor::identity(2).unwrap().reshape(&[2, 2]).unwrap();
        let e = embed_on_sites(&id, &[1], 3, 2).unwrap();
        for i in 0..8u64 {
            for j in 0..8u64 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(e.get_linear(i * 8 + j), C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn embed_matches_kronecker_oracle() {
        // a 2-site operator on sites (0,2) of 3, against an explicit reorder.
        let op = ComplexTensor::from_fn_dense(&[2, 2, 2, 2], |i| C64::new((i[0] * 8 + i[1] * 4 + i[2] * 2 + i[3]) as f64 + 1.0, i[1] as f64)).unwrap();
        let e = embed_on_sites(&op, &[0, 2], 3, 2).unwrap();
        for b in 0..8usize {
            for k in 0..8usize {
                let (b0, b1, b2) = (b >> 2 & 1, b >> 1 & 1, b & 1);
                let (k0, k1, k2) = (k >> 2 & 1, k >> 1 & 1, k & 1);
                let want = if b1 == k1 { op.get(&[b0, b2, k0, k2]).unwrap() } else { ZERO };
                assert_eq!(e.get_linear((b * 8 + k) as u64), want);
            }
        }
    }

    #[test]
    fn repeated_sites_rejected() {
        assert!(embed_on_sites(&swap(2), &[1, 1], 3, 2).is_err());
    }

    #[test]
    fn dense_and_sparse_words_agree() {
        let space = Space::new(3, 2).unwrap();
        let p = LocalOp::from_tensor(&swap(2)).unwrap();
        let word = [Placed { op: &p, sites: &[0, 1] }, Placed { op: &p, sites: &[1, 2] }];
        let m = dense_word(&space, &word).unwrap();
        for k in 0..8u64 {
            let v = apply_word(&space, &word, &basis_state(k)).unwrap();
            for (b, x) in v {
                assert_eq!(m.get(b as usize, k as usize), x);
            }
        }
    }
}
