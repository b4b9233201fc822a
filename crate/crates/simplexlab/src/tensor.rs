//! Complex tensors with dense or sparse storage, and labeled pairwise contraction.
//!
//! Sparse entries are keyed by the row-major linear index. Maps use a fixed
//! hasher so iteration order, and with it every floating-point sum, is
//! reproducible between runs.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;
use std::io::{BufRead, Write};

pub type FixedState = BuildHasherDefault<DefaultHasher>;
pub type SparseMap = HashMap<u64, C64, FixedState>;

/// Default cap on the number of dense entries a single tensor may hold.
pub const DENSE_CAP: u128 = 1 << 31;

pub fn new_map() -> SparseMap {
    HashMap::with_hasher(FixedState::default())
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(Vec<C64>),
    Sparse(SparseMap),
}

#[derive(Clone, Debug)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    strides: Vec<u64>,
    storage: Storage,
}

/// Which storage a contraction should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputStorage {
    /// Dense only when both inputs are dense.
    Auto,
    Dense,
    Sparse,
}

fn strides_of(shape: &[usize]) -> Result<(Vec<u64>, u128)> {
    let mut strides = vec![0u64; shape.len()];
    let mut acc: u128 = 1;
    for (i, &s) in shape.iter().enumerate().rev() {
        if s == 0 {
            return Err(Error::Shape("zero-length axis".into()));
        }
        strides[i] = acc as u64;
        acc *= s as u128;
        if acc > u64::MAX as u128 {
            return Err(Error::TooLarge { need: acc, cap: u64::MAX as u128 });
        }
    }
    Ok((strides, acc))
}

impl ComplexTensor {
    pub fn zeros_dense(shape: &[usize]) -> Result<Self> {
        let (strides, total) = strides_of(shape)?;
        if total > DENSE_CAP {
            return Err(Error::TooLarge { need: total, cap: DENSE_CAP });
        }
        Ok(Self { shape: shape.to_vec(), strides, storage: Storage::Dense(vec![ZERO; total as usize]) })
    }

    pub fn dense(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        let (strides, total) = strides_of(shape)?;
        if total != data.len() as u128 {
            return Err(Error::Shape(format!("data length {} vs shape product {total}", data.len())));
        }
        Ok(Self { shape: shape.to_vec(), strides, storage: Storage::Dense(data) })
    }

    pub fn sparse(shape: &[usize]) -> Result<Self> {
        let (strides, _) = strides_of(shape)?;
        Ok(Self { shape: shape.to_vec(), strides, storage: Storage::Sparse(new_map()) })
    }

    pub fn from_fn_dense(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        let mut t = Self::zeros_dense(shape)?;
        let total = t.len();
        let mut idx = vec![0usize; shape.len()];
        if let Storage::Dense(data) = &mut t.storage {
            for (lin, slot) in data.iter_mut().enumerate().take(total as usize) {
                unravel_into(lin as u64, &t.shape, &mut idx);
                *slot = f(&idx);
            }
        }
        Ok(t)
    }

    pub fn from_entries(shape: &[usize], entries: impl IntoIterator<Item = (Vec<usize>, C64)>) -> Result<Self> {
        let mut t = Self::sparse(shape)?;
        for (idx, v) in entries {
            t.add_at(&idx, v)?;
        }
        Ok(t)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut t = Self::sparse(&[dim, dim])?;
        for i in 0..dim {
            t.set(&[i, i], C64::new(1.0, 0.0))?;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Total number of index tuples.
    pub fn len(&self) -> u64 {
        self.shape.iter().map(|&s| s as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.nnz() == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn linear(&self, idx: &[usize]) -> Result<u64> {
        if idx.len() != self.shape.len() {
            return Err(Error::Shape(format!("index of rank {} for tensor of rank {}", idx.len(), self.rank())));
        }
        let mut lin = 0u64;
        for ((&i, &s), &st) in idx.iter().zip(&self.shape).zip(&self.strides) {
            if i >= s {
                return Err(Error::Shape(format!("index {i} out of range {s}")));
            }
            lin += i as u64 * st;
        }
        Ok(lin)
    }

    pub fn unravel(&self, lin: u64) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        unravel_into(lin, &self.shape, &mut idx);
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<C64> {
        let lin = self.linear(idx)?;
        Ok(self.get_linear(lin))
    }

    pub fn get_linear(&self, lin: u64) -> C64 {
        match &self.storage {
            Storage::Dense(d) => d[lin as usize],
            Storage::Sparse(m) => m.get(&lin).copied().unwrap_or(ZERO),
        }
    }

    pub fn set(&mut self, idx: &[usize], v: C64) -> Result<()> {
        let lin = self.linear(idx)?;
        match &mut self.storage {
            Storage::Dense(d) => d[lin as usize] = v,
            Storage::Sparse(m) => {
                m.insert(lin, v);
            }
        }
        Ok(())
    }

    pub fn add_at(&mut self, idx: &[usize], v: C64) -> Result<()> {
        let lin = self.linear(idx)?;
        self.add_linear(lin, v);
        Ok(())
    }

    pub fn add_linear(&mut self, lin: u64, v: C64) {
        match &mut self.storage {
            Storage::Dense(d) => d[lin as usize] += v,
            Storage::Sparse(m) => *m.entry(lin).or_insert(ZERO) += v,
        }
    }

    /// Number of stored entries that are not exactly zero.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.iter().filter(|v| **v != ZERO).count(),
            Storage::Sparse(m) => m.values().filter(|v| **v != ZERO).count(),
        }
    }

    /// Nonzero entries in increasing linear order.
    pub fn entries(&self) -> Vec<(u64, C64)> {
        match &self.storage {
            Storage::Dense(d) => d.iter().enumerate().filter(|(_, v)| **v != ZERO).map(|(i, v)| (i as u64, *v)).collect(),
            Storage::Sparse(m) => {
                let mut e: Vec<(u64, C64)> = m.iter().filter(|(_, v)| **v != ZERO).map(|(k, v)| (*k, *v)).collect();
                e.sort_unstable_by_key(|x| x.0);
                e
            }
        }
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(u64, C64)) {
        match &self.storage {
            Storage::Dense(d) => {
                for (i, v) in d.iter().enumerate() {
                    if *v != ZERO {
                        f(i as u64, *v);
                    }
                }
            }
            Storage::Sparse(m) => {
                for (k, v) in m {
                    if *v != ZERO {
                        f(*k, *v);
                    }
                }
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d.iter().map(|v| v.norm_sqr()).sum(),
            Storage::Sparse(_) => self.entries().iter().map(|(_, v)| v.norm_sqr()).sum(),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        self.for_each_nonzero(|_, v| m = m.max(v.norm()));
        m
    }

    pub fn to_dense(&self) -> Result<Self> {
        match &self.storage {
            Storage::Dense(_) => Ok(self.clone()),
            Storage::Sparse(m) => {
                let mut t = Self::zeros_dense(&self.shape)?;
                if let Storage::Dense(d) = &mut t.storage {
                    for (k, v) in m {
                        d[*k as usize] = *v;
                    }
                }
                Ok(t)
            }
        }
    }

    pub fn to_sparse(&self) -> Self {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(d) => {
                let mut m = new_map();
                for (i, v) in d.iter().enumerate() {
                    if *v != ZERO {
                        m.insert(i as u64, *v);
                    }
                }
                Self { shape: self.shape.clone(), strides: self.strides.clone(), storage: Storage::Sparse(m) }
            }
        }
    }

    /// Drops sparse entries with modulus at or below `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        if let Storage::Sparse(m) = &mut self.storage {
            m.retain(|_, v| v.norm() > threshold);
        }
    }

    pub fn map_values(&self, mut f: impl FnMut(&[usize], C64) -> C64) -> Self {
        let mut out = self.clone();
        let shape = self.shape.clone();
        let mut idx = vec![0usize; shape.len()];
        match &mut out.storage {
            Storage::Dense(d) => {
                for (i, v) in d.iter_mut().enumerate() {
                    unravel_into(i as u64, &shape, &mut idx);
                    *v = f(&idx, *v);
                }
            }
            Storage::Sparse(m) => {
                for (k, v) in m.iter_mut() {
                    unravel_into(*k, &shape, &mut idx);
                    *v = f(&idx, *v);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_values(|_, v| v * c)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// self + c·other.
    pub fn axpy(&self, c: C64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = if self.is_dense() || other.is_dense() { self.to_dense()? } else { self.clone() };
        other.for_each_nonzero(|k, v| out.add_linear(k, c * v));
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// Frobenius norm of self − other without materializing the difference.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        let a = self.entries();
        let b = other.entries();
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
                acc += a[i].1.norm_sqr();
                i += 1;
            } else if i >= a.len() || b[j].0 < a[i].0 {
                acc += b[j].1.norm_sqr();
                j += 1;
            } else {
                acc += (a[i].1 - b[j].1).norm_sqr();
                i += 1;
                j += 1;
            }
        }
        Ok(acc.sqrt())
    }

    /// New tensor whose axis i is axis perm[i] of self.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape(format!("invalid permutation {perm:?} for rank {r}")));
        }
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut out = if self.is_dense() { Self::zeros_dense(&shape)? } else { Self::sparse(&shape)? };
        let new_strides: Vec<u64> = {
            let mut s = vec![0u64; r];
            for (i, &p) in perm.iter().enumerate() {
                s[p] = out.strides[i];
            }
            s
        };
        let mut idx = vec![0usize; r];
        self.for_each_nonzero(|k, v| {
            unravel_into(k, &self.shape, &mut idx);
            let lin: u64 = idx.iter().zip(&new_strides).map(|(&i, &s)| i as u64 * s).sum();
            out.add_linear(lin, v);
        });
        Ok(out)
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let (strides, total) = strides_of(shape)?;
        if total != self.len() as u128 {
            return Err(Error::Shape(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        Ok(Self { shape: shape.to_vec(), strides, storage: self.storage.clone() })
    }

    /// Writes the JSON-lines dump: a shape header, then one line per nonzero.
    pub fn write_jsonl(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", serde_json::to_string(&DumpHeader { shape: self.shape.clone() })?)?;
        for (lin, v) in self.entries() {
            writeln!(w, "{{\"idx\":{},\"re\":{},\"im\":{}}}", serde_json::to_string(&self.unravel(lin))?, fmt17(v.re), fmt17(v.im))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty tensor dump".into()))??;
        let header: DumpHeader = serde_json::from_str(&header)?;
        let mut t = Self::sparse(&header.shape)?;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: DumpEntry = serde_json::from_str(&line)?;
            t.set(&e.idx, C64::new(e.re, e.im))?;
        }
        Ok(t)
    }
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    shape: Vec<usize>,
}

#[derive(Deserialize)]
struct DumpEntry {
    idx: Vec<usize>,
    re: f64,
    im: f64,
}

/// A float with 17 significant digits, valid as JSON.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if !x.is_finite() {
        return "null".into();
    }
    format!("{x:.16e}")
}

fn unravel_into(mut lin: u64, shape: &[usize], idx: &mut [usize]) {
    for i in (0..shape.len()).rev() {
        let s = shape[i] as u64;
        idx[i] = (lin % s) as usize;
        lin /= s;
    }
}

/// Sums `a` and `b` over paired axes; output axes are the free axes of `a` then of `b`.
pub fn contract(a: &ComplexTensor, axes_a: &[usize], b: &ComplexTensor, axes_b: &[usize]) -> Result<ComplexTensor> {
    if axes_a.len() != axes_b.len() {
        return Err(Error::Shape("different numbers of paired axes".into()));
    }
    let mut la: Vec<usize> = (0..a.rank()).map(|i| 1000 + i).collect();
    let mut lb: Vec<usize> = (0..b.rank()).map(|i| 2000 + i).collect();
    for (k, (&x, &y)) in axes_a.iter().zip(axes_b).enumerate() {
        if x >= a.rank() || y >= b.rank() {
            return Err(Error::Shape("paired axis out of range".into()));
        }
        if a.shape[x] != b.shape[y] {
            return Err(Error::Shape(format!("paired axes of length {} and {}", a.shape[x], b.shape[y])));
        }
        la[x] = k;
        lb[y] = k;
    }
    let out: Vec<usize> = la.iter().chain(lb.iter()).copied().filter(|&l| l >= 1000).collect();
    contract_labeled(a, &la, b, &lb, &out, OutputStorage::Auto)
}

/// Outer product.
pub fn outer(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    contract(a, &[], b, &[])
}

/// Einsum-style pairwise contraction. Labels present in both inputs but not in
/// `out` are summed; labels in `out` are kept (shared ones act as batch axes).
/// A label may appear at most once per input.
pub fn contract_labeled(a: &ComplexTensor, la: &[usize], b: &ComplexTensor, lb: &[usize], out: &[usize], storage: OutputStorage) -> Result<ComplexTensor> {
    if la.len() != a.rank() || lb.len() != b.rank() {
        return Err(Error::Shape("label count differs from rank".into()));
    }
    for ls in [la, lb, out] {
        let mut s = ls.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Shape(format!("repeated label in {ls:?}")));
        }
    }
    let pos = |ls: &[usize], l: usize| ls.iter().position(|&x| x == l);
    let mut out_shape = Vec::with_capacity(out.len());
    for &l in out {
        let d = match (pos(la, l), pos(lb, l)) {
            (Some(i), Some(j)) => {
                if a.shape[i] != b.shape[j] {
                    return Err(Error::Shape(format!("label {l}: lengths {} and {}", a.shape[i], b.shape[j])));
                }
                a.shape[i]
            }
            (Some(i), None) => a.shape[i],
            (None, Some(j)) => b.shape[j],
            (None, None) => return Err(Error::Shape(format!("output label {l} absent from inputs"))),
        };
        out_shape.push(d);
    }
    for &l in la.iter().chain(lb) {
        let in_both = pos(la, l).is_some() && pos(lb, l).is_some();
        if !in_both && pos(out, l).is_none() {
            return Err(Error::Shape(format!("label {l} appears once and is not kept")));
        }
    }
    let shared: Vec<usize> = la.iter().copied().filter(|l| pos(lb, *l).is_some()).collect();
    for &l in &shared {
        if a.shape[pos(la, l).unwrap()] != b.shape[pos(lb, l).unwrap()] {
            return Err(Error::Shape(format!("label {l}: paired lengths differ")));
        }
    }

    let dense_out = match storage {
        OutputStorage::Dense => true,
        OutputStorage::Sparse => false,
        OutputStorage::Auto => a.is_dense() && b.is_dense(),
    };
    let mut result = if dense_out { ComplexTensor::zeros_dense(&out_shape)? } else { ComplexTensor::sparse(&out_shape)? };
    let out_strides = result.strides.clone();

    // Key of an entry on the shared labels, and its contribution to the output index.
    let plan = |ls: &[usize], t: &ComplexTensor, skip_shared: bool| {
        let mut shared_stride = vec![0u64; ls.len()];
        let mut out_stride = vec![0u64; ls.len()];
        let mut acc = 1u64;
        for &l in shared.iter().rev() {
            let i = pos(ls, l).unwrap();
            shared_stride[i] = acc;
            acc *= t.shape[i] as u64;
        }
        for (i, &l) in ls.iter().enumerate() {
            if let Some(o) = pos(out, l) {
                let is_shared = shared.contains(&l);
                if !is_shared || !skip_shared {
                    out_stride[i] = out_strides[o];
                }
            }
        }
        (shared_stride, out_stride)
    };
    // Batch labels contribute to the output through `a` only.
    let (ssa, osa) = plan(la, a, false);
    let (ssb, osb) = plan(lb, b, true);

    let keyed = |t: &ComplexTensor, ss: &[u64], os: &[u64]| {
        let mut v = Vec::new();
        let mut idx = vec![0usize; t.rank()];
        for (lin, val) in t.entries() {
            unravel_into(lin, &t.shape, &mut idx);
            let mut sk = 0u64;
            let mut ok = 0u64;
            for i in 0..idx.len() {
                sk += idx[i] as u64 * ss[i];
                ok += idx[i] as u64 * os[i];
            }
            v.push((sk, ok, val));
        }
        v
    };
    let ea = keyed(a, &ssa, &osa);
    let eb = keyed(b, &ssb, &osb);
    let (small, large, small_is_b) = if eb.len() <= ea.len() { (&eb, &ea, true) } else { (&ea, &eb, false) };
    let mut groups: HashMap<u64, Vec<(u64, C64)>, FixedState> = HashMap::with_hasher(FixedState::default());
    for &(sk, ok, v) in small {
        groups.entry(sk).or_default().push((ok, v));
    }
    for &(sk, ok, v) in large {
        if let Some(g) = groups.get(&sk) {
            for &(ok2, v2) in g {
                let prod = if small_is_b { v * v2 } else { v2 * v };
                result.add_linear(ok + ok2, prod);
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn mat(rows: &[&[f64]]) -> ComplexTensor {
        let n = rows.len();
        let m = rows[0].len();
        ComplexTensor::dense(&[n, m], rows.iter().flat_map(|r| r.iter().map(|&x| c(x, 0.0))).collect()).unwrap()
    }

    #[test]
    fn matrix_product() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = mat(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let p = contract(&a, &[1], &b, &[0]).unwrap();
        assert!(p.is_dense());
        let want = [19.0, 22.0, 43.0, 50.0];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(p.get_linear(i as u64), c(*w, 0.0));
        }
    }

    #[test]
    fn sparse_input_gives_sparse_output() {
        let id = ComplexTensor::identity(2).unwrap();
        let b = mat(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let p = contract(&id, &[1], &b, &[0]).unwrap();
        assert!(!p.is_dense());
        assert!(p.distance(&b).unwrap() < 1e-15);
    }

    #[test]
    fn outer_norm_multiplies() {
        let a = mat(&[&[1.0, 2.0]]);
        let b = mat(&[&[3.0], &[4.0]]);
        let o = outer(&a, &b).unwrap();
        assert_eq!(o.shape(), &[1, 2, 2, 1]);
        assert!((o.norm() - a.norm() * b.norm()).abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = mat(&[&[1.0, 2.0]]);
        let b = mat(&[&[1.0, 2.0, 3.0]]);
        assert!(contract(&a, &[1], &b, &[1]).is_err());
    }

    #[test]
    fn batch_labels_keep_diagonal() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = mat(&[&[5.0, 6.0], &[7.0, 8.0]]);
        // out[i,j] = a[i,j] * b[i,j]
        let h = contract_labeled(&a, &[0, 1], &b, &[0, 1], &[0, 1], OutputStorage::Sparse).unwrap();
        assert_eq!(h.get(&[1, 0]).unwrap(), c(21.0, 0.0));
    }

    #[test]
    fn permute_transposes() {
        let a = mat(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let t = a.permute(&[1, 0]).unwrap();
        assert_eq!(t.shape(), &[3, 2]);
        assert_eq!(t.get(&[2, 1]).unwrap(), c(6.0, 0.0));
    }

    #[test]
    fn jsonl_roundtrip() {
        let t = ComplexTensor::from_entries(&[2, 3], vec![(vec![1, 2], c(0.1, -1.0 / 3.0)), (vec![0, 0], c(1.0, 0.0))]).unwrap();
        let s = t.to_jsonl();
        assert!(s.starts_with("{\"shape\":[2,3]}"));
        let back = ComplexTensor::read_jsonl(s.as_bytes()).unwrap();
        assert_eq!(back.distance(&t).unwrap(), 0.0);
    }
}
