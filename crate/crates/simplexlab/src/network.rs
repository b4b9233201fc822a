//! Factor networks over integer variables.
//!
//! Each side of an index-level identity is a product of elementary factors
//! (Kronecker deltas, phases, weight ratios, or table lookups) summed over its
//! internal variables. A network is materialized for a choice of fixed
//! variables, split into connected components, and each component is reduced
//! by greedy pairwise contraction down to its kept variables.

use crate::domain::IndexDomain;
use crate::error::{Error, Result};
use crate::tensor::{contract_labeled, ComplexTensor, OutputStorage};
use num_complex::Complex64 as C64;
use rand::Rng;
use std::sync::Arc;

pub type VarId = usize;
pub type KernelFn = Arc<dyn Fn(&[i64]) -> C64 + Send + Sync>;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub lo: i64,
    pub size: usize,
    /// Values are residues mod this number when set.
    pub modulus: Option<i64>,
}

impl Var {
    pub fn range(name: &str, lo: i64, hi: i64) -> Self {
        Var { name: name.to_string(), lo, size: (hi - lo + 1).max(1) as usize, modulus: None }
    }

    pub fn cyclic(name: &str, n: u32) -> Self {
        Var { name: name.to_string(), lo: 0, size: n as usize, modulus: Some(n as i64) }
    }

    pub fn from_domain(name: &str, d: &IndexDomain) -> Self {
        match d {
            IndexDomain::Cyclic { n } => Var::cyclic(name, *n),
            _ => Var::range(name, d.lo(), d.hi()),
        }
    }

    pub fn position(&self, v: i64) -> Option<usize> {
        match self.modulus {
            Some(n) => Some(v.rem_euclid(n) as usize),
            None => {
                let p = v - self.lo;
                (p >= 0 && (p as usize) < self.size).then_some(p as usize)
            }
        }
    }

    pub fn value(&self, pos: usize) -> i64 {
        self.lo + pos as i64
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.size as i64 - 1
    }
}

#[derive(Clone)]
pub enum Kernel {
    /// A function of the slot values. `constraint`, when present, lists
    /// coefficients c with Σ c_i x_i = 0 on the support; it only guides
    /// enumeration, the function itself must vanish off the support.
    Func { f: KernelFn, constraint: Option<Vec<i64>> },
    /// Lookup in a tensor; axis i reads the slots of `domains[i]`'s components.
    Table { tensor: Arc<ComplexTensor>, domains: Vec<IndexDomain> },
}

#[derive(Clone)]
pub struct ElemFactor {
    pub slots: Vec<VarId>,
    pub kernel: Kernel,
}

impl ElemFactor {
    pub fn func(slots: Vec<VarId>, f: KernelFn) -> Self {
        ElemFactor { slots, kernel: Kernel::Func { f, constraint: None } }
    }

    pub fn delta_func(slots: Vec<VarId>, coeffs: Vec<i64>, f: KernelFn) -> Self {
        ElemFactor { slots, kernel: Kernel::Func { f, constraint: Some(coeffs) } }
    }

    pub fn table(slots: Vec<VarId>, tensor: Arc<ComplexTensor>, domains: Vec<IndexDomain>) -> Self {
        ElemFactor { slots, kernel: Kernel::Table { tensor, domains } }
    }

    pub fn eval(&self, vals: &[i64]) -> C64 {
        self.kernel.eval(vals)
    }
}

impl Kernel {
    pub fn eval(&self, vals: &[i64]) -> C64 {
        match self {
            Kernel::Func { f, .. } => f(vals),
            Kernel::Table { tensor, domains } => {
                let mut idx = Vec::with_capacity(domains.len());
                let mut k = 0;
                for d in domains {
                    let n = d.components().len();
                    match d.flatten(&vals[k..k + n]) {
                        Some(p) => idx.push(p),
                        None => return C64::new(0.0, 0.0),
                    }
                    k += n;
                }
                tensor.get(&idx).unwrap_or(C64::new(0.0, 0.0))
            }
        }
    }

    pub fn constraint(&self) -> Option<&[i64]> {
        match self {
            Kernel::Func { constraint: Some(c), .. } => Some(c),
            _ => None,
        }
    }
}

/// A materialized factor: a tensor whose axes are the listed variables.
#[derive(Clone, Debug)]
pub struct Factor {
    pub vars: Vec<VarId>,
    pub tensor: ComplexTensor,
}

#[derive(Clone, Debug)]
pub struct Contracted {
    /// Independent groups over disjoint sets of kept variables.
    pub groups: Vec<Factor>,
    pub scalar: C64,
}

impl Contracted {
    pub fn value(&self) -> C64 {
        let mut v = self.scalar;
        for g in &self.groups {
            if g.vars.is_empty() {
                v *= g.tensor.get_linear(0);
            }
        }
        v
    }
}

#[derive(Clone, Default)]
pub struct Network {
    pub vars: Vec<Var>,
    pub factors: Vec<ElemFactor>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, v: Var) -> VarId {
        self.vars.push(v);
        self.vars.len() - 1
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn push(&mut self, f: ElemFactor) {
        self.factors.push(f);
    }

    pub fn materialize(&self, fixed: &[Option<i64>]) -> Result<Vec<Factor>> {
        self.factors.iter().map(|f| self.materialize_one(f, fixed)).collect()
    }

    fn materialize_one(&self, ef: &ElemFactor, fixed: &[Option<i64>]) -> Result<Factor> {
        let mut free: Vec<VarId> = Vec::new();
        for &s in &ef.slots {
            if fixed[s].is_none() && !free.contains(&s) {
                free.push(s);
            }
        }
        let shape: Vec<usize> = free.iter().map(|&v| self.vars[v].size).collect();
        let slot_free: Vec<Option<usize>> = ef.slots.iter().map(|s| free.iter().position(|f| f == s)).collect();
        let mut vals: Vec<i64> = ef.slots.iter().map(|&s| fixed[s].unwrap_or(0)).collect();
        let mut out = ComplexTensor::sparse(if shape.is_empty() { &[1] } else { &shape })?;
        if free.is_empty() {
            out.set(&[0], ef.eval(&vals))?;
            return Ok(Factor { vars: vec![], tensor: out.reshape(&[1])? });
        }

        match &ef.kernel {
            Kernel::Table { tensor, domains } => {
                let comps: Vec<usize> = domains.iter().map(|d| d.components().len()).collect();
                'entries: for (lin, v) in tensor.entries() {
                    let idx = tensor.unravel(lin);
                    let mut tvals = Vec::with_capacity(ef.slots.len());
                    for (ax, d) in domains.iter().enumerate() {
                        tvals.extend(d.unflatten(idx[ax]));
                        debug_assert_eq!(d.components().len(), comps[ax]);
                    }
                    let mut pos = vec![usize::MAX; free.len()];
                    for (k, &s) in ef.slots.iter().enumerate() {
                        let x = tvals[k];
                        match fixed[s] {
                            Some(fv) => {
                                if !same_value(&self.vars[s], fv, x) {
                                    continue 'entries;
                                }
                            }
                            None => {
                                let fi = slot_free[k].unwrap();
                                let p = match self.vars[s].position(x) {
                                    Some(p) => p,
                                    None => continue 'entries,
                                };
                                if pos[fi] != usize::MAX && pos[fi] != p {
                                    continue 'entries;
                                }
                                pos[fi] = p;
                            }
                        }
                    }
                    out.add_at(&pos, v)?;
                }
            }
            Kernel::Func { f, constraint } => {
                // Pick a slot whose variable is free, occurs once, and has a unit coefficient.
                let solve = constraint.as_ref().and_then(|c| {
                    (0..ef.slots.len()).find(|&k| slot_free[k].is_some() && c[k].abs() == 1 && ef.slots.iter().filter(|&&s| s == ef.slots[k]).count() == 1)
                });
                let solved_free = solve.map(|k| slot_free[k].unwrap());
                let iter_vars: Vec<usize> = (0..free.len()).filter(|&i| Some(i) != solved_free).collect();
                let mut pos = vec![0usize; free.len()];
                loop {
                    for (k, &s) in ef.slots.iter().enumerate() {
                        if let Some(fi) = slot_free[k] {
                            vals[k] = self.vars[s].value(pos[fi]);
                        }
                    }
                    let mut ok = true;
                    if let (Some(k), Some(c)) = (solve, constraint.as_ref()) {
                        let rest: i64 = (0..ef.slots.len()).filter(|&i| i != k).map(|i| c[i] * vals[i]).sum();
                        let x = -c[k] * rest;
                        let var = &self.vars[ef.slots[k]];
                        match var.position(x) {
                            Some(p) => {
                                pos[solved_free.unwrap()] = p;
                                vals[k] = var.value(p);
                            }
                            None => ok = false,
                        }
                    }
                    if ok {
                        let v = f(&vals);
                        if v != C64::new(0.0, 0.0) {
                            out.add_at(&pos, v)?;
                        }
                    }
                    // odometer over the iterated free variables
                    let mut i = iter_vars.len();
                    loop {
                        if i == 0 {
                            return finish(free, out);
                        }
                        i -= 1;
                        let fi = iter_vars[i];
                        pos[fi] += 1;
                        if pos[fi] < shape[fi] {
                            break;
                        }
                        pos[fi] = 0;
                    }
                }
            }
        }
        finish(free, out)
    }

    /// Contracts the network with some variables fixed, keeping `keep` open.
    pub fn contract(&self, fixed: &[Option<i64>], keep: &[VarId]) -> Result<Contracted> {
        let factors = self.materialize(fixed)?;
        contract_factors(factors, keep)
    }

    /// Scalar value with every non-internal variable fixed.
    pub fn value(&self, fixed: &[Option<i64>]) -> Result<C64> {
        Ok(self.contract(fixed, &[])?.value())
    }

    /// Shrinks the ranges of non-cyclic variables listed in `free` using the
    /// linear constraints, given the current ranges of all other variables.
    /// Returns false if some range became empty.
    pub fn tighten_ranges(&mut self, free: &[VarId]) -> bool {
        let mut lo: Vec<i64> = self.vars.iter().map(|v| v.lo).collect();
        let mut hi: Vec<i64> = self.vars.iter().map(|v| v.hi()).collect();
        let mut changed = true;
        let mut rounds = 0;
        while changed && rounds < 64 {
            changed = false;
            rounds += 1;
            for ef in &self.factors {
                let c = match ef.kernel.constraint() {
                    Some(c) => c,
                    None => continue,
                };
                if ef.slots.iter().any(|&s| self.vars[s].modulus.is_some()) {
                    continue;
                }
                for k in 0..ef.slots.len() {
                    let v = ef.slots[k];
                    if c[k].abs() != 1 || !free.contains(&v) || ef.slots.iter().filter(|&&s| s == v).count() > 1 {
                        continue;
                    }
                    // x_k = -c_k * sum_{i != k} c_i x_i
                    let (mut smin, mut smax) = (0i64, 0i64);
                    for i in 0..ef.slots.len() {
                        if i == k {
                            continue;
                        }
                        let t = -c[k] * c[i];
                        let (a, b) = (t * lo[ef.slots[i]], t * hi[ef.slots[i]]);
                        smin += a.min(b);
                        smax += a.max(b);
                    }
                    if smin > lo[v] {
                        lo[v] = smin;
                        changed = true;
                    }
                    if smax < hi[v] {
                        hi[v] = smax;
                        changed = true;
                    }
                    if lo[v] > hi[v] {
                        return false;
                    }
                }
            }
        }
        for &v in free {
            if self.vars[v].modulus.is_none() {
                self.vars[v].lo = lo[v];
                self.vars[v].size = (hi[v] - lo[v] + 1) as usize;
            }
        }
        true
    }

    /// Draws values for `ext` from a random point of the network's support.
    ///
    /// Variables are assigned in random order; unit-coefficient constraints
    /// with a single unassigned slot are solved immediately. Externals are
    /// drawn from `ext_range`, free internals from `int_range`. Returns None
    /// if no nonzero configuration was found within `tries` attempts.
    pub fn sample_support<R: Rng>(&self, ext: &[VarId], ext_range: (i64, i64), int_range: (i64, i64), rng: &mut R, tries: usize) -> Option<Vec<i64>> {
        let n = self.vars.len();
        let in_range = |v: VarId, x: i64| -> bool {
            let var = &self.vars[v];
            if var.modulus.is_some() {
                return true;
            }
            let (lo, hi) = if ext.contains(&v) { ext_range } else { (var.lo, var.hi()) };
            x >= lo.max(var.lo) && x <= hi.min(var.hi())
        };
        'attempt: for _ in 0..tries {
            let mut val: Vec<Option<i64>> = vec![None; n];
            loop {
                // propagate
                let mut changed = true;
                while changed {
                    changed = false;
                    for ef in &self.factors {
                        let c = match ef.kernel.constraint() {
                            Some(c) => c,
                            None => continue,
                        };
                        let open: Vec<usize> = (0..ef.slots.len()).filter(|&k| val[ef.slots[k]].is_none()).collect();
                        if open.len() == 1 && c[open[0]].abs() == 1 {
                            let k = open[0];
                            let rest: i64 = (0..ef.slots.len()).filter(|&i| i != k).map(|i| c[i] * val[ef.slots[i]].unwrap()).sum();
                            let mut x = -c[k] * rest;
                            let v = ef.slots[k];
                            if let Some(m) = self.vars[v].modulus {
                                x = x.rem_euclid(m);
                            }
                            if !in_range(v, x) {
                                continue 'attempt;
                            }
                            val[v] = Some(x);
                            changed = true;
                        }
                    }
                }
                let unassigned: Vec<VarId> = (0..n).filter(|&v| val[v].is_none()).collect();
                if unassigned.is_empty() {
                    break;
                }
                let v = unassigned[rng.gen_range(0..unassigned.len())];
                let var = &self.vars[v];
                let x = if let Some(m) = var.modulus {
                    rng.gen_range(0..m)
                } else {
                    let (lo, hi) = if ext.contains(&v) { ext_range } else { int_range };
                    let (lo, hi) = (lo.max(var.lo), hi.min(var.hi()));
                    if lo > hi {
                        continue 'attempt;
                    }
                    rng.gen_range(lo..=hi)
                };
                val[v] = Some(x);
            }
            let vals: Vec<i64> = val.iter().map(|v| v.unwrap()).collect();
            let nonzero = self.factors.iter().all(|ef| {
                let sv: Vec<i64> = ef.slots.iter().map(|&s| vals[s]).collect();
                ef.eval(&sv) != C64::new(0.0, 0.0)
            });
            if nonzero {
                return Some(ext.iter().map(|&v| vals[v]).collect());
            }
        }
        None
    }
}

fn same_value(var: &Var, a: i64, b: i64) -> bool {
    match var.modulus {
        Some(m) => (a - b).rem_euclid(m) == 0,
        None => a == b,
    }
}

fn finish(vars: Vec<VarId>, t: ComplexTensor) -> Result<Factor> {
    let total = t.len();
    let nnz = t.nnz() as u64;
    let tensor = if total <= 1 << 20 && 2 * nnz > total { t.to_dense()? } else { t };
    Ok(Factor { vars, tensor })
}

fn sum_out(f: &Factor, drop: &[VarId]) -> Result<Factor> {
    let keep_axes: Vec<usize> = (0..f.vars.len()).filter(|&i| !drop.contains(&f.vars[i])).collect();
    let vars: Vec<VarId> = keep_axes.iter().map(|&i| f.vars[i]).collect();
    let shape: Vec<usize> = keep_axes.iter().map(|&i| f.tensor.shape()[i]).collect();
    let mut out = if f.tensor.is_dense() && shape.iter().product::<usize>() <= 1 << 22 {
        ComplexTensor::zeros_dense(if shape.is_empty() { &[1] } else { &shape })?
    } else {
        ComplexTensor::sparse(if shape.is_empty() { &[1] } else { &shape })?
    };
    for (lin, v) in f.tensor.entries() {
        let idx = f.tensor.unravel(lin);
        let k: Vec<usize> = if keep_axes.is_empty() { vec![0] } else { keep_axes.iter().map(|&i| idx[i]).collect() };
        out.add_at(&k, v)?;
    }
    Ok(Factor { vars, tensor: out })
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    let mut y = x;
    while p[y] != r {
        let n = p[y];
        p[y] = r;
        y = n;
    }
    r
}

/// Reduces materialized factors to independent groups over `keep`.
pub fn contract_factors(factors: Vec<Factor>, keep: &[VarId]) -> Result<Contracted> {
    let mut scalar = ONE;
    let mut live: Vec<Factor> = Vec::new();
    for f in factors {
        if f.vars.is_empty() {
            scalar *= f.tensor.get_linear(0);
        } else {
            live.push(f);
        }
    }
    let nf = live.len();
    let mut parent: Vec<usize> = (0..nf).collect();
    for i in 0..nf {
        for j in i + 1..nf {
            if live[i].vars.iter().any(|v| live[j].vars.contains(v)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comps: Vec<Vec<Factor>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for (i, f) in live.into_iter().enumerate() {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => comps[k].push(f),
            None => {
                roots.push(r);
                comps.push(vec![f]);
            }
        }
    }

    let mut groups = Vec::new();
    for comp in comps {
        let f = reduce_component(comp, keep)?;
        if f.vars.is_empty() {
            scalar *= f.tensor.get_linear(0);
        } else {
            groups.push(f);
        }
    }
    Ok(Contracted { groups, scalar })
}

fn reduce_component(mut fs: Vec<Factor>, keep: &[VarId]) -> Result<Factor> {
    loop {
        // Sum out variables private to one factor.
        for i in 0..fs.len() {
            let private: Vec<VarId> =
                fs[i].vars.iter().copied().filter(|v| !keep.contains(v) && fs.iter().enumerate().all(|(j, g)| j == i || !g.vars.contains(v))).collect();
            if !private.is_empty() {
                fs[i] = sum_out(&fs[i], &private)?;
            }
        }
        if fs.len() == 1 {
            return Ok(fs.pop().unwrap());
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..fs.len() {
            for j in i + 1..fs.len() {
                let shared: Vec<VarId> = fs[i].vars.iter().copied().filter(|v| fs[j].vars.contains(v)).collect();
                if shared.is_empty() {
                    continue;
                }
                let denom: f64 = shared
                    .iter()
                    .map(|v| {
                        let k = fs[i].vars.iter().position(|x| x == v).unwrap();
                        fs[i].tensor.shape()[k] as f64
                    })
                    .product();
                let cost = fs[i].tensor.nnz() as f64 * fs[j].tensor.nnz() as f64 / denom;
                if best.map_or(true, |(c, _, _)| cost < c) {
                    best = Some((cost, i, j));
                }
            }
        }
        let (_, i, j) = match best {
            Some(b) => b,
            None => {
                // Disconnected leftovers cannot occur inside a component; combine by outer product.
                (0.0, 0, 1)
            }
        };
        let b = fs.remove(j);
        let a = fs.remove(i);
        let needed = |v: &VarId| keep.contains(v) || fs.iter().any(|g| g.vars.contains(v));
        let mut out: Vec<VarId> = a.vars.clone();
        for v in &b.vars {
            if !out.contains(v) {
                out.push(*v);
            }
        }
        out.retain(|v| {
            let shared = a.vars.contains(v) && b.vars.contains(v);
            !shared || needed(v)
        });
        let size_of = |v: &VarId| -> usize {
            if let Some(k) = a.vars.iter().position(|x| x == v) {
                a.tensor.shape()[k]
            } else {
                b.tensor.shape()[b.vars.iter().position(|x| x == v).unwrap()]
            }
        };
        let total: f64 = out.iter().map(|v| size_of(v) as f64).product();
        let storage = if a.tensor.is_dense() && b.tensor.is_dense() && total <= (1u64 << 22) as f64 { OutputStorage::Dense } else { OutputStorage::Sparse };
        let t = contract_labeled(&a.tensor, &a.vars, &b.tensor, &b.vars, &out, storage)?;
        fs.push(Factor { vars: out, tensor: t });
    }
}

/// Norms of two contracted sides over the same kept variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideComparison {
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    /// Exact when both sides form a single block, otherwise a telescoping upper bound.
    pub abs: f64,
    pub blocks: usize,
    pub exact: bool,
}

fn expand(f: &Factor, vars: &[VarId], sizes: &[usize]) -> Result<ComplexTensor> {
    // Broadcast f over `vars` (which contain f.vars) in the given order.
    let mut t = ComplexTensor::sparse(sizes)?;
    let missing: Vec<usize> = (0..vars.len()).filter(|&k| !f.vars.contains(&vars[k])).collect();
    let where_f: Vec<usize> = vars.iter().map(|v| f.vars.iter().position(|x| x == v).unwrap_or(usize::MAX)).collect();
    let mcount: usize = missing.iter().map(|&k| sizes[k]).product();
    for (lin, v) in f.tensor.entries() {
        let idx = f.tensor.unravel(lin);
        let mut full = vec![0usize; vars.len()];
        for k in 0..vars.len() {
            if where_f[k] != usize::MAX {
                full[k] = idx[where_f[k]];
            }
        }
        for m in 0..mcount {
            let mut r = m;
            for &k in missing.iter().rev() {
                full[k] = r % sizes[k];
                r /= sizes[k];
            }
            t.add_at(&full, v)?;
        }
    }
    Ok(t)
}

fn block_tensor(groups: &[&Factor], vars: &[VarId], sizes: &[usize]) -> Result<ComplexTensor> {
    let mut acc: Option<Factor> = None;
    for g in groups {
        acc = Some(match acc {
            None => (*g).clone(),
            Some(a) => {
                let mut out = a.vars.clone();
                out.extend(g.vars.iter().copied());
                let t = contract_labeled(&a.tensor, &a.vars, &g.tensor, &g.vars, &out, OutputStorage::Sparse)?;
                Factor { vars: out, tensor: t }
            }
        });
    }
    match acc {
        None => {
            let ones = Factor { vars: vec![], tensor: ComplexTensor::dense(&[1], vec![ONE])? };
            expand_scalar(&ones, sizes)
        }
        Some(f) => expand(&f, vars, sizes),
    }
}

fn pick<'a>(c: &'a Contracted, vars: &[VarId]) -> Vec<&'a Factor> {
    c.groups.iter().filter(|g| g.vars.iter().any(|v| vars.contains(v))).collect()
}

fn expand_scalar(f: &Factor, sizes: &[usize]) -> Result<ComplexTensor> {
    let c = f.tensor.get_linear(0);
    let total: usize = sizes.iter().product();
    let mut t = ComplexTensor::sparse(sizes)?;
    for lin in 0..total as u64 {
        t.add_linear(lin, c);
    }
    Ok(t)
}

/// Compares two contractions of the same kept variables, block by block.
pub fn compare_sides(lhs: &Contracted, rhs: &Contracted, keep: &[VarId], sizes_of: &dyn Fn(VarId) -> usize) -> Result<SideComparison> {
    let nk = keep.len();
    let idx_of = |v: VarId| keep.iter().position(|&k| k == v);
    let mut parent: Vec<usize> = (0..nk).collect();
    let mut used = vec![false; nk];
    for g in lhs.groups.iter().chain(&rhs.groups) {
        let ks: Vec<usize> = g.vars.iter().map(|&v| idx_of(v).ok_or_else(|| Error::InvalidInput("group variable not kept".into()))).collect::<Result<_>>()?;
        for &k in &ks {
            used[k] = true;
        }
        for w in ks.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut blocks: Vec<Vec<VarId>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    let mut free_count: f64 = 1.0;
    for k in 0..nk {
        if !used[k] {
            free_count *= sizes_of(keep[k]) as f64;
            continue;
        }
        let r = find(&mut parent, k);
        match roots.iter().position(|&x| x == r) {
            Some(b) => blocks[b].push(keep[k]),
            None => {
                roots.push(r);
                blocks.push(vec![keep[k]]);
            }
        }
    }
    let sqrt_free = free_count.sqrt();
    if blocks.is_empty() {
        let (l, r) = (lhs.scalar, rhs.scalar);
        return Ok(SideComparison { lhs_norm: l.norm() * sqrt_free, rhs_norm: r.norm() * sqrt_free, abs: (l - r).norm() * sqrt_free, blocks: 0, exact: true });
    }
    let mut ln = Vec::new();
    let mut rn = Vec::new();
    let mut dn = Vec::new();
    for (bi, vars) in blocks.iter().enumerate() {
        let sizes: Vec<usize> = vars.iter().map(|&v| sizes_of(v)).collect();
        let mut lt = block_tensor(&pick(lhs, vars), vars, &sizes)?;
        let mut rt = block_tensor(&pick(rhs, vars), vars, &sizes)?;
        if bi == 0 {
            lt = lt.scale(lhs.scalar);
            rt = rt.scale(rhs.scalar);
        }
        ln.push(lt.norm());
        rn.push(rt.norm());
        dn.push(lt.distance(&rt)?);
    }
    let lhs_norm: f64 = ln.iter().product::<f64>() * sqrt_free;
    let rhs_norm: f64 = rn.iter().product::<f64>() * sqrt_free;
    let mut abs = 0.0;
    for b in 0..blocks.len() {
        let mut term = dn[b];
        for h in 0..b {
            term *= rn[h];
        }
        for h in b + 1..blocks.len() {
            term *= ln[h];
        }
        abs += term;
    }
    Ok(SideComparison { lhs_norm, rhs_norm, abs: abs * sqrt_free, blocks: blocks.len(), exact: blocks.len() == 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_sum(vars: &[VarId], c: Vec<i64>) -> ElemFactor {
        let cc = c.clone();
        ElemFactor::delta_func(
            vars.to_vec(),
            c,
            Arc::new(move |x: &[i64]| {
                let s: i64 = x.iter().zip(&cc).map(|(a, b)| a * b).sum();
                if s == 0 {
                    ONE
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        )
    }

    #[test]
    fn chain_of_deltas() {
        // Σ_b δ(a+b-c) δ(b-d) over windows = δ(a+d-c) restricted to ranges
        let mut n = Network::new();
        let a = n.add_var(Var::range("a", 0, 3));
        let b = n.add_var(Var::range("b", 0, 3));
        let c = n.add_var(Var::range("c", 0, 6));
        let d = n.add_var(Var::range("d", 0, 3));
        n.push(delta_sum(&[a, b, c], vec![1, 1, -1]));
        n.push(delta_sum(&[b, d], vec![1, -1]));
        let out = n.contract(&vec![None; 4], &[a, c, d]).unwrap();
        let total: f64 = out.groups.iter().map(|g| g.tensor.norm_sqr()).sum::<f64>() * out.scalar.norm_sqr();
        assert_eq!(total, 16.0);
        let v = n.value(&[Some(1), None, Some(3), Some(2)]).unwrap();
        assert_eq!(v, ONE);
    }

    #[test]
    fn fixed_values_and_sampling() {
        let mut n = Network::new();
        let a = n.add_var(Var::range("a", 0, 5));
        let b = n.add_var(Var::range("b", 0, 5));
        let c = n.add_var(Var::range("c", 0, 10));
        n.push(delta_sum(&[a, b, c], vec![1, 1, -1]));
        let mut rng = rand::thread_rng();
        let s = n.sample_support(&[a, c], (0, 5), (0, 5), &mut rng, 100).unwrap();
        assert!(s[1] >= s[0]);
    }

    #[test]
    fn tightening() {
        let mut n = Network::new();
        let a = n.add_var(Var::range("a", 0, 3));
        let b = n.add_var(Var::range("b", 0, 2));
        let c = n.add_var(Var::range("c", 0, 100));
        let d = n.add_var(Var::range("d", 0, 100));
        n.push(delta_sum(&[a, b, c], vec![1, 1, -1]));
        n.push(delta_sum(&[c, d], vec![1, -1]));
        assert!(n.tighten_ranges(&[c, d]));
        assert_eq!((n.vars[c].lo, n.vars[c].hi()), (0, 5));
        assert_eq!((n.vars[d].lo, n.vars[d].hi()), (0, 5));
    }

    #[test]
    fn cyclic_delta() {
        let mut n = Network::new();
        let a = n.add_var(Var::cyclic("a", 3));
        let b = n.add_var(Var::cyclic("b", 3));
        let cc = vec![1, 1];
        n.push(ElemFactor::delta_func(vec![a, b], cc, Arc::new(|x: &[i64]| if (x[0] + x[1]).rem_euclid(3) == 0 { ONE } else { C64::new(0.0, 0.0) })));
        let out = n.contract(&[None, None], &[a, b]).unwrap();
        assert_eq!(out.groups[0].tensor.nnz(), 3);
    }
}
