//! Five-leg structure constants M_{a,b,c}^{d,e} and M̄^{a,b,c}_{d,e}.
//!
//! A Five-leg is kept as a product of elementary parts over its leg
//! components, so verifiers can place it inside larger networks without
//! materializing the rank-5 (or, for pair legs, rank-10) tensor. Components
//! are numbered leg-major: with pair legs, component 2·leg + i is (leg)_i.

mod kernels;
mod matrices;
mod spectral;

pub use kernels::{lambda_kernel, phi_delta, phibar, psibar};
pub use matrices::{qosc_matrices, verify_peg_matrix, weyl_matrices, MatrixFamily};
pub use spectral::{label, make_spectral, ConstraintSet, SpectralAssignment, SpectralSystem};

use crate::domain::IndexDomain;
use crate::error::{Error, Result};
use crate::kernel::{ExponentKernel, KernelMode};
use crate::network::{ElemFactor, Kernel, KernelFn, Network, Var, VarId};
use crate::qseries::QParams;
use crate::report::complex_json;
use crate::tensor::ComplexTensor;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

pub type WeightFn = Arc<dyn Fn(i64) -> C64 + Send + Sync>;
pub type GaugeFn = Arc<dyn Fn(&[i64]) -> C64 + Send + Sync>;
type PartsFn = Arc<dyn Fn(&[C64]) -> Vec<Part> + Send + Sync>;

pub const LEGS: [&str; 5] = ["a", "b", "c", "d", "e"];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const TENSOR_CAP: usize = 1 << 24;

/// One elementary factor over a subset of the components.
#[derive(Clone)]
pub struct Part {
    pub comps: Vec<usize>,
    pub kernel: Kernel,
}

impl Part {
    pub fn func(comps: Vec<usize>, f: impl Fn(&[i64]) -> C64 + Send + Sync + 'static) -> Self {
        Part { comps, kernel: Kernel::Func { f: Arc::new(f), constraint: None } }
    }

    /// A factor vanishing unless Σ coeffs·x = 0.
    pub fn constrained(comps: Vec<usize>, coeffs: Vec<i64>, f: impl Fn(&[i64]) -> C64 + Send + Sync + 'static) -> Self {
        Part { comps, kernel: Kernel::Func { f: Arc::new(f), constraint: Some(coeffs) } }
    }

    /// The Kronecker delta of Σ coeffs·x, taken mod `modulus` when given.
    pub fn delta(comps: Vec<usize>, coeffs: Vec<i64>, modulus: Option<i64>) -> Self {
        let c = coeffs.clone();
        Self::constrained(comps, coeffs, move |x| if vanishes(dot(&c, x), modulus) { ONE } else { ZERO })
    }

    fn eval(&self, vals: &[i64]) -> C64 {
        let sub: Vec<i64> = self.comps.iter().map(|&k| vals[k]).collect();
        self.kernel.eval(&sub)
    }
}

fn dot(c: &[i64], x: &[i64]) -> i64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn vanishes(x: i64, modulus: Option<i64>) -> bool {
    match modulus {
        Some(n) => x.rem_euclid(n) == 0,
        None => x == 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    M2,
    M1,
    M3,
}

impl std::str::FromStr for Form {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m2" => Ok(Form::M2),
            "m1" => Ok(Form::M1),
            "m3" => Ok(Form::M3),
            _ => Err(Error::InvalidInput(format!("unknown form {s}; expected M1, M2 or M3"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Example1(Form),
    Example2,
    Example3,
    Custom,
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Example1(f) => format!("example1-{}", serde_json::to_value(f).unwrap().as_str().unwrap()),
            Family::Example2 => "example2".into(),
            Family::Example3 => "example3".into(),
            Family::Custom => "custom".into(),
        }
    }
}

#[derive(Clone)]
pub struct FiveLeg {
    family: Family,
    barred: bool,
    domains: Vec<IndexDomain>,
    params: BTreeMap<String, Value>,
    spectral: Option<SpectralAssignment>,
    parts: PartsFn,
    extra: Vec<Part>,
}

impl std::fmt::Debug for FiveLeg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiveLeg")
            .field("family", &self.family)
            .field("barred", &self.barred)
            .field("domains", &self.domains)
            .field("params", &self.params)
            .field("spectral", &self.spectral)
            .finish()
    }
}

impl FiveLeg {
    fn build(family: Family, barred: bool, leg: IndexDomain, parts: PartsFn) -> Self {
        FiveLeg { family, barred, domains: vec![leg; 5], params: BTreeMap::new(), spectral: None, parts, extra: Vec::new() }
    }

    /// A Five-leg given by a rank-5 tensor over the five leg domains.
    pub fn from_tensor(t: ComplexTensor, domains: Vec<IndexDomain>, barred: bool) -> Result<Self> {
        if domains.len() != 5 || t.rank() != 5 {
            return Err(Error::Shape(format!("need 5 legs, got {} domains and rank {}", domains.len(), t.rank())));
        }
        let arity = domains[0].components().len();
        for (i, d) in domains.iter().enumerate() {
            d.validate()?;
            if d.components().len() != arity || d.cardinality() != t.shape()[i] {
                return Err(Error::Shape(format!("leg {} has domain {} but axis size {}", LEGS[i], d.label(), t.shape()[i])));
            }
        }
        let kernel = Kernel::Table { tensor: Arc::new(t), domains: domains.clone() };
        let comps: Vec<usize> = (0..5 * arity).collect();
        let part = Part { comps, kernel };
        Ok(FiveLeg {
            family: Family::Custom,
            barred,
            domains,
            params: BTreeMap::new(),
            spectral: None,
            parts: Arc::new(move |_| vec![part.clone()]),
            extra: Vec::new(),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn barred(&self) -> bool {
        self.barred
    }

    /// The same entries, marked as the barred partner.
    pub fn as_barred(mut self, barred: bool) -> Self {
        self.barred = barred;
        self
    }

    pub fn domains(&self) -> &[IndexDomain] {
        &self.domains
    }

    /// Components per leg: 1 for scalar legs, 2 for pair legs.
    pub fn arity(&self) -> usize {
        self.domains[0].components().len()
    }

    pub fn ncomps(&self) -> usize {
        5 * self.arity()
    }

    pub fn comp_domain(&self, k: usize) -> IndexDomain {
        let a = self.arity();
        self.domains[k / a].components()[k % a].clone()
    }

    pub fn params(&self) -> &BTreeMap<String, Value> {
        &self.params
    }

    pub fn with_param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn spectral(&self) -> Option<&SpectralAssignment> {
        self.spectral.as_ref()
    }

    pub fn depends_on_spectral(&self) -> bool {
        self.family == Family::Example3 && self.barred
    }

    pub fn is_gauged(&self) -> bool {
        self.params.contains_key("gauged")
    }

    /// λ of the components in component order, from the attached assignment.
    pub fn spectral_vector(&self) -> Vec<C64> {
        if self.arity() != 2 {
            return Vec::new();
        }
        let s = self.spectral.clone().unwrap_or_default();
        LEGS.iter().flat_map(|l| (0..2).map(|c| s.get(&label(l, c)).unwrap_or(ZERO)).collect::<Vec<_>>()).collect()
    }

    /// Elementary parts, with `lam` overriding the attached spectral values.
    pub fn parts(&self, lam: Option<&[C64]>) -> Vec<Part> {
        let own;
        let l = match lam {
            Some(l) => l,
            None => {
                own = self.spectral_vector();
                &own
            }
        };
        let mut p = (self.parts)(l);
        p.extend(self.extra.iter().cloned());
        p
    }

    /// Entry at the flat component values (a.., b.., c.., d.., e..).
    pub fn entry(&self, vals: &[i64]) -> Result<C64> {
        if vals.len() != self.ncomps() {
            return Err(Error::Shape(format!("expected {} component values, got {}", self.ncomps(), vals.len())));
        }
        Ok(entry_of(&self.parts(None), vals))
    }

    /// Network factors of one occurrence whose components sit on `slots`.
    pub fn elem_factors(&self, slots: &[VarId], lam: Option<&[C64]>) -> Result<Vec<ElemFactor>> {
        if slots.len() != self.ncomps() {
            return Err(Error::Shape(format!("expected {} slots, got {}", self.ncomps(), slots.len())));
        }
        if let Some(l) = lam {
            if self.arity() == 2 && l.len() != 10 {
                return Err(Error::Spectral(format!("expected 10 spectral values, got {}", l.len())));
            }
        }
        Ok(self.parts(lam).into_iter().map(|p| ElemFactor { slots: p.comps.iter().map(|&k| slots[k]).collect(), kernel: p.kernel }).collect())
    }

    /// Adds variables for one leg named `name` ("name" or "name.0", "name.1").
    pub fn add_leg_vars(&self, net: &mut Network, name: &str, leg: usize) -> Vec<VarId> {
        let comps = self.domains[leg].components();
        if comps.len() == 1 {
            return vec![net.add_var(Var::from_domain(name, comps[0]))];
        }
        comps.iter().enumerate().map(|(c, d)| net.add_var(Var::from_domain(&format!("{name}.{c}"), d))).collect()
    }

    /// The full tensor over the leg domains, axes (a, b, c, d, e), pair legs flattened row-major.
    pub fn to_tensor(&self) -> Result<ComplexTensor> {
        let shape: Vec<usize> = self.domains.iter().map(|d| d.cardinality()).collect();
        let total = shape.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX);
        if total > TENSOR_CAP {
            return Err(Error::TooLarge { need: total as u128, cap: TENSOR_CAP as u128 });
        }
        let parts = self.parts(None);
        let mut t = ComplexTensor::sparse(&shape)?;
        let mut pos = vec![0usize; 5];
        let mut vals = Vec::with_capacity(self.ncomps());
        for _ in 0..total {
            vals.clear();
            for (d, &p) in self.domains.iter().zip(&pos) {
                vals.extend(d.unflatten(p));
            }
            let v = entry_of(&parts, &vals);
            if v != ZERO {
                t.set(&pos, v)?;
            }
            for ax in (0..5).rev() {
                pos[ax] += 1;
                if pos[ax] < shape[ax] {
                    break;
                }
                pos[ax] = 0;
            }
        }
        Ok(t)
    }

    /// Multiplies by 1+eps every entry whose listed components take `values`.
    ///
    /// The factor is folded into the first functional part that covers the
    /// components, so the network keeps the same factor structure.
    pub fn perturb_where(&self, comps: &[usize], values: &[i64], eps: f64) -> Result<Self> {
        if comps.len() != values.len() || comps.iter().any(|&k| k >= self.ncomps()) {
            return Err(Error::InvalidInput("perturbation components and values do not match".into()));
        }
        let moduli: Vec<Option<i64>> = comps.iter().map(|&k| cyclic_modulus(&self.comp_domain(k))).collect();
        let target = values.to_vec();
        let hit = Arc::new(move |x: &[i64]| x.iter().zip(&target).zip(&moduli).all(|((a, b), m)| vanishes(a - b, *m)));
        let factor = C64::new(1.0 + eps, 0.0);
        let mut out = self.clone();
        let host = self.parts(None).iter().position(|p| matches!(p.kernel, Kernel::Func { .. }) && comps.iter().all(|k| p.comps.contains(k)));
        match host {
            Some(h) => {
                let inner = self.parts.clone();
                let comps = comps.to_vec();
                out.parts = Arc::new(move |lam: &[C64]| {
                    let mut ps = inner(lam);
                    let p = &mut ps[h];
                    if let Kernel::Func { f, .. } = &mut p.kernel {
                        let at: Vec<usize> = comps.iter().map(|k| p.comps.iter().position(|c| c == k).unwrap()).collect();
                        let (g, hit) = (f.clone(), hit.clone());
                        *f = Arc::new(move |x: &[i64]| {
                            let sub: Vec<i64> = at.iter().map(|&i| x[i]).collect();
                            if hit(&sub) {
                                g(x) * factor
                            } else {
                                g(x)
                            }
                        });
                    }
                    ps
                });
            }
            None => out.extra.push(Part::func(comps.to_vec(), move |x| if hit(x) { factor } else { ONE })),
        }
        out.params.insert("perturbed".into(), json!(eps));
        Ok(out)
    }

    /// Multiplies the single entry at `values` (all components) by 1+eps.
    pub fn perturb_entry(&self, values: &[i64], eps: f64) -> Result<Self> {
        let all: Vec<usize> = (0..self.ncomps()).collect();
        self.perturb_where(&all, values, eps)
    }

    pub fn header(&self) -> Value {
        json!({
            "family": self.family.label(),
            "barred": self.barred,
            "domains": self.domains,
            "spectral": self.spectral.as_ref().map(|s| s.to_json()),
            "params": self.params,
        })
    }

    /// Header line followed by the tensor dump.
    pub fn write_json(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        self.to_tensor()?.write_jsonl(w)
    }

    /// Reads a dump written by [`FiveLeg::write_json`] back as a table-backed Five-leg.
    pub fn read_json(mut r: impl BufRead) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let h: Value = serde_json::from_str(line.trim())?;
        let domains: Vec<IndexDomain> = serde_json::from_value(h["domains"].clone())?;
        let barred = h["barred"].as_bool().unwrap_or(false);
        let t = ComplexTensor::read_jsonl(r)?;
        let mut m = FiveLeg::from_tensor(t, domains, barred)?;
        if let Some(p) = h["params"].as_object() {
            m.params = p.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        }
        if let Some(f) = h["family"].as_str() {
            m.params.insert("source_family".into(), json!(f));
        }
        if !h["spectral"].is_null() {
            m.spectral = Some(SpectralAssignment::from_json(&h["spectral"])?);
        }
        Ok(m)
    }
}

fn entry_of(parts: &[Part], vals: &[i64]) -> C64 {
    let mut v = ONE;
    for p in parts {
        v *= p.eval(vals);
        if v == ZERO {
            break;
        }
    }
    v
}

fn cyclic_modulus(d: &IndexDomain) -> Option<i64> {
    match d {
        IndexDomain::Cyclic { n } => Some(*n as i64),
        _ => None,
    }
}

fn scalar_leg(domain: &IndexDomain) -> Result<()> {
    domain.validate()?;
    if !domain.is_scalar() {
        return Err(Error::InvalidInput(format!("expected a scalar index domain, got {}", domain.label())));
    }
    Ok(())
}

fn kernel_matches(kernel: &ExponentKernel, domain: &IndexDomain) -> Result<()> {
    if kernel.mode() == KernelMode::RootOfUnity && *domain != IndexDomain::cyclic(kernel.n()) {
        return Err(Error::InvalidInput(format!("a root-of-unity kernel of order {} needs the domain Z{}, got {}", kernel.n(), kernel.n(), domain.label())));
    }
    Ok(())
}

fn kernel_params(kernel: &ExponentKernel) -> BTreeMap<String, Value> {
    let mut p = BTreeMap::new();
    p.insert("kernel".into(), json!(kernel.label()));
    match kernel.mode() {
        KernelMode::QReal => {
            p.insert("q".into(), complex_json(kernel.q()));
        }
        KernelMode::RootOfUnity => {
            p.insert("N".into(), json!(kernel.n()));
        }
        KernelMode::FourierReal => {}
    }
    p
}

/// The first example in one of its three equivalent forms.
///
/// M2: δ(a+b−d) δ(b+c−e) ⟨a;c⟩; M1: δ(d+e−b) ⟨a−d;c−e⟩; M3: ⟨d−e⟩ ⟨a;e−b⟩ ⟨c;d−b⟩.
pub fn example1(kernel: &ExponentKernel, domain: &IndexDomain, form: Form) -> Result<FiveLeg> {
    scalar_leg(domain)?;
    kernel_matches(kernel, domain)?;
    if form == Form::M3 {
        kernel.gauss_int(1).map_err(|e| Error::Unsupported(format!("form M3 needs the Gauss exponent: {e}")))?;
    }
    let m = cyclic_modulus(domain);
    let k = kernel.clone();
    let parts: PartsFn = Arc::new(move |_| {
        let k = k.clone();
        match form {
            Form::M2 => vec![
                Part::delta(vec![0, 1, 3], vec![1, 1, -1], m),
                Part::delta(vec![1, 2, 4], vec![1, 1, -1], m),
                Part::func(vec![0, 2], move |x| k.bracket_int(x[0], x[1])),
            ],
            Form::M1 => vec![Part::delta(vec![3, 4, 1], vec![1, 1, -1], m), Part::func(vec![0, 3, 2, 4], move |x| k.bracket_int(x[0] - x[1], x[2] - x[3]))],
            Form::M3 => {
                let (k1, k2) = (k.clone(), k.clone());
                vec![
                    Part::func(vec![3, 4], move |x| k.gauss_int(x[0] - x[1]).unwrap_or(ZERO)),
                    Part::func(vec![0, 4, 1], move |x| k1.bracket_int(x[0], x[1] - x[2])),
                    Part::func(vec![2, 3, 1], move |x| k2.bracket_int(x[0], x[1] - x[2])),
                ]
            }
        }
    });
    let mut out = FiveLeg::build(Family::Example1(form), false, domain.clone(), parts);
    out.params = kernel_params(kernel);
    out.params.insert("domain".into(), json!(domain.label()));
    Ok(out)
}

/// R̄ of the first example: δ(i1+i3,k2) δ(k1+k3,i2) δ(i0+i1,k0+k1) ⟨i1−k0;i3+k3⟩,
/// as a rank-8 tensor with axes (i0, i1, i2, i3, k0, k1, k2, k3).
pub fn example1_rbar(kernel: &ExponentKernel, domain: &IndexDomain) -> Result<ComplexTensor> {
    scalar_leg(domain)?;
    kernel_matches(kernel, domain)?;
    let n = domain.cardinality();
    let total = (n as u128).pow(8);
    if total > TENSOR_CAP as u128 {
        return Err(Error::TooLarge { need: total, cap: TENSOR_CAP as u128 });
    }
    let m = cyclic_modulus(domain);
    let vals = domain.values();
    let mut t = ComplexTensor::sparse(&[n; 8])?;
    let mut pos = [0usize; 8];
    for _ in 0..total {
        let x: Vec<i64> = pos.iter().map(|&p| vals[p]).collect();
        let (i0, i1, i2, i3, k0, k1, k2, k3) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
        if vanishes(i1 + i3 - k2, m) && vanishes(k1 + k3 - i2, m) && vanishes(i0 + i1 - k0 - k1, m) {
            t.set(&pos, kernel.bracket_int(i1 - k0, i3 + k3))?;
        }
        for ax in (0..8).rev() {
            pos[ax] += 1;
            if pos[ax] < n {
                break;
            }
            pos[ax] = 0;
        }
    }
    Ok(t)
}

/// Entries f_a f_b f_c M_{a,b,c}^{d,e} / (f_d f_e), f evaluated on whole (possibly pair) legs.
pub fn gauge_transform(m: &FiveLeg, f: GaugeFn) -> Result<FiveLeg> {
    for d in &m.domains {
        if d.cardinality() <= 1 << 20 {
            for p in 0..d.cardinality() {
                let v = d.unflatten(p);
                if f(&v) == ZERO {
                    return Err(Error::InvalidInput(format!("gauge vanishes at {v:?}")));
                }
            }
        }
    }
    let a = m.arity();
    let mut out = m.clone();
    for leg in 0..5 {
        let comps: Vec<usize> = (leg * a..leg * a + a).collect();
        let g = f.clone();
        let part = if leg < 3 { Part::func(comps, move |x| g(x)) } else { Part::func(comps, move |x| ONE / g(x)) };
        out.extra.push(part);
    }
    out.params.insert("gauged".into(), json!(true));
    Ok(out)
}

/// Gaussian weight a ↦ p^{a²}.
pub fn gaussian_weight(p: C64) -> WeightFn {
    Arc::new(move |a| crate::qseries::gauss_weight(p, a))
}

/// The second example on pair legs over `domain`²:
/// M = δ_{a0+b0,d0} δ_{b1+c1,e1} δ_{a1,d1} δ_{c0,e0} q^{2 d1 e0},
/// M̄ = the same deltas with q̃, times w_{a0} w_{b0}/w_{d0} · w_{b1} w_{c1}/w_{e1}.
pub fn example2(kq: &ExponentKernel, kqt: &ExponentKernel, w: WeightFn, domain: &IndexDomain) -> Result<(FiveLeg, FiveLeg)> {
    scalar_leg(domain)?;
    kernel_matches(kq, domain)?;
    kernel_matches(kqt, domain)?;
    let m = cyclic_modulus(domain);
    let legs = IndexDomain::pair(domain.clone());
    let make = |k: ExponentKernel, weight: Option<WeightFn>| -> PartsFn {
        Arc::new(move |_| {
            let k = k.clone();
            let mut p = vec![
                Part::delta(vec![1, 7], vec![1, -1], m),
                Part::delta(vec![4, 8], vec![1, -1], m),
                Part::func(vec![7, 8], move |x| k.bracket_int(x[0], x[1])),
            ];
            match &weight {
                None => {
                    p.push(Part::delta(vec![0, 2, 6], vec![1, 1, -1], m));
                    p.push(Part::delta(vec![3, 5, 9], vec![1, 1, -1], m));
                }
                Some(w) => {
                    for comps in [vec![0, 2, 6], vec![3, 5, 9]] {
                        let w = w.clone();
                        p.push(Part::constrained(
                            comps,
                            vec![1, 1, -1],
                            move |x| {
                                if vanishes(x[0] + x[1] - x[2], m) {
                                    w(x[0]) * w(x[1]) / w(x[2])
                                } else {
                                    ZERO
                                }
                            },
                        ));
                    }
                }
            }
            p
        })
    };
    let mut mm = FiveLeg::build(Family::Example2, false, legs.clone(), make(kq.clone(), None));
    mm.params = kernel_params(kq);
    mm.params.insert("domain".into(), json!(domain.label()));
    let mut mb = FiveLeg::build(Family::Example2, true, legs, make(kqt.clone(), Some(w)));
    mb.params = kernel_params(kqt);
    mb.params.insert("domain".into(), json!(domain.label()));
    Ok((mm, mb))
}

/// The third example on pair legs over the occupation numbers 0..cutoff−1:
/// M = Φ_{a0,b0}^{d0} Φ_{b1,c1}^{e1} Λ_{a1,c0}^{d1,e0},
/// M̄ = Ψ̄^{a0,b0}_{d0}(λ_{a0},λ_{b0}) Φ̄^{b1,c1}_{e1}(λ_{b1},λ_{c1}) δ_{a1,d1} δ_{c0,e0}.
pub fn example3(qp: &QParams, cutoff: u32, spectral: &SpectralAssignment) -> Result<(FiveLeg, FiveLeg)> {
    if cutoff == 0 {
        return Err(Error::InvalidInput("cutoff must be positive".into()));
    }
    SpectralSystem::single().check(spectral, 1e-12)?;
    let legs = IndexDomain::pair(IndexDomain::nonneg(cutoff));
    let q = *qp;
    let m_parts: PartsFn = Arc::new(move |_| {
        vec![
            Part::constrained(vec![0, 2, 6], vec![1, 1, -1], |x| phi_delta(x[0], x[1], x[2])),
            Part::constrained(vec![3, 5, 9], vec![1, 1, -1], |x| phi_delta(x[0], x[1], x[2])),
            Part::constrained(vec![1, 4, 7, 8], vec![1, -1, -1, 1], move |x| lambda_kernel(&q, x[0], x[1], x[2], x[3])),
        ]
    });
    let mb_parts: PartsFn = Arc::new(move |lam: &[C64]| {
        let (la0, lb0, lb1, lc1) = (lam[0], lam[2], lam[3], lam[5]);
        vec![
            Part::constrained(vec![0, 2, 6], vec![1, 1, -1], move |x| psibar(&q, la0, lb0, x[0], x[1], x[2])),
            Part::constrained(vec![3, 5, 9], vec![1, 1, -1], move |x| phibar(&q, lb1, lc1, x[0], x[1], x[2])),
            Part::delta(vec![1, 7], vec![1, -1], None),
            Part::delta(vec![4, 8], vec![1, -1], None),
        ]
    });
    let mut params = BTreeMap::new();
    params.insert("q".to_string(), complex_json(qp.q));
    params.insert("cutoff".to_string(), json!(cutoff));
    let mut m = FiveLeg::build(Family::Example3, false, legs.clone(), m_parts);
    m.params = params.clone();
    m.spectral = Some(spectral.clone());
    let mut mb = FiveLeg::build(Family::Example3, true, legs, mb_parts);
    mb.params = params;
    mb.spectral = Some(spectral.clone());
    Ok((m, mb))
}

/// Wraps a closure as a network kernel.
pub fn kernel_fn(f: impl Fn(&[i64]) -> C64 + Send + Sync + 'static) -> KernelFn {
    Arc::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(n: u32) -> IndexDomain {
        IndexDomain::cyclic(n)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn example1_entries() {
        let k = ExponentKernel::root_of_unity(3).unwrap();
        let m = example1(&k, &z(3), Form::M2).unwrap();
        let w = crate::kernel::root_of_unity_power(1, 3);
        assert!(close(m.entry(&[1, 0, 2, 1, 2]).unwrap(), w * w, 1e-15));
        assert_eq!(m.entry(&[0; 5]).unwrap(), ONE);
        assert_eq!(m.entry(&[1, 1, 0, 1, 1]).unwrap(), ZERO);
        // deltas are taken mod N
        assert_ne!(m.entry(&[2, 2, 0, 1, 2]).unwrap(), ZERO);
        let k2 = ExponentKernel::root_of_unity(2).unwrap();
        assert!(matches!(example1(&k2, &z(2), Form::M3), Err(Error::Unsupported(_))));
        assert!(example1(&k2, &z(3), Form::M2).is_err());
    }

    #[test]
    fn support_obeys_deltas() {
        let k = ExponentKernel::root_of_unity(4).unwrap();
        let t = example1(&k, &z(4), Form::M2).unwrap().to_tensor().unwrap();
        assert_eq!(t.nnz(), 64);
        for (lin, _) in t.entries() {
            let i: Vec<i64> = t.unravel(lin).iter().map(|&x| x as i64).collect();
            assert_eq!((i[0] + i[1] - i[3]).rem_euclid(4), 0);
            assert_eq!((i[1] + i[2] - i[4]).rem_euclid(4), 0);
        }
    }

    #[test]
    fn gauge_scaling() {
        let k = ExponentKernel::root_of_unity(3).unwrap();
        let m = example1(&k, &z(3), Form::M2).unwrap();
        let g = gauge_transform(&m, Arc::new(|_| C64::new(2.0, 0.0))).unwrap();
        let (a, b) = (m.to_tensor().unwrap(), g.to_tensor().unwrap());
        assert!(a.scale(C64::new(2.0, 0.0)).distance(&b).unwrap() < 1e-14);
        let id = gauge_transform(&m, Arc::new(|_| ONE)).unwrap();
        assert_eq!(id.to_tensor().unwrap().distance(&a).unwrap(), 0.0);
        assert!(gauge_transform(&m, Arc::new(|x| C64::new(x[0] as f64 - 1.0, 0.0))).is_err());
    }

    #[test]
    fn example2_entries_and_gauge() {
        let q = C64::new(0.37, 0.2);
        let (kq, kqt) = (ExponentKernel::q_real(q).unwrap(), ExponentKernel::q_real(C64::new(0.81, -0.1)).unwrap());
        let dom = IndexDomain::window(-1, 1);
        let w = gaussian_weight(C64::new(0.6, 0.0));
        let (m, mb) = example2(&kq, &kqt, w.clone(), &dom).unwrap();
        assert_eq!(m.entry(&[1, 0, 0, 0, 0, 0, 1, 0, 0, 0]).unwrap(), ONE);
        assert!(close(m.entry(&[1, 1, 0, 0, 1, 0, 1, 1, 1, 0]).unwrap(), q * q, 1e-15));
        // M̄ is the gauge f(a0,a1) = w(a0) w(a1) of M taken at q̃.
        let (mt, _) = example2(&kqt, &kqt, w.clone(), &dom).unwrap();
        let g = gauge_transform(&mt, Arc::new(move |x: &[i64]| w(x[0]) * w(x[1]))).unwrap();
        let tb = mb.to_tensor().unwrap();
        assert!(tb.distance(&g.to_tensor().unwrap()).unwrap() <= 1e-14 * tb.norm());
        let (m1, mb1) = example2(&kq, &kq, Arc::new(|_| ONE), &dom).unwrap();
        assert_eq!(m1.to_tensor().unwrap().distance(&mb1.to_tensor().unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn example3_entries() {
        let qp = QParams::real(0.5).unwrap();
        let sys = SpectralSystem::single();
        let s = sys.random(&mut ChaCha8Rng::seed_from_u64(1));
        let (m, mb) = example3(&qp, 3, &s).unwrap();
        // a=(0,1), b=(0,0), c=(1,0) → d=(0,0), e=(0,0) through Λ_{1,1}^{0,0}
        assert!(close(m.entry(&[0, 1, 0, 0, 1, 0, 0, 0, 0, 0]).unwrap(), C64::new(0.75, 0.0), 1e-15));
        assert_eq!(mb.entry(&[0; 10]).unwrap(), ONE);
        assert!(mb.depends_on_spectral() && !m.depends_on_spectral());
        let mut bad = s.clone();
        bad.set("a0", bad.get("a0").unwrap() + 1.0);
        assert!(example3(&qp, 3, &bad).is_err());
    }

    #[test]
    fn perturbation_hits_one_entry() {
        let k = ExponentKernel::root_of_unity(2).unwrap();
        let m = example1(&k, &z(2), Form::M2).unwrap();
        let p = m.perturb_entry(&[0; 5], 1e-3).unwrap();
        let d = p.to_tensor().unwrap().sub(&m.to_tensor().unwrap()).unwrap();
        assert_eq!(d.nnz(), 1);
        assert!((d.max_abs() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn dump_round_trip() {
        let qp = QParams::real(0.5).unwrap();
        let s = SpectralSystem::single().random(&mut ChaCha8Rng::seed_from_u64(2));
        let (_, mb) = example3(&qp, 2, &s).unwrap();
        let mut buf = Vec::new();
        mb.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let h: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(h["family"], "example3");
        assert!(h["params"]["q"].is_array());
        let back = FiveLeg::read_json(&buf[..]).unwrap();
        assert!(back.barred());
        assert!(back.to_tensor().unwrap().distance(&mb.to_tensor().unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn rbar_support() {
        let k = ExponentKernel::root_of_unity(2).unwrap();
        let r = example1_rbar(&k, &z(2)).unwrap();
        assert_eq!(r.get(&[0; 8]).unwrap(), ONE);
        assert_eq!(r.nnz(), 32);
        assert_eq!(r.get(&[0, 0, 0, 1, 0, 0, 0, 0]).unwrap(), ZERO);
    }
}
