//! Index-level checks: the three-term identity for M alone and the six-term
//! identity mixing M and M̄, evaluated as factor networks over leg components.

use super::layout::{side_symbol, Occurrence, M6_EXTERNAL, M6_LHS, M6_RHS, MMM2_EXTERNAL, MMM2_LHS, MMM2_RHS};
use crate::domain::IndexDomain;
use crate::error::{Error, Result};
use crate::fiveleg::{label, ConstraintSet, FiveLeg, SpectralAssignment, SpectralSystem};
use crate::network::{compare_sides, Network, Var, VarId};
use crate::report::{Accumulator, Mode, ResidualReport};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Full contraction when every component is cyclic, sampling otherwise.
    Auto,
    Full,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub tolerance: f64,
    pub coverage: Coverage,
    /// External tuples drawn in sampled mode.
    pub samples: usize,
    pub seed: u64,
    /// Assignment over every label of the equation; drawn from `seed` when None.
    pub spectral: Option<SpectralAssignment>,
    /// Impose the extra matchings of the six-term identity.
    pub usl: bool,
    /// Range of non-cyclic external components (defaults to the leg domain).
    pub ext_range: Option<(i64, i64)>,
    /// Range of windowed internal components (defaults to the leg domain).
    pub internal_window: Option<(i64, i64)>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tolerance: 1e-10, coverage: Coverage::Auto, samples: 200, seed: 0, spectral: None, usl: true, ext_range: None, internal_window: None }
    }
}

/// Both sides of an identity as networks sharing their external variables.
pub struct SideNetworks {
    pub sides: [Network; 2],
    pub external: Vec<VarId>,
    pub windowed: bool,
}

struct Spec<'a> {
    id: &'static str,
    lhs: &'a [Occurrence],
    rhs: &'a [Occurrence],
    externals: &'a [&'a str],
}

fn leg_domain(m: &FiveLeg, mbar: Option<&FiveLeg>) -> Result<IndexDomain> {
    let d = m.domains()[0].clone();
    for x in std::iter::once(m).chain(mbar) {
        if x.domains().iter().any(|l| *l != d) {
            return Err(Error::InvalidInput("all legs must share one index domain".into()));
        }
    }
    Ok(d)
}

fn build(spec: &Spec, m: &FiveLeg, mbar: Option<&FiveLeg>, lam: Option<&SpectralAssignment>, opts: &VerifyOptions) -> Result<SideNetworks> {
    let dom = leg_domain(m, mbar)?;
    let comps: Vec<IndexDomain> = dom.components().into_iter().cloned().collect();
    let mut base = Network::new();
    let mut ext_vars: BTreeMap<String, Vec<VarId>> = BTreeMap::new();
    let mut external = Vec::new();
    let mut bound = 0i64;
    let mut windowed = false;
    for s in spec.externals {
        let mut ids = Vec::new();
        for (c, d) in comps.iter().enumerate() {
            let name = if comps.len() == 1 { s.to_string() } else { label(s, c) };
            let var = match (d, opts.ext_range) {
                (IndexDomain::Cyclic { .. }, _) => Var::from_domain(&name, d),
                (_, Some((lo, hi))) => Var::range(&name, lo.max(d.lo()), hi.min(d.hi())),
                _ => Var::from_domain(&name, d),
            };
            bound += var.hi().max(0);
            let id = base.add_var(var);
            ids.push(id);
            external.push(id);
        }
        ext_vars.insert(s.to_string(), ids);
    }
    let mut sides = [base.clone(), base];
    for (k, occ) in [spec.lhs, spec.rhs].into_iter().enumerate() {
        let net = &mut sides[k];
        let mut vars = ext_vars.clone();
        let mut internal = Vec::new();
        for (_, legs) in occ {
            for s in legs {
                if vars.contains_key(*s) {
                    continue;
                }
                let sym = side_symbol(s, spec.externals, k);
                let mut ids = Vec::new();
                for (c, d) in comps.iter().enumerate() {
                    let name = if comps.len() == 1 { sym.clone() } else { label(&sym, c) };
                    let var = match d {
                        IndexDomain::Cyclic { .. } => Var::from_domain(&name, d),
                        IndexDomain::Window { lo, hi } => {
                            windowed = true;
                            let (lo, hi) = opts.internal_window.unwrap_or((*lo, *hi));
                            Var::range(&name, lo, hi)
                        }
                        _ => Var::range(&name, 0, bound.max(d.hi())),
                    };
                    let id = net.add_var(var);
                    ids.push(id);
                    internal.push(id);
                }
                vars.insert(s.to_string(), ids);
            }
        }
        for (bar, legs) in occ {
            let fl = if *bar { mbar.ok_or_else(|| Error::InvalidInput("barred occurrence without M̄".into()))? } else { m };
            let slots: Vec<VarId> = legs.iter().flat_map(|s| vars[*s].clone()).collect();
            let l = if fl.depends_on_spectral() {
                let names: Vec<String> = legs.iter().map(|s| side_symbol(s, spec.externals, k)).collect();
                let a = lam.ok_or_else(|| Error::Spectral("spectral assignment required".into()))?;
                Some(a.occurrence(&names)?)
            } else {
                None
            };
            for f in fl.elem_factors(&slots, l.as_deref())? {
                net.push(f);
            }
        }
        if matches!(dom.components()[0], IndexDomain::NonNeg { .. }) && !net.tighten_ranges(&internal) {
            return Err(Error::InvalidInput("constraints admit no internal values".into()));
        }
    }
    Ok(SideNetworks { sides, external, windowed })
}

fn needs_spectral(m: &FiveLeg, mbar: Option<&FiveLeg>) -> bool {
    m.depends_on_spectral() || mbar.is_some_and(|x| x.depends_on_spectral())
}

fn spectral_for(sys: &SpectralSystem, opts: &VerifyOptions) -> Result<SpectralAssignment> {
    match &opts.spectral {
        Some(s) => {
            sys.check(s, 1e-12)?;
            Ok(s.clone())
        }
        None => Ok(sys.random(&mut ChaCha8Rng::seed_from_u64(opts.seed))),
    }
}

fn run(spec: &Spec, m: &FiveLeg, mbar: Option<&FiveLeg>, sys: Option<SpectralSystem>, opts: &VerifyOptions) -> Result<ResidualReport> {
    let start = Instant::now();
    let lam = match (&sys, needs_spectral(m, mbar)) {
        (Some(sys), true) => Some(spectral_for(sys, opts)?),
        _ => None,
    };
    let nets = build(spec, m, mbar, lam.as_ref(), opts)?;
    let all_cyclic = m.domains()[0].components().iter().all(|d| d.is_cyclic());
    let full = match opts.coverage {
        Coverage::Full => true,
        Coverage::Sampled => false,
        Coverage::Auto => all_cyclic,
    };
    let mut rep = if full {
        let free = |net: &Network| vec![None; net.vars.len()];
        let l = nets.sides[0].contract(&free(&nets.sides[0]), &nets.external)?;
        let r = nets.sides[1].contract(&free(&nets.sides[1]), &nets.external)?;
        let base = &nets.sides[0];
        let cmp = compare_sides(&l, &r, &nets.external, &|v| base.vars[v].size)?;
        let mut rep = ResidualReport::new(spec.id, cmp.lhs_norm, cmp.rhs_norm, cmp.abs, opts.tolerance).param("blocks", cmp.blocks);
        if !cmp.exact && cmp.abs > 0.0 {
            rep = rep.flag("residual-bound");
        }
        rep
    } else {
        let tail = match (nets.windowed, m.domains()[0].components()[0]) {
            (true, IndexDomain::Window { lo, hi }) => {
                let (lo, hi) = opts.internal_window.unwrap_or((*lo, *hi));
                let inner = VerifyOptions { internal_window: Some((lo + 2, hi - 2)), ..opts.clone() };
                Some(build(spec, m, mbar, lam.as_ref(), &inner)?)
            }
            _ => None,
        };
        sampled(spec.id, &nets, tail.as_ref(), opts)?
    };
    rep = rep.param("family", m.family().label()).param("domain", m.domains()[0].label());
    for (k, v) in m.params() {
        rep = rep.param(k, v.clone());
    }
    if let Some(l) = &lam {
        rep = rep.param("spectral", l.to_json());
    }
    if nets.windowed {
        rep = rep.flag("window-truncated");
    }
    Ok(rep.elapsed_since(start))
}

/// With `tail`, the same sides on a window narrowed by 2 on each end; the
/// largest relative change of a side value is reported as `tail_estimate`.
fn sampled(id: &str, nets: &SideNetworks, tail: Option<&SideNetworks>, opts: &VerifyOptions) -> Result<ResidualReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let base = &nets.sides[0];
    let lo = nets.external.iter().map(|&v| base.vars[v].lo).min().unwrap_or(0);
    let hi = nets.external.iter().map(|&v| base.vars[v].hi()).max().unwrap_or(0);
    let mut acc = Accumulator::default();
    let mut misses = 0usize;
    let mut worst: f64 = 0.0;
    let mut tail_est: f64 = 0.0;
    let mut t = 0;
    while acc.count < opts.samples && t < 10 * opts.samples {
        let side = &nets.sides[t % 2];
        t += 1;
        let ext = match side.sample_support(&nets.external, (lo, hi), (lo, hi), &mut rng, 2000) {
            Some(e) => e,
            None => {
                misses += 1;
                continue;
            }
        };
        let eval = |n: &SideNetworks| -> Result<Vec<C64>> {
            n.sides
                .iter()
                .map(|net| {
                    let mut fixed = vec![None; net.vars.len()];
                    for (&v, &x) in n.external.iter().zip(&ext) {
                        fixed[v] = Some(x);
                    }
                    net.value(&fixed)
                })
                .collect()
        };
        let vals = eval(nets)?;
        if let Some(t) = tail {
            for (a, b) in vals.iter().zip(eval(t)?) {
                tail_est = tail_est.max((a - b).norm() / a.norm().max(1e-300));
            }
        }
        let mut one = Accumulator::default();
        one.push(vals[0], vals[1]);
        worst = worst.max(one.rel());
        acc.merge(&one);
    }
    let mut rep = ResidualReport::from_acc(id, &acc, opts.tolerance)
        .mode(Mode::Sampled)
        .flag("sampled")
        .param("samples", acc.count)
        .param("worst_sample_rel", worst)
        .param("seed", opts.seed);
    if tail.is_some() {
        rep = rep.param("tail_estimate", tail_est);
    }
    if misses > 0 {
        rep = rep.param("missed_samples", misses);
    }
    if acc.count > 0 && acc.count < opts.samples {
        rep = rep.flag("undersampled");
    }
    if acc.count == 0 {
        rep = rep.inconclusive("no-support-found");
    }
    Ok(rep)
}

/// Σ_b M_{a1,a2,a3}^{b1,b2} M_{b1,a4,a5}^{c1,b3} M_{b2,b3,a6}^{c2,c3}
///   = Σ_b M_{a3,a5,a6}^{b2,b3} M_{a2,a4,b3}^{b1,c3} M_{a1,b1,b2}^{c1,c2}.
pub fn verify_mmm2(m: &FiveLeg, opts: &VerifyOptions) -> Result<ResidualReport> {
    let spec = Spec { id: "mmm2", lhs: &MMM2_LHS, rhs: &MMM2_RHS, externals: &MMM2_EXTERNAL };
    run(&spec, m, None, Some(SpectralSystem::mmm2()), opts).map(|r| r.param("barred", m.barred()))
}

/// The six-term identity in the adjoint representation, mixing M and M̄.
pub fn verify_m6(m: &FiveLeg, mbar: &FiveLeg, opts: &VerifyOptions) -> Result<ResidualReport> {
    let spec = Spec { id: "m6", lhs: &M6_LHS, rhs: &M6_RHS, externals: &M6_EXTERNAL };
    let set = if opts.usl { ConstraintSet::SvzUsl } else { ConstraintSet::Svz };
    run(&spec, m, Some(mbar), Some(SpectralSystem::m6(set)), opts).map(|r| r.param("usl", opts.usl))
}

/// The networks behind [`verify_mmm2`], for inspection and custom evaluation.
pub fn mmm2_networks(m: &FiveLeg, spectral: Option<&SpectralAssignment>, opts: &VerifyOptions) -> Result<SideNetworks> {
    let spec = Spec { id: "mmm2", lhs: &MMM2_LHS, rhs: &MMM2_RHS, externals: &MMM2_EXTERNAL };
    build(&spec, m, None, spectral, opts)
}

/// The networks behind [`verify_m6`].
pub fn m6_networks(m: &FiveLeg, mbar: &FiveLeg, spectral: Option<&SpectralAssignment>, opts: &VerifyOptions) -> Result<SideNetworks> {
    let spec = Spec { id: "m6", lhs: &M6_LHS, rhs: &M6_RHS, externals: &M6_EXTERNAL };
    build(&spec, m, Some(mbar), spectral, opts)
}
