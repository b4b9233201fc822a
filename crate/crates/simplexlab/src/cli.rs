//! Command-line suite runner.
//!
//! Every check becomes one report line, either text or a JSON object per
//! line. Reports are sorted by equation id and then parameters, so a fixed
//! configuration and seed give identical output apart from `elapsed_ms`.
//!
//! Exit codes: 0 when every conclusive check passes, 1 when one fails,
//! 2 for a bad configuration, 3 when nothing was conclusive.

use crate::dilog::{self, DilogParams};
use crate::domain::IndexDomain;
use crate::error::{Error, Result};
use crate::fiveleg::{example1, example1_rbar, example2, example3, gaussian_weight, verify_peg_matrix, FiveLeg, Form, MatrixFamily, SpectralSystem};
use crate::kernel::ExponentKernel;
use crate::qseries::{self, QParams};
use crate::report::{complex_json, Mode, ResidualReport};
use crate::simplex::{
    build_lambda3, build_r3_trivial, build_r4, build_r5, shift_solution, tetra_factors, verify_10g_operator, verify_10term, verify_4simplex, verify_5simplex,
    verify_as_blocks, verify_m6, verify_mmm2, verify_peg_adjoint, verify_pentagon, verify_r_inverse, verify_tetrahedral_algebra, verify_tetrahedron,
    BlockSpectral, Coverage, SimplexOptions, VerifyOptions,
};
use crate::tensor::ComplexTensor;
use clap::{Parser, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::io::{BufReader, Write};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Example {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Dilog,
    Custom,
}

impl Example {
    pub fn label(&self) -> &'static str {
        match self {
            Example::One => "example1",
            Example::Two => "example2",
            Example::Three => "example3",
            Example::Dilog => "dilog",
            Example::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Equation {
    Mmm2,
    M6,
    #[value(name = "10g")]
    TenG,
    Pentagon,
    #[value(name = "10term")]
    TenTerm,
    R4,
    #[value(name = "4simplex")]
    Simplex4,
    #[value(name = "5simplex")]
    Simplex5,
    Inverse,
    Tetra,
    AsBlocks,
    Qseries,
    DilogIdentities,
}

impl Equation {
    pub fn name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }

    /// Report ids a run of this equation emits.
    pub fn report_ids(&self, example: Example) -> &'static [&'static str] {
        match self {
            Equation::Mmm2 => &["mmm2"],
            Equation::M6 if example == Example::Two => &["m6", "wid"],
            Equation::M6 => &["m6"],
            Equation::TenG => &["10g"],
            Equation::Pentagon => &["peg"],
            Equation::TenTerm => &["10term", "pentagon"],
            Equation::R4 => &["r4"],
            Equation::Simplex4 => &["4s"],
            Equation::Simplex5 => &["5s"],
            Equation::Inverse => &["inverse"],
            Equation::Tetra => &["tetra-algebra", "tetrahedron"],
            Equation::AsBlocks => &["as1", "as2", "as3"],
            Equation::Qseries => &["sum1", "sum2", "qalg3-assoc", "wid2"],
            Equation::DilogIdentities => &["phi0", "gamma-identity", "inversion", "sum3", "crossing", "wid2-continuum"],
        }
    }

    pub fn available(example: Example) -> &'static [Equation] {
        use Equation::*;
        match example {
            Example::One => &[Mmm2, M6, TenG, Pentagon, TenTerm, R4, Simplex4, Simplex5, Inverse, Qseries],
            Example::Two => &[Mmm2, M6, TenTerm, Qseries],
            Example::Three => &[Mmm2, M6, Pentagon, Tetra, AsBlocks, Qseries],
            Example::Dilog => &[DilogIdentities],
            Example::Custom => &[Mmm2, M6, TenG, Pentagon, R4, Simplex4, Simplex5],
        }
    }

    fn defaults(example: Example) -> Vec<Equation> {
        use Equation::*;
        match example {
            Example::One => vec![Mmm2, M6, TenG, Pentagon, R4, Simplex4],
            Example::Two => vec![Mmm2, M6],
            Example::Three => vec![Mmm2, M6, Pentagon, Tetra, AsBlocks],
            Example::Dilog => vec![DilogIdentities],
            Example::Custom => vec![Mmm2],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
}

/// Parses "0.5", "0.3+0.2i", "-0.1-2i", "2i" or "re,im".
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read a complex number from {s:?}");
    if let Some((re, im)) = t.split_once(',') {
        return Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?));
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| bad());
    };
    // the split is the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let num = |x: &str| -> std::result::Result<f64, String> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(C64::new(body[..k].parse().map_err(|_| bad())?, num(&body[k..])?)),
        None => Ok(C64::new(0.0, num(body)?)),
    }
}

#[derive(Parser, Clone, Debug)]
#[command(name = "simplexlab", version, about = "Numerical checks of Five-leg identities and simplex equations")]
pub struct SuiteConfig {
    /// Without it, the suite listing is printed.
    #[arg(long, value_enum)]
    pub example: Option<Example>,
    /// Form of the first example: M1, M2 or M3.
    #[arg(long, default_value = "M2")]
    pub form: Form,
    /// Cyclic order for the first example and for 10term.
    #[arg(long = "N", default_value_t = 2)]
    pub n: u32,
    /// Occupation cutoff for the third example.
    #[arg(long, default_value_t = 4)]
    pub cutoff: u32,
    /// Half width L of the index window −L..L of the second example.
    #[arg(long, default_value_t = 12)]
    pub window: i64,
    /// Deformation parameter; defaults to 0.5 for the third example, 0.37+0.2i for the second, random draws for the q-series.
    #[arg(long, value_parser = parse_complex)]
    pub q: Option<C64>,
    /// The second q of the second example.
    #[arg(long, value_parser = parse_complex, default_value = "0.81-0.1i")]
    pub qt: C64,
    /// Gaussian weight base of the second example.
    #[arg(long, value_parser = parse_complex, default_value = "0.6")]
    pub p: C64,
    #[arg(long, default_value_t = 0.8)]
    pub b: f64,
    /// Comma separated; defaults depend on the example.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub equations: Vec<Equation>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "SIMPLEXLAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    pub output: Output,
    #[arg(long)]
    pub out_path: Option<PathBuf>,
    /// Multiply a seeded choice of entries by 1+ε.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Five-leg dump for the custom example.
    #[arg(long)]
    pub m_file: Option<PathBuf>,
    /// Barred Five-leg dump for the custom example; the unbarred one is reused when absent.
    #[arg(long)]
    pub mbar_file: Option<PathBuf>,
    /// Print the available suites and exit.
    #[arg(long)]
    pub list: bool,
}

impl SuiteConfig {
    pub fn ex(&self) -> Example {
        self.example.unwrap_or(Example::One)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be positive".into()));
        }
        if let Some(eps) = self.perturb {
            if !eps.is_finite() {
                return Err(Error::InvalidInput("perturbation must be finite".into()));
            }
        }
        let avail = Equation::available(self.ex());
        for e in &self.equations {
            if !avail.contains(e) {
                return Err(Error::InvalidInput(format!("{} is not available for {}", e.name(), self.ex().label())));
            }
        }
        match self.ex() {
            Example::One if self.n < 2 => Err(Error::InvalidInput("N must be at least 2".into())),
            Example::One if self.form == Form::M3 && self.n % 2 == 0 => Err(Error::InvalidInput("form M3 needs odd N".into())),
            Example::Two if self.window < 1 => Err(Error::InvalidInput("window must be positive".into())),
            Example::Three if self.cutoff < 1 => Err(Error::InvalidInput("cutoff must be positive".into())),
            Example::Dilog if !(self.b > 0.0) => Err(Error::InvalidInput("b must be positive".into())),
            Example::Custom if self.m_file.is_none() => Err(Error::InvalidInput("the custom example needs --m-file".into())),
            _ => Ok(()),
        }
    }

    fn equations(&self) -> Vec<Equation> {
        let mut e = if self.equations.is_empty() { Equation::defaults(self.ex()) } else { self.equations.clone() };
        e.sort();
        e.dedup();
        e
    }

    fn q_or(&self, default: C64) -> C64 {
        self.q.unwrap_or(default)
    }
}

/// A report tagged with the example it belongs to.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub example: String,
    pub report: ResidualReport,
}

impl SuiteReport {
    pub fn to_json(&self) -> Value {
        let r = &self.report;
        let mut params = serde_json::Map::new();
        for (k, v) in &r.params {
            params.insert(k.clone(), v.clone());
        }
        if !r.flags.is_empty() {
            params.insert("flags".into(), json!(r.flags));
        }
        json!({
            "equation": r.equation_id,
            "example": self.example,
            "params": params,
            "lhs_norm": r.lhs_norm,
            "rhs_norm": r.rhs_norm,
            "abs_residual": r.abs_residual,
            "rel_residual": r.rel_residual,
            "tolerance": r.tolerance,
            "pass": r.pass,
            "mode": r.mode,
            "elapsed_ms": r.elapsed_ms,
        })
    }

    pub fn to_text(&self) -> String {
        let r = &self.report;
        let verdict = match (r.mode, r.pass) {
            (Mode::Inconclusive, _) => "????",
            (_, true) => "PASS",
            (_, false) => "FAIL",
        };
        let mode = serde_json::to_value(r.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let mut line = format!("{verdict} {:<16} {:<10} rel={:.3e} tol={:.1e} {mode}", r.equation_id, self.example, r.rel_residual, r.tolerance);
        if !r.flags.is_empty() {
            line.push_str(&format!(" [{}]", r.flags.join(",")));
        }
        line.push_str(&format!(" {:.1}ms", r.elapsed_ms));
        line
    }
}

/// 0 when every conclusive report passes, 1 on a failure, 3 when none is conclusive.
pub fn exit_code(reports: &[SuiteReport]) -> i32 {
    let conclusive: Vec<_> = reports.iter().filter(|r| r.report.mode != Mode::Inconclusive).collect();
    if conclusive.is_empty() {
        3
    } else if conclusive.iter().all(|r| r.report.pass) {
        0
    } else {
        1
    }
}

/// The worst of several draws of one identity, with the draw count attached.
pub fn worst_of(id: &str, reports: Vec<ResidualReport>, tol: f64) -> ResidualReport {
    let total_ms: f64 = reports.iter().map(|r| r.elapsed_ms).sum();
    let draws = reports.len();
    let conclusive = reports.iter().filter(|r| r.mode != Mode::Inconclusive).count();
    let pick = reports
        .into_iter()
        .max_by(|a, b| {
            let key = |r: &ResidualReport| (r.mode != Mode::Inconclusive, r.rel_residual);
            let (ka, kb) = (key(a), key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .unwrap_or_else(|| ResidualReport::new(id, 0.0, 0.0, 0.0, tol).inconclusive("no-draws"));
    let mut r = pick.with_tolerance(tol).param("draws", draws).param("conclusive_draws", conclusive);
    r.equation_id = id.to_string();
    r.elapsed_ms = total_ms;
    r
}

fn perturb_fiveleg(m: &FiveLeg, eps: f64, seed: u64) -> Result<FiveLeg> {
    let small = m.domains().iter().map(|d| d.cardinality() as u128).product::<u128>() <= 1 << 20;
    if small && m.arity() == 1 {
        let t = m.to_tensor()?;
        let entries = t.entries();
        if entries.is_empty() {
            return Err(Error::InvalidInput("cannot perturb an all-zero Five-leg".into()));
        }
        let (lin, _) = entries[ChaCha8Rng::seed_from_u64(seed).gen_range(0..entries.len())];
        let pos = t.unravel(lin);
        let vals: Vec<i64> = pos.iter().enumerate().flat_map(|(leg, &p)| m.domains()[leg].unflatten(p)).collect();
        m.perturb_entry(&vals, eps)
    } else {
        // a single entry would couple every component block, and sampled checks could miss it;
        // on a window the slice through 0 carries the largest weights
        let v = if m.comp_domain(0).lo() < 0 { 0 } else { 1 };
        m.perturb_where(&[0], &[v], eps)
    }
}

/// Every nonzero entry times 1+ε·u with a seeded u ∈ [−1, 1]. A single entry is
/// not enough here: checks restricted to low occupations never see most of them.
fn perturb_tensor(t: &ComplexTensor, eps: f64, seed: u64) -> ComplexTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = t.clone();
    for (lin, v) in t.entries() {
        out.add_linear(lin, v * eps * rng.gen_range(-1.0..1.0));
    }
    out
}

fn read_fiveleg(path: &PathBuf) -> Result<FiveLeg> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    FiveLeg::read_json(BufReader::new(f))
}

struct Family {
    m: FiveLeg,
    mbar: FiveLeg,
    /// Kernel and domain of a cyclic family.
    cyclic: Option<(ExponentKernel, IndexDomain)>,
}

fn family(cfg: &SuiteConfig) -> Result<Option<Family>> {
    let (m, mbar, cyclic) = match cfg.ex() {
        Example::One => {
            let k = ExponentKernel::root_of_unity(cfg.n)?;
            let d = IndexDomain::cyclic(cfg.n);
            let m = example1(&k, &d, cfg.form)?;
            let mb = m.clone().as_barred(true);
            (m, mb, Some((k, d)))
        }
        Example::Two => {
            let kq = ExponentKernel::q_real(cfg.q_or(C64::new(0.37, 0.2)))?;
            let kqt = ExponentKernel::q_real(cfg.qt)?;
            let (m, mb) = example2(&kq, &kqt, gaussian_weight(cfg.p), &IndexDomain::window(-cfg.window, cfg.window))?;
            (m, mb, None)
        }
        Example::Three => {
            let qp = QParams::new(cfg.q_or(C64::new(0.5, 0.0)))?;
            let s = SpectralSystem::single().random(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            let (m, mb) = example3(&qp, cfg.cutoff, &s)?;
            (m, mb, None)
        }
        Example::Custom => {
            let m = read_fiveleg(cfg.m_file.as_ref().expect("validated"))?;
            let mb = match &cfg.mbar_file {
                Some(p) => read_fiveleg(p)?,
                None => m.clone().as_barred(true),
            };
            (m, mb, None)
        }
        Example::Dilog => return Ok(None),
    };
    let (m, mbar) = match cfg.perturb {
        Some(eps) if cfg.ex() == Example::One => {
            let p = perturb_fiveleg(&m, eps, cfg.seed)?;
            let pb = p.clone().as_barred(true);
            (p, pb)
        }
        Some(eps) => (perturb_fiveleg(&m, eps, cfg.seed)?, perturb_fiveleg(&mbar, eps, cfg.seed)?),
        None => (m, mbar),
    };
    Ok(Some(Family { m, mbar, cyclic }))
}

fn verify_opts(cfg: &SuiteConfig) -> VerifyOptions {
    let mut o = VerifyOptions { tolerance: cfg.tol, samples: cfg.samples, seed: cfg.seed, ..Default::default() };
    if cfg.ex() == Example::Two {
        o.ext_range = Some((-2, 2));
    }
    o
}

fn simplex_opts(cfg: &SuiteConfig) -> SimplexOptions {
    SimplexOptions { tolerance: cfg.tol, samples: cfg.samples, seed: cfg.seed, ..Default::default() }
}

/// build_r4 against R assembled entry by entry from M and M̄.
fn r4_consistency(m: &FiveLeg, mbar: &FiveLeg, tol: f64) -> Result<ResidualReport> {
    let start = std::time::Instant::now();
    let r = build_r4(m, mbar)?;
    let doms = m.domains();
    let vals: Vec<i64> = doms[1].values();
    let d = vals.len();
    let labels = doms[0].values();
    let direct = ComplexTensor::from_fn_dense(&[d; 8], |x| {
        let v = |k: usize| vals[x[k]];
        labels
            .iter()
            .map(|&a| {
                let mv = m.entry(&[a, v(1), v(3), v(4), v(6)]).unwrap_or_default();
                if mv == C64::new(0.0, 0.0) {
                    return mv;
                }
                mv * mbar.entry(&[a, v(5), v(7), v(0), v(2)]).unwrap_or_default()
            })
            .sum()
    })?;
    let rep = ResidualReport::new("r4", r.norm(), direct.norm(), r.distance(&direct)?, tol).param("nnz", r.nnz()).param("d", d);
    Ok(rep.elapsed_since(start))
}

/// Randomized q-series draws. Without --q, each draw takes a real q: from
/// [0.1, 0.9] for the sums and associativity, [0.4, 0.9] with indices ≤ 4 for
/// the star-star relation. Smaller q or larger indices make the terms outgrow
/// the sum by more than 1e4 and the identities drown in cancellation.
fn qseries_suite(cfg: &SuiteConfig) -> Result<Vec<ResidualReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fixed = cfg.q.map(QParams::new).transpose()?;
    let q_in = |rng: &mut ChaCha8Rng, lo: f64| fixed.map_or_else(|| QParams::real(rng.gen_range(lo..0.9)), Ok);
    let disc = |rng: &mut ChaCha8Rng| C64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..std::f64::consts::TAU));
    let spec = |rng: &mut ChaCha8Rng| C64::new(rng.gen_range(0.0..1.0), rng.gen_range(-0.3..0.3));
    let (mut s1, mut s2, mut q3, mut w2) = (vec![], vec![], vec![], vec![]);
    for _ in 0..cfg.samples {
        let qp = q_in(&mut rng, 0.1)?;
        let (b, c) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
        let a = rng.gen_range(-8..=b.min(c));
        s1.push(qseries::verify_sum1(&qp, a, b, c)?);
        let (x, y) = (disc(&mut rng), disc(&mut rng));
        s2.push(qseries::verify_sum2(&qp, x, y, rng.gen_range(0..=8))?);
        let (u, v) = (spec(&mut rng), spec(&mut rng));
        q3.push(qseries::verify_qalg3_assoc(&qp, u, v, rng.gen_range(0..=8))?);
        let qp = q_in(&mut rng, 0.4)?;
        let (l, m, nu) = (spec(&mut rng), spec(&mut rng), spec(&mut rng));
        let (a, b) = (rng.gen_range(0..=4), rng.gen_range(0..=4));
        let ap = rng.gen_range(0..=a + b);
        w2.push(qseries::verify_star_star_w(&qp, l, m, nu, a, b, ap, a + b - ap)?);
    }
    Ok(vec![worst_of("sum1", s1, cfg.tol), worst_of("sum2", s2, cfg.tol), worst_of("qalg3-assoc", q3, cfg.tol), worst_of("wid2", w2, cfg.tol)])
}

fn wid_gauss(cfg: &SuiteConfig) -> Result<ResidualReport> {
    let p = cfg.p;
    let w = move |a: i64| qseries::gauss_weight(p, a);
    let mut reps = Vec::new();
    for a in -2..=2 {
        for b in -2..=2 {
            for c in -2..=2 {
                reps.push(qseries::verify_star_star_gauss(&w, a, b, c, (-cfg.window, cfg.window))?);
            }
        }
    }
    Ok(worst_of("wid", reps, 1e-8).cparam("p", p).param("window", cfg.window))
}

/// Beta-integral parameters drawn inside the analyticity window.
pub fn beta_draw(p: &DilogParams, rng: &mut impl Rng) -> [C64; 4] {
    let h = p.eta().im;
    let mut z = |lo: f64, hi: f64| C64::new(rng.gen_range(-0.4..0.4), h * rng.gen_range(lo..hi));
    [z(0.45, 0.6), z(0.45, 0.6), z(0.2, 0.3), z(0.2, 0.3)]
}

fn dilog_suite(cfg: &SuiteConfig) -> Result<Vec<ResidualReport>> {
    let p = DilogParams::new(cfg.b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = vec![dilog::verify_phi0(&p)?, dilog::verify_gamma_identity(&p)?];
    let mut inv = Vec::new();
    for _ in 0..20 {
        let x = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
        inv.push(dilog::verify_inversion(&p, x)?);
    }
    out.push(worst_of("inversion", inv, 1e-8));
    let mut beta = Vec::new();
    for _ in 0..cfg.samples.min(10) {
        let [a1, a2, b1, b2] = beta_draw(&p, &mut rng);
        beta.push(dilog::verify_beta_integral(&p, a1, a2, b1, b2)?);
    }
    out.push(worst_of("sum3", beta, 1e-6));
    let cross: Vec<_> = [0.2, 0.45].iter().map(|&x| dilog::verify_crossing(&p, C64::new(x, 0.0))).collect::<Result<_>>()?;
    out.push(worst_of("crossing", cross, 1e-6).flag("best-effort"));
    let c = |re: f64, im: f64| C64::new(re, im);
    out.push(dilog::verify_star_star_continuum(&p, c(0.3, 0.3), c(0.1, 0.25), c(-0.2, 0.3), c(0.4, 0.3), c(0.3, 0.3), c(0.1, 0.3), c(0.6, 0.3), 0.15)?);
    Ok(out)
}

fn run_equation(cfg: &SuiteConfig, fam: Option<&Family>, eq: Equation) -> Result<Vec<ResidualReport>> {
    let need = || fam.ok_or_else(|| Error::InvalidInput(format!("{} needs a Five-leg family", eq.name())));
    let eps = cfg.perturb;
    Ok(match eq {
        Equation::Mmm2 => {
            let f = need()?;
            let mut o = verify_opts(cfg);
            if cfg.ex() == Example::Three {
                o.coverage = Coverage::Full;
            }
            vec![verify_mmm2(&f.m, &o)?]
        }
        Equation::M6 => {
            let f = need()?;
            let mut v = vec![verify_m6(&f.m, &f.mbar, &verify_opts(cfg))?];
            if cfg.ex() == Example::Two {
                v.push(wid_gauss(cfg)?);
            }
            v
        }
        Equation::TenG => {
            let f = need()?;
            vec![verify_10g_operator(&f.m, &f.mbar, cfg.tol)?]
        }
        Equation::Pentagon => {
            let f = need()?;
            match cfg.ex() {
                Example::Three => {
                    let qp = QParams::new(cfg.q_or(C64::new(0.5, 0.0)))?;
                    let fam = MatrixFamily::Qosc { qp, cutoff: 2 * cfg.cutoff as usize + 4 };
                    let mut reps = Vec::new();
                    let top = cfg.cutoff as i64 - 1;
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    for _ in 0..cfg.samples.min(20) {
                        let mut l = || [rng.gen_range(0..=top), rng.gen_range(0..=top)];
                        reps.push(verify_peg_matrix(fam, &f.m, [l(), l(), l()])?);
                    }
                    vec![worst_of("peg", reps, cfg.tol).param("realization", "q-oscillator")]
                }
                _ => vec![verify_peg_adjoint(&f.m, cfg.tol)?],
            }
        }
        Equation::TenTerm => {
            let n = if cfg.ex() == Example::Two { 3 } else { cfg.n as usize };
            let (s, sb) = shift_solution(n)?;
            let s = match eps {
                Some(e) => perturb_tensor(&s, e, cfg.seed),
                None => s,
            };
            vec![verify_pentagon(&s, &sb, cfg.tol)?, verify_10term(&s, &sb, cfg.tol)?]
        }
        Equation::R4 => {
            let f = need()?;
            vec![r4_consistency(&f.m, &f.mbar, cfg.tol)?]
        }
        Equation::Simplex4 => {
            let f = need()?;
            vec![verify_4simplex(&build_r4(&f.m, &f.mbar)?, None, &simplex_opts(cfg))?]
        }
        Equation::Simplex5 => {
            let f = need()?;
            let o = SimplexOptions { samples: cfg.samples.min(50), ..simplex_opts(cfg) };
            vec![verify_5simplex(&build_r5(&f.m, &f.mbar)?, &o)?]
        }
        Equation::Inverse => {
            let f = need()?;
            let (k, d) = f.cyclic.as_ref().ok_or_else(|| Error::Unsupported("inverse needs the first example".into()))?;
            vec![verify_r_inverse(&build_r4(&f.m, &f.mbar)?, &example1_rbar(k, d)?, cfg.tol)?]
        }
        Equation::Tetra => {
            let qp = QParams::new(cfg.q_or(C64::new(0.5, 0.0)))?;
            let cut = cfg.cutoff as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut draw = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (l, mu) = (draw(), draw());
            let mut r3 = build_r3_trivial(&qp, l, mu, cut)?;
            if let Some(e) = eps {
                r3 = perturb_tensor(&r3, e, cfg.seed);
            }
            let alg = verify_tetrahedral_algebra(&r3, &build_lambda3(&qp, cut)?, cfg.tol)?;
            let mut fs = tetra_factors(&qp, cut, draw(), draw(), draw())?.to_vec();
            if let Some(e) = eps {
                fs[0] = perturb_tensor(&fs[0], e, cfg.seed);
            }
            vec![alg, verify_tetrahedron(&fs, cfg.tol)?]
        }
        Equation::AsBlocks => {
            let qp = QParams::new(cfg.q_or(C64::new(0.5, 0.0)))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut draw = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let sp = BlockSpectral { a: draw(), b: draw(), e: draw() };
            verify_as_blocks(&qp, sp, (cfg.cutoff as i64 - 1).max(0), cfg.tol.min(1e-12))?
        }
        Equation::Qseries => qseries_suite(cfg)?,
        Equation::DilogIdentities => dilog_suite(cfg)?,
    })
}

/// Runs the configured equations; builders run once before the checks.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    cfg.validate()?;
    crate::with_threads(cfg.threads, || {
        let fam = family(cfg)?;
        let example = match &fam {
            Some(f) if cfg.ex() != Example::Custom => f.m.family().label(),
            _ => cfg.ex().label().to_string(),
        };
        let mut out = Vec::new();
        for eq in cfg.equations() {
            for mut r in run_equation(cfg, fam.as_ref(), eq)? {
                if let Some(e) = cfg.perturb {
                    r = r.param("perturb", e);
                }
                if let Some(q) = cfg.q {
                    r.params.entry("q".into()).or_insert_with(|| complex_json(q));
                }
                out.push(SuiteReport { example: example.clone(), report: r });
            }
        }
        out.sort_by(|a, b| {
            a.report
                .equation_id
                .cmp(&b.report.equation_id)
                .then_with(|| serde_json::to_string(&a.report.params).unwrap_or_default().cmp(&serde_json::to_string(&b.report.params).unwrap_or_default()))
        });
        Ok(out)
    })
}

/// Families, their equations with emitted report ids, and defaults.
pub fn list_suites(output: Output) -> String {
    let examples = [Example::One, Example::Two, Example::Three, Example::Dilog, Example::Custom];
    let defaults = json!({"tol": 1e-10, "samples": 200, "seed": 0, "N": 2, "cutoff": 4, "window": 12, "b": 0.8, "p": 0.6, "form": "M2"});
    match output {
        Output::Json => {
            let fams: Vec<Value> = examples
                .iter()
                .map(|ex| {
                    let eqs: Vec<Value> = Equation::available(*ex).iter().map(|e| json!({"name": e.name(), "reports": e.report_ids(*ex)})).collect();
                    let def: Vec<String> = Equation::defaults(*ex).iter().map(|e| e.name()).collect();
                    json!({"example": ex.to_possible_value().map(|v| v.get_name().to_string()), "family": ex.label(), "equations": eqs, "default_equations": def})
                })
                .collect();
            let schema = json!({
                "equation": "string", "example": "string", "params": "object", "lhs_norm": "number", "rhs_norm": "number",
                "abs_residual": "number", "rel_residual": "number", "tolerance": "number", "pass": "bool",
                "mode": ["full", "sampled", "inconclusive"], "elapsed_ms": "number"
            });
            serde_json::to_string_pretty(&json!({"families": fams, "defaults": defaults, "report_schema": schema})).unwrap_or_default()
        }
        Output::Text => {
            let mut s = String::new();
            for ex in examples {
                s.push_str(&format!("{} (--example {})\n", ex.label(), ex.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()));
                for e in Equation::available(ex) {
                    let mark = if Equation::defaults(ex).contains(e) { "*" } else { " " };
                    s.push_str(&format!("  {mark} {:<17} -> {}\n", e.name(), e.report_ids(ex).join(", ")));
                }
            }
            s.push_str(&format!("(* = run by default)\ndefaults: {defaults}\n"));
            s
        }
    }
}

fn emit(cfg: &SuiteConfig, reports: &[SuiteReport]) -> Result<()> {
    let mut text = String::new();
    for r in reports {
        match cfg.output {
            Output::Json => text.push_str(&r.to_json().to_string()),
            Output::Text => text.push_str(&r.to_text()),
        }
        text.push('\n');
    }
    match &cfg.out_path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Parses arguments, runs the suite and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match SuiteConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cfg.list || cfg.example.is_none() {
        print!("{}", list_suites(cfg.output));
        return 0;
    }
    if cfg.perturb.is_some() && matches!(cfg.ex(), Example::Dilog) {
        eprintln!("note: --perturb has no Five-leg to act on for the dilog suite");
    }
    let reports = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = emit(&cfg, &reports) {
        eprintln!("error: {e}");
        return 2;
    }
    exit_code(&reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &str) -> SuiteConfig {
        SuiteConfig::try_parse_from(std::iter::once("simplexlab").chain(args.split_whitespace())).unwrap()
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.5").unwrap(), C64::new(0.5, 0.0));
        assert_eq!(parse_complex("0.3+0.2i").unwrap(), C64::new(0.3, 0.2));
        assert_eq!(parse_complex("-1e-3-2i").unwrap(), C64::new(-1e-3, -2.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("1,2").unwrap(), C64::new(1.0, 2.0));
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn example1_passes_and_perturbation_fails() {
        let reps = run_suite(&cfg("--example 1 --N 2 --equations mmm2,m6,4simplex")).unwrap();
        assert_eq!(reps.len(), 3);
        assert_eq!(exit_code(&reps), 0);
        let bad = run_suite(&cfg("--example 1 --N 2 --perturb 1e-3 --equations mmm2")).unwrap();
        assert_eq!(exit_code(&bad), 1);
    }

    #[test]
    fn invalid_configs() {
        assert!(run_suite(&cfg("--example 1 --tol 0")).is_err());
        assert!(run_suite(&cfg("--example 1 --form M3 --N 2")).is_err());
        assert!(run_suite(&cfg("--example dilog --equations mmm2")).is_err());
        assert!(run_suite(&cfg("--example custom")).is_err());
        assert!(SuiteConfig::try_parse_from(["x", "--example", "7"]).is_err());
    }

    #[test]
    fn exit_codes() {
        let r = |pass: bool, mode: Mode| SuiteReport {
            example: "x".into(),
            report: ResidualReport::new("e", 1.0, 1.0, 0.0, 1.0).mode(mode).with_tolerance(if pass { 1.0 } else { -1.0 }),
        };
        assert_eq!(exit_code(&[r(true, Mode::Full), r(false, Mode::Inconclusive)]), 0);
        assert_eq!(exit_code(&[r(true, Mode::Sampled), r(false, Mode::Full)]), 1);
        assert_eq!(exit_code(&[r(false, Mode::Inconclusive)]), 3);
        assert_eq!(exit_code(&[]), 3);
    }

    #[test]
    fn deterministic_json() {
        let c = cfg("--example 3 --cutoff 3 --equations m6,mmm2 --samples 20 --seed 5");
        let strip = |v: Vec<SuiteReport>| -> Vec<String> {
            v.iter()
                .map(|r| {
                    let mut j = r.to_json();
                    j["elapsed_ms"] = json!(0);
                    j.to_string()
                })
                .collect()
        };
        let a = strip(run_suite(&c).unwrap());
        assert_eq!(a, strip(run_suite(&c).unwrap()));
        assert!(a[0].contains("\"equation\":\"m6\""));
        let keys: Vec<String> = run_suite(&c).unwrap()[0].to_json().as_object().unwrap().keys().cloned().collect();
        for k in ["equation", "example", "params", "lhs_norm", "rhs_norm", "abs_residual", "rel_residual", "tolerance", "pass", "mode", "elapsed_ms"] {
            assert!(keys.contains(&k.to_string()), "{k}");
        }
    }

    #[test]
    fn listing_names_match_emitted_ids() {
        assert!(!list_suites(Output::Text).is_empty());
        let v: Value = serde_json::from_str(&list_suites(Output::Json)).unwrap();
        assert!(v["report_schema"]["mode"].is_array());
        let c = cfg("--example 1 --N 2 --equations mmm2,m6,10g,pentagon,10term,r4,inverse --samples 5");
        let ids: std::collections::BTreeSet<String> = run_suite(&c).unwrap().into_iter().map(|r| r.report.equation_id).collect();
        let listed: std::collections::BTreeSet<String> = c.equations().iter().flat_map(|e| e.report_ids(Example::One).iter().map(|s| s.to_string())).collect();
        assert_eq!(ids, listed);
    }
}
