//! Faddeev's quantum dilogarithm: values and a few of its identities.

use simplexlab::dilog::{faddeev_phi, verify_beta_integral, verify_gamma_identity, verify_inversion, verify_phi0, DilogParams};
use simplexlab::C64;

fn main() -> simplexlab::Result<()> {
    let b: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    let p = DilogParams::new(b)?;
    for x in [-1.0, 0.0, 0.5, 2.0] {
        println!("φ({x}) = {:.10}", faddeev_phi(&p, C64::new(x, 0.0))?);
    }
    let c = C64::new;
    let reps = [
        verify_phi0(&p)?,
        verify_gamma_identity(&p)?,
        verify_inversion(&p, c(0.7, 0.2))?,
        verify_beta_integral(&p, c(0.3, 0.5), c(-0.2, 0.55), c(0.1, 0.25), c(-0.15, 0.3))?,
    ];
    for r in reps {
        println!("{:<15} rel={:.2e} {:.0}ms", r.equation_id, r.rel_residual, r.elapsed_ms);
    }
    Ok(())
}
