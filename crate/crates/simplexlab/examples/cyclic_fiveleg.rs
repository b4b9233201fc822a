//! The cyclic family over Z_N: index-form identities and their operator twins.

use simplexlab::fiveleg::{example1, Form};
use simplexlab::simplex::{verify_10g_operator, verify_m6, verify_mmm2, verify_peg_adjoint, VerifyOptions};
use simplexlab::{ExponentKernel, IndexDomain};

fn main() -> simplexlab::Result<()> {
    let n: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let k = ExponentKernel::root_of_unity(n)?;
    let m = example1(&k, &IndexDomain::cyclic(n), Form::M2)?;
    let mbar = m.clone().as_barred(true);
    let o = VerifyOptions::default();
    for r in [verify_mmm2(&m, &o)?, verify_peg_adjoint(&m, 1e-10)?, verify_m6(&m, &mbar, &o)?, verify_10g_operator(&m, &mbar, 1e-10)?] {
        println!("{:<6} rel={:.2e} pass={}", r.equation_id, r.rel_residual, r.pass);
    }
    let bad = m.perturb_entry(&[0, 0, 0, 0, 0], 1e-3)?;
    println!("perturbed mmm2 rel={:.2e}", verify_mmm2(&bad, &o)?.rel_residual);
    Ok(())
}
