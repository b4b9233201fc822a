//! The Gaussian-weight family on a window of Z, and the star-star relation of its weight.

use simplexlab::fiveleg::{example2, gaussian_weight};
use simplexlab::qseries::{gauss_weight, verify_star_star_gauss};
use simplexlab::simplex::{verify_m6, verify_mmm2, VerifyOptions};
use simplexlab::{ExponentKernel, IndexDomain, C64};

fn main() -> simplexlab::Result<()> {
    let p = C64::new(0.6, 0.0);
    let (kq, kqt) = (ExponentKernel::q_real(C64::new(0.37, 0.2))?, ExponentKernel::q_real(C64::new(0.81, -0.1))?);
    let (m, mbar) = example2(&kq, &kqt, gaussian_weight(p), &IndexDomain::window(-12, 12))?;
    let o = VerifyOptions { ext_range: Some((-2, 2)), samples: 100, ..Default::default() };
    for r in [verify_mmm2(&m, &o)?, verify_m6(&m, &mbar, &o)?] {
        println!("{:<5} rel={:.2e} {:?} {:?}", r.equation_id, r.rel_residual, r.mode, r.flags);
    }
    let w = |a: i64| gauss_weight(p, a);
    let r = verify_star_star_gauss(&w, 1, -1, 2, (-12, 12))?;
    println!("wid   rel={:.2e} {:?}", r.rel_residual, r.flags);
    Ok(())
}
