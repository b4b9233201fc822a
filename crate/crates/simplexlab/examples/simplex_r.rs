//! R matrices built from a Five-leg pair, checked against the 4- and 5-simplex equations.

use simplexlab::fiveleg::{example1, Form};
use simplexlab::simplex::{build_r4, build_r5, verify_4simplex, verify_5simplex, Coverage, SimplexOptions};
use simplexlab::{ExponentKernel, IndexDomain};

fn main() -> simplexlab::Result<()> {
    for n in [2u32, 3] {
        let m = example1(&ExponentKernel::root_of_unity(n)?, &IndexDomain::cyclic(n), Form::M2)?;
        let mbar = m.clone().as_barred(true);
        let r4 = build_r4(&m, &mbar)?;
        let rep = verify_4simplex(&r4, None, &SimplexOptions::default())?;
        println!("N={n} R4 nnz={} 4-simplex rel={:.2e} {:?} {:.0}ms", r4.nnz(), rep.rel_residual, rep.mode, rep.elapsed_ms);
    }
    let m = example1(&ExponentKernel::root_of_unity(2)?, &IndexDomain::cyclic(2), Form::M2)?;
    let r5 = build_r5(&m, &m.clone().as_barred(true))?;
    let o = SimplexOptions { coverage: Coverage::Sampled, samples: 50, ..Default::default() };
    let rep = verify_5simplex(&r5, &o)?;
    println!("N=2 5-simplex over {} random columns rel={:.2e} {:?}", o.samples, rep.rel_residual, rep.mode);
    Ok(())
}
