//! Tetrahedron equation for oscillator R3 factors, and the algebra it intertwines.

use simplexlab::qseries::QParams;
use simplexlab::simplex::{build_lambda3, build_r3_trivial, tetra_factors, verify_tetrahedral_algebra, verify_tetrahedron};
use simplexlab::C64;

fn main() -> simplexlab::Result<()> {
    let qp = QParams::real(0.5)?;
    let cut = 3;
    let r3 = build_r3_trivial(&qp, C64::new(0.4, 0.2), C64::new(-0.3, 0.6), cut)?;
    let r = verify_tetrahedral_algebra(&r3, &build_lambda3(&qp, cut)?, 1e-10)?;
    println!("algebra     rel={:.2e} {:?}", r.rel_residual, r.flags);
    let fs = tetra_factors(&qp, cut, C64::new(0.2, 0.1), C64::new(0.5, -0.3), C64::new(-0.1, 0.4))?;
    let r = verify_tetrahedron(&fs, 1e-10)?;
    println!("tetrahedron rel={:.2e} {:?}", r.rel_residual, r.flags);
    Ok(())
}
