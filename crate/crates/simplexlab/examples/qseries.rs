//! Finite q-series identities behind the oscillator structure constants.

use simplexlab::qseries::{osc_coeff_m, verify_qalg3_assoc, verify_star_star_w, verify_sum1, verify_sum2, QParams};
use simplexlab::C64;

fn main() -> simplexlab::Result<()> {
    let qp = QParams::real(0.6)?;
    let c = C64::new;
    let reps = [
        verify_sum1(&qp, -2, 3, 4)?,
        verify_sum2(&qp, c(0.3, 0.4), c(-0.5, 0.1), 5)?,
        verify_qalg3_assoc(&qp, c(0.4, 0.1), c(0.7, -0.2), 3)?,
        verify_star_star_w(&qp, c(0.2, 0.1), c(0.5, 0.0), c(0.8, -0.2), 2, 3, 1, 4)?,
    ];
    for r in reps {
        println!("{:<12} rel={:.2e}", r.equation_id, r.rel_residual);
    }
    let row: Vec<String> = (0..=3).map(|k| format!("{:.3e}", osc_coeff_m(&qp, 3, 4, k).unwrap())).collect();
    println!("m(3,4;k) = {}", row.join(", "));
    Ok(())
}
