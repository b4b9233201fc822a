//! The q-oscillator family: mmm2 in full, the pentagon through truncated
//! oscillator matrices, and the blocks of the reordering kernel.

use rand::SeedableRng;
use simplexlab::fiveleg::{example3, verify_peg_matrix, MatrixFamily, SpectralSystem};
use simplexlab::qseries::QParams;
use simplexlab::simplex::{verify_as_blocks, verify_mmm2, BlockSpectral, Coverage, VerifyOptions};
use simplexlab::C64;

fn main() -> simplexlab::Result<()> {
    let qp = QParams::real(0.5)?;
    let spectral = SpectralSystem::single().random(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
    let (m, _) = example3(&qp, 4, &spectral)?;
    let r = verify_mmm2(&m, &VerifyOptions { coverage: Coverage::Full, ..Default::default() })?;
    println!("mmm2 rel={:.2e} {:?}", r.rel_residual, r.mode);
    let r = verify_peg_matrix(MatrixFamily::Qosc { qp, cutoff: 12 }, &m, [[1, 0], [0, 2], [1, 1]])?;
    println!("peg  rel={:.2e} columns={}", r.rel_residual, r.params["columns"]);
    let sp = BlockSpectral { a: C64::new(0.3, 0.1), b: C64::new(-0.4, 0.2), e: C64::new(0.1, -0.5) };
    for r in verify_as_blocks(&qp, sp, 3, 1e-12)? {
        println!("{:<4} rel={:.2e}", r.equation_id, r.rel_residual);
    }
    Ok(())
}
