//! Equation harness: index-level identities, operator identities, R-matrix
//! builders and the tetrahedron / 4-simplex / 5-simplex checks.

pub mod index;
pub mod layout;
pub mod operators;
pub mod rmatrix;
pub mod tetra;

pub use index::{verify_m6, verify_mmm2, Coverage, VerifyOptions};
pub use layout::EquationLayout;
pub use operators::{
    adjoint_s, adjoint_sbar, build_r3_factorized, build_r4_factorized, shift_solution, verify_10g_operator, verify_10term, verify_peg_adjoint, verify_pentagon,
    OperatorFamily,
};
pub use rmatrix::{build_r4, build_r5, verify_4simplex, verify_5simplex, verify_layout, verify_r_inverse, SimplexOptions};
pub use tetra::{build_lambda3, build_r3_trivial, tetra_factors, verify_as_blocks, verify_tetrahedral_algebra, verify_tetrahedron, BlockSpectral};
