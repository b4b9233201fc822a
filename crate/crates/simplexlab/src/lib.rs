//! Five-leg structure constants and numerical verification of the pentagonal
//! algebra, tetrahedron, 4-simplex and 5-simplex equations.
//!
//! The substrate ([`kernel`], [`domain`], [`tensor`], [`network`], [`sites`],
//! [`report`]) is shared by the families in [`fiveleg`] and the verifiers in
//! [`simplex`], [`qseries`] and [`dilog`]. The [`cli`] module drives suites.

pub mod cli;
pub mod dilog;
pub mod domain;
pub mod error;
pub mod fiveleg;
pub mod kernel;
pub mod network;
pub mod qseries;
pub mod quad;
pub mod report;
pub mod simplex;
pub mod sites;
pub mod tensor;

pub use domain::IndexDomain;
pub use error::{Error, Result};
pub use fiveleg::FiveLeg;
pub use kernel::{bracket, gauss_bracket, ExponentKernel, KernelMode};
pub use num_complex::Complex64 as C64;
pub use report::{residual, Mode, ResidualReport};
pub use sites::embed_on_sites;
pub use tensor::{contract, ComplexTensor};

/// Runs `f` on a pool of `threads` workers, or on the global pool when None.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
