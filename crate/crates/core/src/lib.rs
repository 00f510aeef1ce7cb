//! Nonlocal Orlicz modulars on uniform grids: Young functions, kernel pairs,
//! the modulars and their norms, polarization and symmetric decreasing
//! rearrangement, and the constrained minimization behind Poincaré constants
//! and first eigenvalues.
//!
//! Heavy sums run through [`sum::chunked_sum`], so results are bit-identical
//! with and without the `parallel` feature.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod field;
pub mod kernel;
pub mod modular;
pub mod quad;
pub mod rearrange;
pub mod suite;
pub mod sum;
pub mod young;

pub use eigen::{EigenProblem, EigenResult, OptimizerSettings};
pub use error::{Error, Result};
pub use field::{DomainMask, Field, Grid, HalfSpace, Mollifier};
pub use kernel::KernelPair;
pub use modular::{PairTable, Reach};
pub use sum::Exec;
pub use young::YoungFunction;
