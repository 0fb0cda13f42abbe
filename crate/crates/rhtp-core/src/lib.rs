//! Sparse recovery via regularized hard thresholding pursuit.
//!
//! The crate provides:
//! - [`sensing`]: problem instances, hard thresholding, restricted least
//!   squares, projections, and restricted-isometry-constant computation;
//! - [`regularizer`]: decomposable regularizers, the coordinate maps
//!   `psi_j(x) = x - gamma_j g_j'(x)`, their inverses, and the diagonal
//!   Jacobian matrix `M`;
//! - [`algo`]: the RHTP solver with its HTP and IHT baselines, producing
//!   full iteration traces;
//! - [`analysis`]: runnable convergence diagnostics — the conjugate
//!   z-domain dynamics, descent and contraction checkers, iterate-bound
//!   and inequality checkers, and iteration-count predictors;
//! - [`mat_io`]: binary and CSV matrix exchange formats.

pub mod algo;
pub mod analysis;
pub mod error;
pub mod mat_io;
pub mod regularizer;
pub mod sensing;

pub use error::{Result, RhtpError};
