//! Conic programs over products of zero, nonnegative, second-order and PSD
//! cones, and an ADMM solver for them.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    1/2 x'Px + q'x + c
//! subject to  Ax + s = b,  s in K1 x K2 x ...
//! ```
//!
//! and assembled with [`ProblemBuilder`], which takes affine expressions that
//! must lie in a cone.

pub mod cone;
pub mod hermitian;
pub mod problem;
pub mod solver;

pub use cone::{project_psd, project_psd_hermitian, project_soc, Cone};
pub use problem::{Affine, ConicProblem, CsrMatrix, ProblemBuilder, VariableLayout};
pub use solver::{solve, AdmmSolver, Settings, SolveReport, SolveStatus, TraceRow, WarmStart};

#[derive(Debug, thiserror::Error)]
pub enum ConicError {
    #[error("problem assembly: {0}")]
    Assembly(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
