//! Dense primal-dual interior-point solver for linear, rotated second-order
//! and semidefinite cone programs, plus Hermitian-matrix helpers for complex
//! SDPs.

pub mod corpus;
pub mod error;
pub mod hermitian;
mod kernel;
pub mod problem;
pub mod solver;
pub mod svec;

pub use error::ConicError;
pub use problem::{Cone, ConicProblem, ProblemBuilder};
pub use solver::{solve_conic, ALMOST_FACTOR, ConicSolution, IterationInfo, SolveStatus, SolverOptions};
