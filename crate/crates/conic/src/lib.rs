//! Small semidefinite programs over Hermitian and real symmetric matrix
//! variables.
//!
//! Programs are modeled with complex Hermitian blocks, lifted to real
//! symmetric form, and solved either by a first-order splitting method with
//! PSD projections by eigendecomposition or by a primal-dual interior-point
//! method.

pub mod dump;
pub mod expr;
mod ipm;
pub mod program;
pub mod realify;
pub mod solver;

pub use dump::dump_program;
pub use expr::{CExpr, LinExpr, MatrixExpr};
pub use program::{ConicProgram, MatVar, ScalarVar};
pub use realify::{realify_hermitian, realify_program, RealProgram};
pub use solver::{solve, solve_real, solve_warm, ConicSolution, Method, SolveStatus, SolverOptions, WarmStart};
