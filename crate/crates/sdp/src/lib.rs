//! Backend-neutral conic problem description and a primal-dual
//! interior-point solver for semidefinite programs whose matrix variables
//! are complex Hermitian blocks.
//!
//! A [`ConicProblem`] is built from positive semidefinite Hermitian blocks,
//! nonnegative scalars and affine constraints. Inequalities are lowered to
//! equalities with slack scalars, giving the standard primal form
//!
//! ```text
//! minimize    <C, X>
//! subject to  <A_i, X> = b_i,   i = 1..m
//!             X = (X_1, .., X_B, x_lp),  X_b ⪰ 0,  x_lp ≥ 0
//! ```
//!
//! where `<A, X> = Re tr(A X)` on each Hermitian block.

mod problem;
mod solver;

pub use problem::{BlockId, ConicProblem, Constraint, LinExpr, ScalarId, Sense, VarRole};
pub use solver::{solve, Solution, SolveError, SolveStats, SolveStatus, SolverOptions};

/// Complex Hermitian matrix used for blocks and coefficients.
pub type HermMatrix = nalgebra::DMatrix<num_complex::Complex64>;
