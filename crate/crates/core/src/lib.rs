//! Certified lower and upper bounds on the n-queens constant.
//!
//! The number `Q(n)` of mutually non-attacking placements of n queens on an
//! n x n board satisfies `Q(n)^{1/n} / n -> e^{-alpha}` for a constant
//! `alpha`. Sandwiching `alpha` reduces to two families of convex programs:
//! a lower-bound program and an upper-bound program, both of the form
//! `minimize f(x) subject to A x = b` with entropy-like objectives over
//! chessboard "triangle" densities. This crate builds those programs for
//! any board size, solves them with an infeasible-start Newton method whose
//! linear algebra is matrix-free (MINRES on the Schur complement), and
//! turns the results into defensible bounds: a Lagrangian dual evaluation
//! for the lower bound and a feasible-point objective evaluation for the
//! upper bound.
//!
//! Entry points:
//!
//! * [`lower::build_lower`] / [`upper::build_upper`] /
//!   [`upper::build_approx_upper`] construct problem instances.
//! * [`newton::solve`] runs the solver on anything implementing
//!   [`problem::Problem`].
//! * [`certify`] converts solver output into [`certify::BoundCertificate`]s.
//! * [`driver`] wires the full pipelines (including the two-phase
//!   warm-started upper bound) used by the command-line tool.
//!
//! The companion book under `book/` walks through the mathematics; its code
//! snippets compile against this crate and run as doctests.

pub mod board;
pub mod certify;
pub mod driver;
pub mod error;
pub mod lower;
pub mod minres;
pub mod newton;
pub mod problem;
pub mod scalar;
pub mod sparse;
pub mod upper;
pub mod vecops;

pub use board::{diag_sum, antidiag_sum, BoardLayout, Group, LayoutKind};
pub use certify::{certify_lower, certify_upper, project_feasible, BoundCertificate, BoundKind};
pub use error::{Error, Result};
pub use lower::{build_lower, LowerProblem};
pub use newton::{solve, Iterate, NewtonConfig, NewtonSolution, SolveTrace};
pub use problem::Problem;
pub use upper::{build_approx_upper, build_upper, lift_approx_solution, ApproxUpperProblem, UpperProblem};

#[cfg(doctest)]
mod book;
