//! The equality-constrained problem abstraction shared by the solver,
//! the certification layer, and the CLI.
//!
//! A problem is an immutable bundle of dimension data, the constraint
//! system `A x = b`, and objective oracles: value, gradient, and an
//! inverse-Hessian apply that exploits the block-diagonal structure
//! (1x1 and 2x2 blocks). Products with `A` and `A^T` are exposed through
//! layout-aware kernels that agree with [`SparseMatrix::spmv`] but stream
//! the board in flat order, which is what makes the large instances cheap.

use crate::error::Result;
use crate::newton::{NewtonConfig, NewtonStep};
use crate::sparse::SparseMatrix;

/// Inverse of a block-diagonal Hessian, prepared once per Newton iterate.
///
/// `inv_diag` holds the diagonal of the inverse; each entry of `pair_off`
/// is `(i, w)` meaning coordinates `i, i + 1` form a 2x2 block whose
/// inverse has off-diagonal value `w` (the diagonal parts already sit in
/// `inv_diag`).
#[derive(Debug, Clone)]
pub struct HessianInverse {
    inv_diag: Vec<f64>,
    pair_off: Vec<(u32, f64)>,
}

impl HessianInverse {
    pub fn diagonal(inv_diag: Vec<f64>) -> Self {
        HessianInverse { inv_diag, pair_off: Vec::new() }
    }

    pub fn with_pairs(inv_diag: Vec<f64>, pair_off: Vec<(u32, f64)>) -> Self {
        HessianInverse { inv_diag, pair_off }
    }

    pub fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    pub fn inv_diag_entry(&self, i: usize) -> f64 {
        self.inv_diag[i]
    }

    /// `out = H^{-1} v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.inv_diag.len());
        assert_eq!(out.len(), v.len());
        crate::vecops::mul_into(&self.inv_diag, v, out);
        for &(i, w) in &self.pair_off {
            let i = i as usize;
            out[i] += w * v[i + 1];
            out[i + 1] += w * v[i];
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        out
    }
}

/// An equality-constrained entropy-minimization instance.
///
/// Implementations are immutable after construction and safe to share
/// across threads; every oracle is a pure function of its arguments.
pub trait Problem: Send + Sync {
    /// Board size n the instance was built for.
    fn board_size(&self) -> usize;

    /// Number of primal variables p.
    fn num_vars(&self) -> usize;

    /// Number of constraint rows q.
    fn num_rows(&self) -> usize;

    /// The constraint matrix, row-compressed.
    fn matrix(&self) -> &SparseMatrix;

    /// The constraint right-hand side b.
    fn rhs(&self) -> &[f64];

    /// Objective value; defined for componentwise nonnegative `x`.
    fn objective(&self, x: &[f64]) -> Result<f64>;

    /// Objective gradient; defined for strictly positive `x`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// `out = A x`, using the layout-aware kernel.
    fn apply_constraints_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = A^T y`, using the layout-aware kernel.
    fn apply_constraints_transpose_into(&self, y: &[f64], out: &mut [f64]);

    /// Prepares the inverse-Hessian operator at `x`.
    fn hessian_inverse(&self, x: &[f64]) -> Result<HessianInverse>;

    /// Solves the KKT system for the Newton direction at `x` given the
    /// residuals. The standard route is the positive definite Schur
    /// complement solved by MINRES; problems with structurally singular
    /// Hessian blocks substitute an equivalent elimination.
    fn solve_newton_step(
        &self,
        x: &[f64],
        r_d: &[f64],
        r_p: &[f64],
        cfg: &NewtonConfig,
    ) -> Result<NewtonStep>;
}
