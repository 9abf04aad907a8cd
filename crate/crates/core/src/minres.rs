//! Matrix-free MINRES for symmetric linear systems.
//!
//! This is the standard Lanczos recurrence with the tridiagonal factor kept
//! in QR form by Givens rotations; no restarting, no reorthogonalization.
//! The solver only ever touches the operator through `y -> S y`, which is
//! how the Schur systems stay matrix-free. Residual-norm estimates are
//! monotone non-increasing by construction; the reported final residual is
//! recomputed from the returned iterate rather than trusted from the
//! recurrence.

use crate::error::{Error, Result};
use crate::vecops;

/// A symmetric linear operator given by its action on a vector.
///
/// `apply` must behave as a pure function of `x`; the `&mut self` receiver
/// only licenses internal scratch space. Symmetry is the caller's
/// responsibility and is spot-checked probabilistically in the tests.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&mut self, x: &[f64], out: &mut [f64]);
}

/// Outcome of a MINRES solve. When the tolerance was not reached within the
/// iteration cap, `converged` is false and `solution` holds the best
/// (minimum-residual) iterate found.
#[derive(Debug, Clone)]
pub struct MinresOutcome {
    pub solution: Vec<f64>,
    /// `||S x - rhs|| / ||rhs||`, recomputed at exit.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration residual-norm estimates from the recurrence.
    pub residual_history: Vec<f64>,
}

/// Solves `op(x) = rhs` to relative residual `rel_tol` within `max_iters`
/// iterations.
pub fn minres<O: LinearOperator>(
    op: &mut O,
    rhs: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<MinresOutcome> {
    let n = op.dim();
    assert_eq!(rhs.len(), n);

    let beta1 = vecops::norm2(rhs);
    if !beta1.is_finite() {
        return Err(Error::SolverBreakdown("right-hand side is not finite".into()));
    }
    let mut x = vec![0.0; n];
    if beta1 == 0.0 {
        return Ok(MinresOutcome {
            solution: x,
            relative_residual: 0.0,
            iterations: 0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    // Lanczos vectors v_{k-1}, v_k and the next residual direction.
    let mut v_prev = vec![0.0; n];
    let mut v = rhs.to_vec();
    vecops::scale(&mut v, 1.0 / beta1);
    let mut av = vec![0.0; n];

    // Solution-update directions w_{k-1}, w_{k-2}.
    let mut w_prev = vec![0.0; n];
    let mut w_prev2 = vec![0.0; n];

    // Givens rotations G_{k-1}, G_{k-2} and the rotated rhs tail.
    let (mut c_prev, mut s_prev) = (1.0, 0.0);
    let (mut c_prev2, mut s_prev2) = (1.0, 0.0);
    let mut phi_bar = beta1;
    let mut beta = 0.0; // subdiagonal entry entering column k

    let mut history = Vec::new();
    let mut iterations = 0;

    // The recurrence's residual estimate can drift below the true residual
    // on ill-conditioned systems. Whenever the estimate claims convergence
    // we verify against the true residual, and continue with a
    // drift-corrected internal target if it falls short, until the true
    // residual stops improving.
    let target = rel_tol * beta1;
    let mut internal_target = target;
    let mut truth = f64::INFINITY;
    let mut corrections = 0;
    let mut scratch = vec![0.0; n];

    for _k in 1..=max_iters {
        // Lanczos step: alpha and the next beta.
        op.apply(&v, &mut av);
        let alpha = vecops::dot(&v, &av);
        // av <- av - alpha v - beta v_prev, reusing av as the new direction.
        vecops::axpy(-alpha, &v, &mut av);
        if beta != 0.0 {
            vecops::axpy(-beta, &v_prev, &mut av);
        }
        let beta_next = vecops::norm2(&av);
        if !alpha.is_finite() || !beta_next.is_finite() {
            return Err(Error::SolverBreakdown(
                "non-finite value in Lanczos recurrence".into(),
            ));
        }

        // Rotate column k of the tridiagonal factor.
        let eps = s_prev2 * beta;
        let beta_hat = c_prev2 * beta;
        let delta = c_prev * beta_hat + s_prev * alpha;
        let alpha_bar = -s_prev * beta_hat + c_prev * alpha;
        let rho = alpha_bar.hypot(beta_next);
        if rho == 0.0 {
            // Operator annihilated the Krylov direction; nothing further
            // can reduce the residual.
            break;
        }
        let c = alpha_bar / rho;
        let s = beta_next / rho;

        // Direction update: w_k = (v - delta w_{k-1} - eps w_{k-2}) / rho.
        // w_prev2 is recycled as storage for w_k.
        for i in 0..n {
            w_prev2[i] = (v[i] - delta * w_prev[i] - eps * w_prev2[i]) / rho;
        }
        let phi = c * phi_bar;
        vecops::axpy(phi, &w_prev2, &mut x);
        std::mem::swap(&mut w_prev, &mut w_prev2);

        phi_bar = -s * phi_bar;
        iterations += 1;
        history.push(phi_bar.abs());

        if phi_bar.abs() <= internal_target {
            op.apply(&x, &mut scratch);
            vecops::axpy(-1.0, rhs, &mut scratch);
            let new_truth = vecops::norm2(&scratch);
            if new_truth <= target {
                break;
            }
            if new_truth >= 0.99 * truth || corrections >= 3 {
                // Stagnated at the attainable floor; return the best found.
                break;
            }
            truth = new_truth;
            corrections += 1;
            // Aim below the observed drift factor.
            let drift = new_truth / phi_bar.abs().max(f64::MIN_POSITIVE);
            internal_target = (target / drift).max(f64::MIN_POSITIVE) * 0.5;
        }
        if beta_next == 0.0 {
            // Invariant subspace exhausted.
            break;
        }

        // Advance Lanczos: v_prev <- v, v <- av / beta_next.
        std::mem::swap(&mut v_prev, &mut v);
        std::mem::swap(&mut v, &mut av);
        vecops::scale(&mut v, 1.0 / beta_next);
        beta = beta_next;
        c_prev2 = c_prev;
        s_prev2 = s_prev;
        c_prev = c;
        s_prev = s;
    }

    // Recompute the true residual for honest reporting.
    op.apply(&x, &mut av);
    vecops::axpy(-1.0, rhs, &mut av);
    let achieved = vecops::norm2(&av) / beta1;
    let converged = achieved <= rel_tol;

    Ok(MinresOutcome {
        solution: x,
        relative_residual: achieved,
        iterations,
        converged,
        residual_history: history,
    })
}

/// Adapter exposing an explicit sparse matrix as an operator (used for the
/// normal-equations projection `y -> A A^T y` and in tests).
pub struct DenseOperator {
    pub matrix: Vec<f64>,
    pub n: usize,
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.n {
            let row = &self.matrix[r * self.n..(r + 1) * self.n];
            out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}
