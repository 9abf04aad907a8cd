//! Infeasible-start Newton method for `min f(x) s.t. A x = b`.
//!
//! The optimality conditions are `r(x, nu) = 0` with dual and primal
//! residuals
//!
//! ```text
//! r_d(x, nu) = grad f(x) + A^T nu,      r_p(x, nu) = A x - b.
//! ```
//!
//! Each step linearizes `r` and eliminates the primal block through the
//! Hessian, leaving the positive definite Schur system
//!
//! ```text
//! (A H^{-1} A^T) d_nu = r_p - A H^{-1} r_d,
//! d_x = -H^{-1} (r_d + A^T d_nu),
//! ```
//!
//! solved matrix-free by MINRES (the operator is three successive
//! products). A backtracking line search on `||r||` with a step cap keeps
//! every iterate strictly positive; the method tolerates infeasible
//! starting points and contracts the primal residual by `1 - t` per step.

use crate::error::{Error, Result};
use crate::minres::{minres, LinearOperator, MinresOutcome};
use crate::problem::{HessianInverse, Problem};
use crate::vecops;
use std::time::Instant;

/// Primal-dual pair fed to and produced by the solver.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
}

/// Residual of the optimality conditions at a point.
#[derive(Debug, Clone)]
pub struct Residual {
    pub r_d: Vec<f64>,
    pub r_p: Vec<f64>,
    /// Euclidean norm of the concatenated residual.
    pub norm: f64,
    pub rp_norm: f64,
}

/// Preconditioning mode for the Schur solve. Diagonal scaling is an
/// experiment flag; the default solves the raw system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precondition {
    #[default]
    None,
    Jacobi,
}

/// Solver parameters. Defaults follow the line-search constants
/// `alpha = 0.01`, `beta = 0.9` and the tolerance `eps = 1e-9` used for all
/// reported bounds.
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Sufficient-decrease fraction, in (0, 1/2).
    pub alpha: f64,
    /// Backtracking factor, in (0, 1).
    pub beta: f64,
    /// Termination threshold on the residual norm.
    pub eps: f64,
    pub max_iters: usize,
    /// Fraction of the distance to the positivity boundary a step may take.
    pub t_max_fraction: f64,
    /// Relative tolerance for the Schur solve.
    pub minres_rel_tol: f64,
    /// Iteration cap for the Schur solve; `None` means twice the system
    /// size (the exact-arithmetic termination bound plus rounding slack).
    pub minres_max_iters: Option<usize>,
    pub precondition: Precondition,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            alpha: 0.01,
            beta: 0.9,
            eps: 1e-9,
            max_iters: 200,
            t_max_fraction: 0.95,
            minres_rel_tol: 1e-12,
            minres_max_iters: None,
            precondition: Precondition::None,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha < 0.5
            && self.beta > 0.0
            && self.beta < 1.0
            && self.eps > 0.0
            && self.t_max_fraction > 0.0
            && self.t_max_fraction < 1.0
            && self.minres_rel_tol > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("newton config out of range: {self:?}")));
        }
        Ok(())
    }

    /// Iteration cap for a Schur-type solve of dimension `q`.
    pub fn minres_cap(&self, q: usize) -> usize {
        self.minres_max_iters.unwrap_or(2 * q)
    }
}

/// Newton direction plus the statistics of the linear solve that produced
/// it. `minres_converged = false` means the solve stagnated at its
/// attainable floor or hit the iteration cap; the direction is the best
/// iterate found and the outer loop decides whether that is fatal (it is,
/// unless the leftover absolute residual is negligible against the outer
/// residual).
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub dx: Vec<f64>,
    pub dnu: Vec<f64>,
    pub minres_iterations: usize,
    pub minres_relative_residual: f64,
    /// Absolute residual `||S d_nu - rhs||` of the Schur solve.
    pub minres_residual_norm: f64,
    pub minres_converged: bool,
}

/// One accepted iteration, as recorded in the trace.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    /// `||r||` at the start of the iteration.
    pub residual_norm: f64,
    pub primal_residual_norm: f64,
    pub step_length: f64,
    /// Backtracking exponent `ell` of the accepted step.
    pub backtracks: usize,
    pub minres_iterations: usize,
    pub minres_relative_residual: f64,
    /// Smallest coordinate of the accepted iterate.
    pub min_x: f64,
    pub wall_ms: f64,
}

/// Per-solve record: one entry per accepted step, plus the final residual.
/// Residual norms decrease strictly across accepted iterations.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub final_residual_norm: f64,
    pub final_primal_residual_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
    pub iterations: usize,
    pub trace: SolveTrace,
}

/// A solve that stopped early; carries whatever trace had accumulated.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub trace: SolveTrace,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} accepted iterations", self.error, self.trace.records.len())
    }
}

impl std::error::Error for SolveFailure {}

/// Evaluates the primal-dual residual at `(x, nu)`.
pub fn compute_residual(problem: &dyn Problem, x: &[f64], nu: &[f64]) -> Result<Residual> {
    let mut r_d = vec![0.0; problem.num_vars()];
    let mut r_p = vec![0.0; problem.num_rows()];
    let mut scratch = vec![0.0; problem.num_vars()];
    residual_into(problem, x, nu, &mut r_d, &mut r_p, &mut scratch)?;
    let (norm, rp_norm) = residual_norms(&r_d, &r_p);
    Ok(Residual { r_d, r_p, norm, rp_norm })
}

fn residual_norms(r_d: &[f64], r_p: &[f64]) -> (f64, f64) {
    let rp_sq = vecops::norm2_sq(r_p);
    ((vecops::norm2_sq(r_d) + rp_sq).sqrt(), rp_sq.sqrt())
}

fn residual_into(
    problem: &dyn Problem,
    x: &[f64],
    nu: &[f64],
    r_d: &mut [f64],
    r_p: &mut [f64],
    scratch_p: &mut [f64],
) -> Result<()> {
    problem.gradient_into(x, scratch_p)?;
    problem.apply_constraints_transpose_into(nu, r_d);
    vecops::axpy(1.0, scratch_p, r_d);
    problem.apply_constraints_into(x, r_p);
    vecops::axpy(-1.0, problem.rhs(), r_p);
    Ok(())
}

/// The Schur operator `y -> A H^{-1} A^T y`, evaluated without forming the
/// matrix.
pub struct SchurOperator<'a> {
    problem: &'a dyn Problem,
    hinv: &'a HessianInverse,
    scratch_a: Vec<f64>,
    scratch_b: Vec<f64>,
}

impl<'a> SchurOperator<'a> {
    pub fn new(problem: &'a dyn Problem, hinv: &'a HessianInverse) -> Self {
        let p = problem.num_vars();
        SchurOperator { problem, hinv, scratch_a: vec![0.0; p], scratch_b: vec![0.0; p] }
    }

    /// Diagonal of the Schur complement restricted to the 1x1 part of the
    /// Hessian blocks; used by the optional Jacobi scaling.
    fn diagonal_estimate(&self, inv_diag_of_hinv: &HessianInverse) -> Vec<f64> {
        let a = self.problem.matrix();
        let mut d = vec![0.0; a.n_rows()];
        for r in 0..a.n_rows() {
            let mut acc = 0.0;
            for (c, v) in a.row(r) {
                acc += v * v * inv_diag_of_hinv.inv_diag_entry(c);
            }
            d[r] = acc;
        }
        d
    }
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.problem.num_rows()
    }

    fn apply(&mut self, y: &[f64], out: &mut [f64]) {
        self.problem.apply_constraints_transpose_into(y, &mut self.scratch_a);
        self.hinv.apply_into(&self.scratch_a, &mut self.scratch_b);
        self.problem.apply_constraints_into(&self.scratch_b, out);
    }
}

/// Symmetric diagonal scaling `D^{-1/2} S D^{-1/2}` of an operator.
struct ScaledOperator<O> {
    inner: O,
    inv_sqrt: Vec<f64>,
    scratch: Vec<f64>,
}

impl<O: LinearOperator> LinearOperator for ScaledOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&mut self, y: &[f64], out: &mut [f64]) {
        for i in 0..y.len() {
            self.scratch[i] = y[i] * self.inv_sqrt[i];
        }
        let scratch = std::mem::take(&mut self.scratch);
        self.inner.apply(&scratch, out);
        self.scratch = scratch;
        for i in 0..out.len() {
            out[i] *= self.inv_sqrt[i];
        }
    }
}

/// Computes the Newton direction through the positive definite Schur
/// complement; shared by every problem with an invertible Hessian.
pub fn schur_newton_step(
    problem: &dyn Problem,
    x: &[f64],
    r_d: &[f64],
    r_p: &[f64],
    cfg: &NewtonConfig,
) -> Result<NewtonStep> {
    let q = problem.num_rows();
    let hinv = problem.hessian_inverse(x)?;

    // rhs = r_p - A H^{-1} r_d
    let mut scratch_p = vec![0.0; problem.num_vars()];
    hinv.apply_into(r_d, &mut scratch_p);
    let mut rhs = vec![0.0; q];
    problem.apply_constraints_into(&scratch_p, &mut rhs);
    vecops::scale(&mut rhs, -1.0);
    vecops::axpy(1.0, r_p, &mut rhs);

    let rhs_norm = vecops::norm2(&rhs);
    let mut op = SchurOperator::new(problem, &hinv);
    let outcome = match cfg.precondition {
        Precondition::None => minres(&mut op, &rhs, cfg.minres_rel_tol, cfg.minres_cap(q))?,
        Precondition::Jacobi => {
            let diag = op.diagonal_estimate(&hinv);
            let inv_sqrt: Vec<f64> =
                diag.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }).collect();
            let scaled_rhs: Vec<f64> = rhs.iter().zip(&inv_sqrt).map(|(r, s)| r * s).collect();
            let mut scaled =
                ScaledOperator { inner: op, inv_sqrt, scratch: vec![0.0; q] };
            let mut outcome =
                minres(&mut scaled, &scaled_rhs, cfg.minres_rel_tol, cfg.minres_cap(q))?;
            for (z, s) in outcome.solution.iter_mut().zip(&scaled.inv_sqrt) {
                *z *= s;
            }
            outcome
        }
    };
    let MinresOutcome { solution: dnu, relative_residual, iterations, converged, .. } = outcome;

    // dx = -H^{-1} (r_d + A^T dnu)
    let mut dx = vec![0.0; problem.num_vars()];
    problem.apply_constraints_transpose_into(&dnu, &mut scratch_p);
    vecops::axpy(1.0, r_d, &mut scratch_p);
    hinv.apply_into(&scratch_p, &mut dx);
    vecops::scale(&mut dx, -1.0);

    Ok(NewtonStep {
        dx,
        dnu,
        minres_iterations: iterations,
        minres_relative_residual: relative_residual,
        minres_residual_norm: relative_residual * rhs_norm,
        minres_converged: converged,
    })
}

/// Largest `t` keeping `x + t dx` nonnegative (`+inf` when `dx >= 0`).
pub fn max_step_to_boundary(x: &[f64], dx: &[f64]) -> f64 {
    assert_eq!(x.len(), dx.len());
    let mut t_max = f64::INFINITY;
    for i in 0..x.len() {
        if dx[i] < 0.0 {
            let t = x[i] / -dx[i];
            if t < t_max {
                t_max = t;
            }
        }
    }
    t_max
}

/// Outcome of the backtracking line search: the accepted step and the
/// residual already evaluated at the new point.
pub struct LineSearchOutcome {
    pub t: f64,
    pub backtracks: usize,
    pub x_new: Vec<f64>,
    pub nu_new: Vec<f64>,
    pub residual: Residual,
}

const MAX_BACKTRACKS: usize = 200;

/// Backtracking line search on the residual norm: starting from
/// `t = min(t_max_fraction * t_max, 1)`, shrink by `beta` until
/// `||r(x + t dx, nu + t dnu)|| <= (1 - alpha t) ||r(x, nu)||`.
pub fn line_search(
    problem: &dyn Problem,
    x: &[f64],
    nu: &[f64],
    dx: &[f64],
    dnu: &[f64],
    current_norm: f64,
    cfg: &NewtonConfig,
) -> Result<LineSearchOutcome> {
    let t_max = max_step_to_boundary(x, dx);
    let t_tilde = (cfg.t_max_fraction * t_max).min(1.0);

    let mut x_new = vec![0.0; x.len()];
    let mut nu_new = vec![0.0; nu.len()];
    let mut r_d = vec![0.0; x.len()];
    let mut r_p = vec![0.0; nu.len()];
    let mut scratch = vec![0.0; x.len()];

    let mut t = t_tilde;
    for ell in 0..=MAX_BACKTRACKS {
        vecops::add_scaled_into(x, t, dx, &mut x_new);
        vecops::add_scaled_into(nu, t, dnu, &mut nu_new);
        residual_into(problem, &x_new, &nu_new, &mut r_d, &mut r_p, &mut scratch)?;
        let (norm, rp_norm) = residual_norms(&r_d, &r_p);
        if norm <= (1.0 - cfg.alpha * t) * current_norm {
            return Ok(LineSearchOutcome {
                t,
                backtracks: ell,
                x_new,
                nu_new,
                residual: Residual { r_d, r_p, norm, rp_norm },
            });
        }
        t *= cfg.beta;
    }
    Err(Error::LineSearchFailed { backtracks: MAX_BACKTRACKS })
}

/// Runs the Newton iteration from `init` until `||r|| < eps` or the
/// iteration budget is exhausted.
pub fn solve(
    problem: &dyn Problem,
    init: Iterate,
    cfg: &NewtonConfig,
) -> std::result::Result<NewtonSolution, Box<SolveFailure>> {
    solve_with_progress(problem, init, cfg, None)
}

/// [`solve`] with an observer invoked after every accepted iteration.
pub fn solve_with_progress(
    problem: &dyn Problem,
    init: Iterate,
    cfg: &NewtonConfig,
    mut progress: Option<&mut dyn FnMut(&IterationRecord)>,
) -> std::result::Result<NewtonSolution, Box<SolveFailure>> {
    let fail = |error: Error, trace: SolveTrace| Box::new(SolveFailure { error, trace });

    if let Err(e) = cfg.validate() {
        return Err(fail(e, SolveTrace::default()));
    }
    let Iterate { mut x, mut nu } = init;
    if x.len() != problem.num_vars() || nu.len() != problem.num_rows() {
        return Err(fail(
            Error::InvalidArgument("initial iterate has wrong dimensions".into()),
            SolveTrace::default(),
        ));
    }
    if !vecops::all_positive(&x) {
        return Err(fail(
            Error::Domain("initial point must be strictly positive".into()),
            SolveTrace::default(),
        ));
    }

    let mut trace = SolveTrace::default();
    let mut residual = match compute_residual(problem, &x, &nu) {
        Ok(r) => r,
        Err(e) => return Err(fail(e, trace)),
    };

    let mut k = 0;
    loop {
        if residual.norm < cfg.eps {
            trace.converged = true;
            trace.final_residual_norm = residual.norm;
            trace.final_primal_residual_norm = residual.rp_norm;
            return Ok(NewtonSolution { x, nu, iterations: k, trace });
        }
        if k >= cfg.max_iters {
            trace.final_residual_norm = residual.norm;
            trace.final_primal_residual_norm = residual.rp_norm;
            let err =
                Error::MaxIterationsReached { iterations: k, residual: residual.norm };
            return Err(fail(err, trace));
        }

        let started = Instant::now();
        let step = match problem.solve_newton_step(&x, &residual.r_d, &residual.r_p, cfg) {
            Ok(s) => s,
            Err(e) => {
                trace.final_residual_norm = residual.norm;
                trace.final_primal_residual_norm = residual.rp_norm;
                return Err(fail(e, trace));
            }
        };
        // A solve that stagnated at its floating-point floor is still a
        // usable direction when the leftover residual cannot disturb the
        // outer iteration (the attainable Schur residual scales with the
        // conditioning, not with the requested tolerance).
        if !step.minres_converged && step.minres_residual_norm > 1e-3 * residual.norm {
            trace.final_residual_norm = residual.norm;
            trace.final_primal_residual_norm = residual.rp_norm;
            let err = Error::StepToleranceNotMet {
                achieved: step.minres_relative_residual,
                requested: cfg.minres_rel_tol,
                iterations: step.minres_iterations,
            };
            return Err(fail(err, trace));
        }

        let outcome =
            match line_search(problem, &x, &nu, &step.dx, &step.dnu, residual.norm, cfg) {
                Ok(o) => o,
                Err(e) => {
                    trace.final_residual_norm = residual.norm;
                    trace.final_primal_residual_norm = residual.rp_norm;
                    return Err(fail(e, trace));
                }
            };

        let min_x = vecops::min_entry(&outcome.x_new);
        debug_assert!(min_x > 0.0, "accepted iterate lost strict positivity");
        let record = IterationRecord {
            k,
            residual_norm: residual.norm,
            primal_residual_norm: residual.rp_norm,
            step_length: outcome.t,
            backtracks: outcome.backtracks,
            minres_iterations: step.minres_iterations,
            minres_relative_residual: step.minres_relative_residual,
            min_x,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        if let Some(cb) = progress.as_mut() {
            cb(&record);
        }
        trace.records.push(record);

        x = outcome.x_new;
        nu = outcome.nu_new;
        residual = outcome.residual;
        k += 1;
    }
}
