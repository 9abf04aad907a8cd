//! Bound certificates: converting solver output into defensible numbers.
//!
//! A lower bound needs no trust in the solver at all: the dual function
//! `h(nu) = nu^T b - f*(A^T nu)` lower-bounds the optimal value for *every*
//! `nu`, so the certificate is just `h` evaluated at the dual vector found,
//! and solver accuracy only affects tightness. An upper bound needs a
//! feasible point: the solver's primal iterate is first projected onto
//! `A x = b` (minimum-norm correction through the normal equations, solved
//! matrix-free by MINRES), re-checked for positivity, and the objective is
//! evaluated there.
//!
//! Certificates are floating-point level: each records the primal residual
//! norm of the point it evaluated so that an exact-arithmetic checker could
//! consume it later. Printed values are rounded outward at the ninth
//! decimal (lower bounds down, upper bounds up).

use crate::error::{Error, Result};
use crate::lower::LowerProblem;
use crate::minres::{minres, LinearOperator};
use crate::problem::Problem;
use crate::upper::UpperProblem;
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lower,
    Upper,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::Lower => "lower",
            BoundKind::Upper => "upper",
        }
    }
}

/// A certified bound with its provenance.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub n: usize,
    pub kind: BoundKind,
    /// The bound itself: a dual value (lower) or a feasible objective
    /// (upper).
    pub certified_value: f64,
    pub primal_objective: f64,
    /// Dual function value; only the lower kind carries one.
    pub dual_value: Option<f64>,
    /// `||A x - b||` at the evaluated primal point.
    pub primal_residual_norm: f64,
    pub newton_iterations: usize,
    pub wall_time_seconds: f64,
}

impl BoundCertificate {
    /// The certified value rounded outward at the 1e-9 digit: lower bounds
    /// round down, upper bounds round up.
    pub fn reported_value(&self) -> f64 {
        match self.kind {
            BoundKind::Lower => (self.certified_value * 1e9).floor() / 1e9,
            BoundKind::Upper => (self.certified_value * 1e9).ceil() / 1e9,
        }
    }

    /// Serializes the certificate as a single JSON object with a fixed
    /// field order and 17 significant digits on every real.
    pub fn to_json(&self) -> String {
        let dual = match self.dual_value {
            Some(v) => json_f64(v),
            None => "null".to_string(),
        };
        format!(
            concat!(
                "{{\"n\":{},\"kind\":\"{}\",\"certified_value\":{},",
                "\"primal_objective\":{},\"dual_value\":{},",
                "\"primal_residual_norm\":{},\"newton_iterations\":{},",
                "\"wall_time_seconds\":{}}}"
            ),
            self.n,
            self.kind.as_str(),
            json_f64(self.certified_value),
            json_f64(self.primal_objective),
            dual,
            json_f64(self.primal_residual_norm),
            self.newton_iterations,
            json_f64(self.wall_time_seconds),
        )
    }
}

/// 17 significant digits, enough to reproduce the double exactly.
pub fn json_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Execution metadata attached to a certificate by the caller.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunStats {
    pub newton_iterations: usize,
    pub wall_time_seconds: f64,
}

/// Certifies a lower bound from a dual vector. Any `nu` certifies; the
/// primal point is only used to report the companion objective value and
/// residual.
pub fn certify_lower(
    problem: &LowerProblem,
    x: &[f64],
    nu: &[f64],
    stats: RunStats,
) -> Result<BoundCertificate> {
    // The Newton residual uses `r_d = grad f + A^T nu`, so the converged
    // multiplier satisfies `A^T nu = -grad f`; the dual function is tight
    // at the negated vector (h at +nu is valid but vacuous).
    let negated: Vec<f64> = nu.iter().map(|v| -v).collect();
    let dual = problem.dual_value(&negated)?;
    let primal = problem.objective(x)?;
    if dual > primal + 1e-8 {
        // Weak duality cannot fail; if it appears to, the evaluation is
        // broken and the certificate must not be issued.
        return Err(Error::Certification(format!(
            "dual value {dual} exceeds primal objective {primal}"
        )));
    }
    let mut ax = vec![0.0; Problem::num_rows(problem)];
    problem.apply_constraints_into(x, &mut ax);
    vecops::axpy(-1.0, Problem::rhs(problem), &mut ax);
    Ok(BoundCertificate {
        n: problem.n(),
        kind: BoundKind::Lower,
        certified_value: dual,
        primal_objective: primal,
        dual_value: Some(dual),
        primal_residual_norm: vecops::norm2(&ax),
        newton_iterations: stats.newton_iterations,
        wall_time_seconds: stats.wall_time_seconds,
    })
}

/// Normal-equations operator `y -> A A^T y` for the feasibility
/// projection.
struct GramOperator<'a> {
    problem: &'a dyn Problem,
    scratch: Vec<f64>,
}

impl LinearOperator for GramOperator<'_> {
    fn dim(&self) -> usize {
        self.problem.num_rows()
    }

    fn apply(&mut self, y: &[f64], out: &mut [f64]) {
        let scratch = &mut self.scratch;
        self.problem.apply_constraints_transpose_into(y, scratch);
        self.problem.apply_constraints_into(scratch, out);
    }
}

/// Residual tolerance the projected point must meet.
pub const PROJECTION_TOLERANCE: f64 = 1e-10;

/// Projects `x` onto the affine constraint set by the minimum-norm
/// correction `x + A^T lambda` with `(A A^T) lambda = b - A x`.
///
/// Intended for near-feasible solver output: fails if the projected point
/// is not strictly positive or the residual cannot be driven below
/// [`PROJECTION_TOLERANCE`].
pub fn project_feasible(problem: &dyn Problem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != problem.num_vars() {
        return Err(Error::InvalidArgument(format!(
            "vector length {}, expected {}",
            x.len(),
            problem.num_vars()
        )));
    }
    let q = problem.num_rows();
    let mut ax = vec![0.0; q];
    problem.apply_constraints_into(x, &mut ax);
    let mut defect = vec![0.0; q];
    vecops::sub_into(problem.rhs(), &ax, &mut defect);
    let defect_norm = vecops::norm2(&defect);
    if defect_norm == 0.0 {
        return Ok(x.to_vec());
    }

    // Deep enough that the corrected residual lands under the tolerance
    // with margin, without demanding the impossible for tiny defects.
    let rel_tol = (0.1 * PROJECTION_TOLERANCE / defect_norm).clamp(1e-13, 1e-2);
    let mut op = GramOperator { problem, scratch: vec![0.0; problem.num_vars()] };
    let outcome = minres(&mut op, &defect, rel_tol, 4 * q)?;
    if !outcome.converged {
        return Err(Error::StepToleranceNotMet {
            achieved: outcome.relative_residual,
            requested: rel_tol,
            iterations: outcome.iterations,
        });
    }

    let mut projected = vec![0.0; problem.num_vars()];
    problem.apply_constraints_transpose_into(&outcome.solution, &mut projected);
    vecops::axpy(1.0, x, &mut projected);

    let mut check = vec![0.0; q];
    problem.apply_constraints_into(&projected, &mut check);
    vecops::axpy(-1.0, problem.rhs(), &mut check);
    let achieved = vecops::norm2(&check);
    if achieved > PROJECTION_TOLERANCE {
        return Err(Error::Certification(format!(
            "projection left ||Ax - b|| = {achieved:.3e} > {PROJECTION_TOLERANCE:.0e}"
        )));
    }
    if let Some(i) = projected.iter().position(|&v| v <= 0.0) {
        return Err(Error::Certification(format!(
            "projected point has nonpositive coordinate {i} = {}",
            projected[i]
        )));
    }
    Ok(projected)
}

/// Certifies an upper bound by evaluating the objective at an
/// exactly-projected feasible point.
pub fn certify_upper(
    problem: &UpperProblem,
    x: &[f64],
    stats: RunStats,
) -> Result<BoundCertificate> {
    if let Some(i) = x.iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain(format!("x[{i}] = {} is not positive", x[i])));
    }
    let feasible = project_feasible(problem, x)?;
    let objective = problem.objective(&feasible)?;
    let mut ax = vec![0.0; Problem::num_rows(problem)];
    problem.apply_constraints_into(&feasible, &mut ax);
    vecops::axpy(-1.0, Problem::rhs(problem), &mut ax);
    Ok(BoundCertificate {
        n: problem.n(),
        kind: BoundKind::Upper,
        certified_value: objective,
        primal_objective: objective,
        dual_value: None,
        primal_residual_norm: vecops::norm2(&ax),
        newton_iterations: stats.newton_iterations,
        wall_time_seconds: stats.wall_time_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::build_lower;

    #[test]
    fn lower_certificate_at_zero_dual() {
        let p = build_lower(4).unwrap();
        let init = p.initial_point();
        let cert = certify_lower(&p, &init.x, &init.nu, RunStats::default()).unwrap();
        let expected = -80.0 * (-1.0f64).exp() + p.objective_constant();
        assert!((cert.certified_value - expected).abs() < 1e-12);
        assert_eq!(cert.kind, BoundKind::Lower);
        assert_eq!(cert.dual_value, Some(cert.certified_value));
        // Weak duality with a feasible primal point.
        assert!(cert.certified_value <= cert.primal_objective);
    }

    #[test]
    fn projection_leaves_feasible_points_alone() {
        let p = build_lower(3).unwrap();
        let init = p.initial_point();
        let projected = project_feasible(&p, &init.x).unwrap();
        for (a, b) in projected.iter().zip(&init.x) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn projection_restores_perturbed_points() {
        let p = build_lower(3).unwrap();
        let init = p.initial_point();
        // A row-space perturbation (orthogonal to the null space of A).
        let q = Problem::num_rows(&p);
        let w: Vec<f64> = (0..q).map(|i| ((i * 7 % 5) as f64 - 2.0) * 1e-7).collect();
        let mut x = vec![0.0; Problem::num_vars(&p)];
        p.apply_constraints_transpose_into(&w, &mut x);
        let delta_norm = vecops::norm2(&x);
        vecops::axpy(1.0, &init.x, &mut x);

        let projected = project_feasible(&p, &x).unwrap();
        let mut check = vec![0.0; q];
        p.apply_constraints_into(&projected, &mut check);
        vecops::axpy(-1.0, Problem::rhs(&p), &mut check);
        assert!(vecops::norm2(&check) <= 1e-12);
        // Minimum-norm correction: no larger than the known distance to
        // feasibility.
        let correction: f64 = projected
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(correction <= delta_norm * (1.0 + 1e-8));
    }

    #[test]
    fn json_shape_is_stable() {
        let cert = BoundCertificate {
            n: 4,
            kind: BoundKind::Upper,
            certified_value: 1.5,
            primal_objective: 1.5,
            dual_value: None,
            primal_residual_norm: 1e-12,
            newton_iterations: 7,
            wall_time_seconds: 0.25,
        };
        let json = cert.to_json();
        assert!(json.starts_with("{\"n\":4,\"kind\":\"upper\",\"certified_value\":"));
        assert!(json.contains("\"dual_value\":null"));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["newton_iterations"], 7);
        assert_eq!(parsed["certified_value"].as_f64().unwrap(), 1.5);
    }

    #[test]
    fn outward_rounding() {
        let mut cert = BoundCertificate {
            n: 1,
            kind: BoundKind::Lower,
            certified_value: 1.944000752019729,
            primal_objective: 2.0,
            dual_value: Some(1.944000752019729),
            primal_residual_norm: 0.0,
            newton_iterations: 0,
            wall_time_seconds: 0.0,
        };
        assert!((cert.reported_value() - 1.944000752).abs() < 1e-15);
        assert!(cert.reported_value() <= cert.certified_value);
        cert.kind = BoundKind::Upper;
        cert.certified_value = 1.9440010813092217;
        assert!((cert.reported_value() - 1.944001082).abs() < 1e-15);
        assert!(cert.reported_value() >= cert.certified_value);
    }
}
