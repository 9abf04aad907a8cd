//! End-to-end pipelines: build, solve, certify.
//!
//! The lower pipeline solves from the feasible uniform point and certifies
//! through the dual. The upper pipeline by default runs two phases: solve
//! the separable approximate problem from all-ones, lift its solution onto
//! the exact problem (dropping the averaged slacks and averaging-row
//! duals), and finish with a short Newton run there; the certificate comes
//! from the projected feasible point. Both pipelines label their per-phase
//! traces so invariants can be audited after the fact.

use crate::certify::{certify_lower, certify_upper, BoundCertificate, RunStats};
use crate::error::Error;
use crate::lower::build_lower;
use crate::newton::{
    solve_with_progress, IterationRecord, NewtonConfig, SolveFailure, SolveTrace,
};
use crate::upper::{build_approx_upper, build_upper, lift_approx_solution};
use std::io::{self, Write};
use std::time::Instant;

/// One solve phase of a pipeline run.
#[derive(Debug, Clone)]
pub struct PhaseTrace {
    /// "lower", "approx", or "exact".
    pub label: &'static str,
    pub trace: SolveTrace,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub certificate: BoundCertificate,
    pub phases: Vec<PhaseTrace>,
}

/// A pipeline failure, distinguishing solver breakdowns from
/// certification problems and keeping whatever traces accumulated.
#[derive(Debug)]
pub enum PipelineError {
    Solve { failure: Box<SolveFailure>, phases: Vec<PhaseTrace> },
    Certification { error: Error, phases: Vec<PhaseTrace> },
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Solve { failure, .. } => write!(f, "solver: {failure}"),
            PipelineError::Certification { error, .. } => write!(f, "certification: {error}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl PipelineError {
    pub fn phases(&self) -> &[PhaseTrace] {
        match self {
            PipelineError::Solve { phases, .. } | PipelineError::Certification { phases, .. } => {
                phases
            }
        }
    }
}

/// Per-iteration observer; receives the phase label with each record.
pub type Progress<'a> = Option<&'a mut dyn FnMut(&'static str, &IterationRecord)>;

/// Builds and solves the lower problem at size `n`, certifying through the
/// dual function.
pub fn run_lower(
    n: usize,
    cfg: &NewtonConfig,
    mut progress: Progress<'_>,
) -> Result<RunOutput, PipelineError> {
    let started = Instant::now();
    let problem = build_lower(n).map_err(|e| PipelineError::Certification {
        error: e,
        phases: Vec::new(),
    })?;
    let init = problem.initial_point();
    let mut observer = |rec: &IterationRecord| {
        if let Some(cb) = progress.as_mut() {
            cb("lower", rec);
        }
    };
    let solution = solve_with_progress(&problem, init, cfg, Some(&mut observer))
        .map_err(|failure| PipelineError::Solve {
            failure,
            phases: Vec::new(),
        })?;
    let phases = vec![PhaseTrace { label: "lower", trace: solution.trace.clone() }];
    let stats = RunStats {
        newton_iterations: solution.iterations,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let certificate = certify_lower(&problem, &solution.x, &solution.nu, stats)
        .map_err(|error| PipelineError::Certification { error, phases: phases.clone() })?;
    Ok(RunOutput { certificate, phases })
}

/// Builds and solves the upper problem at size `n`. With `warm_start` the
/// approximate problem is solved first and its solution lifted; otherwise
/// the exact problem starts cold from all-ones.
pub fn run_upper(
    n: usize,
    cfg: &NewtonConfig,
    warm_start: bool,
    mut progress: Progress<'_>,
) -> Result<RunOutput, PipelineError> {
    let started = Instant::now();
    let problem = build_upper(n).map_err(|e| PipelineError::Certification {
        error: e,
        phases: Vec::new(),
    })?;
    let mut phases = Vec::new();
    let mut total_iterations = 0;

    let init = if warm_start {
        let approx = build_approx_upper(n).map_err(|e| PipelineError::Certification {
            error: e,
            phases: Vec::new(),
        })?;
        let mut observer = |rec: &IterationRecord| {
            if let Some(cb) = progress.as_mut() {
                cb("approx", rec);
            }
        };
        let approx_solution =
            solve_with_progress(&approx, approx.initial_point(), cfg, Some(&mut observer))
                .map_err(|failure| PipelineError::Solve { failure, phases: Vec::new() })?;
        total_iterations += approx_solution.iterations;
        phases.push(PhaseTrace { label: "approx", trace: approx_solution.trace.clone() });
        lift_approx_solution(&problem, &approx, &approx_solution.x, &approx_solution.nu)
            .map_err(|error| PipelineError::Certification { error, phases: phases.clone() })?
    } else {
        problem.initial_point()
    };

    let mut observer = |rec: &IterationRecord| {
        if let Some(cb) = progress.as_mut() {
            cb("exact", rec);
        }
    };
    let solution = solve_with_progress(&problem, init, cfg, Some(&mut observer)).map_err(
        |failure| PipelineError::Solve { failure, phases: phases.clone() },
    )?;
    total_iterations += solution.iterations;
    phases.push(PhaseTrace { label: "exact", trace: solution.trace.clone() });

    let stats = RunStats {
        newton_iterations: total_iterations,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let certificate = certify_upper(&problem, &solution.x, stats)
        .map_err(|error| PipelineError::Certification { error, phases: phases.clone() })?;
    Ok(RunOutput { certificate, phases })
}

/// Serializes one iteration record as a JSON line. The leading fields
/// follow the trace schema (k, r_norm, t, ell, minres_iters,
/// minres_relres, wall_ms); phase, rp_norm, and min_x are appended for
/// invariant audits.
pub fn trace_record_json(label: &str, rec: &IterationRecord) -> String {
    format!(
        concat!(
            "{{\"k\":{},\"r_norm\":{},\"t\":{},\"ell\":{},",
            "\"minres_iters\":{},\"minres_relres\":{},\"wall_ms\":{},",
            "\"phase\":\"{}\",\"rp_norm\":{},\"min_x\":{}}}"
        ),
        rec.k,
        crate::certify::json_f64(rec.residual_norm),
        crate::certify::json_f64(rec.step_length),
        rec.backtracks,
        rec.minres_iterations,
        crate::certify::json_f64(rec.minres_relative_residual),
        crate::certify::json_f64(rec.wall_ms),
        label,
        crate::certify::json_f64(rec.primal_residual_norm),
        crate::certify::json_f64(rec.min_x),
    )
}

/// Writes every phase of a run as line-delimited JSON.
pub fn write_trace<W: Write>(phases: &[PhaseTrace], w: &mut W) -> io::Result<()> {
    for phase in phases {
        for rec in &phase.trace.records {
            writeln!(w, "{}", trace_record_json(phase.label, rec))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_pipeline_small() {
        let cfg = NewtonConfig::default();
        let out = run_lower(4, &cfg, None).unwrap();
        assert_eq!(out.phases.len(), 1);
        assert!(out.phases[0].trace.converged);
        assert!(out.certificate.certified_value <= out.certificate.primal_objective + 1e-8);
        // Feasible start: the primal residual stays at rounding level.
        for rec in &out.phases[0].trace.records {
            assert!(rec.primal_residual_norm <= 1e-12);
        }
    }

    #[test]
    fn upper_pipeline_small_two_phase() {
        let cfg = NewtonConfig::default();
        let out = run_upper(4, &cfg, true, None).unwrap();
        assert_eq!(out.phases.len(), 2);
        assert_eq!(out.phases[0].label, "approx");
        assert_eq!(out.phases[1].label, "exact");
        assert!(out.phases.iter().all(|p| p.trace.converged));
        assert!(out.certificate.dual_value.is_none());
        assert!(out.certificate.primal_residual_norm <= 1e-10);
    }

    #[test]
    fn trace_lines_parse_as_json() {
        let cfg = NewtonConfig::default();
        let out = run_lower(3, &cfg, None).unwrap();
        let mut buf = Vec::new();
        write_trace(&out.phases, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.is_empty());
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["phase"], "lower");
            assert!(v["r_norm"].as_f64().unwrap() > 0.0);
        }
    }
}
