//! Scalar building blocks of the two objectives.
//!
//! Both problems are built from the negative entropy `g(x) = x ln x` (with
//! `g(0) = 0`), its convex conjugate `exp(y - 1)`, and the pair-entropy
//! integral
//!
//! ```text
//! F(u, v) = ∫₀¹ g((1 - y) u + y v) dy
//! ```
//!
//! which couples consecutive slack variables in the upper-bound objective.
//! `F` and its partial derivatives have closed forms in `u`, `v`, but the
//! direct expressions cancel catastrophically as `u → v`; near the diagonal
//! we evaluate a series in the half-difference `e = (v - u)/2` around the
//! midpoint `m = (u + v)/2` instead. Every expression here is validated
//! against quadrature and finite-difference oracles in the test suite rather
//! than trusted.

use crate::error::{Error, Result};

/// Relative half-width `|u - v| / max(u, v)` below which the pair integral
/// and its derivatives switch to the midpoint series.
pub const PAIR_STABLE_THRESHOLD: f64 = 1e-4;

/// Negative entropy `g(x) = x ln x`, extended by `g(0) = 0`.
pub fn neg_entropy(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Domain(format!("neg_entropy: negative argument {x}")));
    }
    Ok(if x == 0.0 { 0.0 } else { x * x.ln() })
}

/// First derivative `g'(x) = ln x + 1`, defined for `x > 0`.
pub fn neg_entropy_d1(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("neg_entropy_d1: nonpositive argument {x}")));
    }
    Ok(x.ln() + 1.0)
}

/// Second derivative `g''(x) = 1/x`, defined for `x > 0`.
pub fn neg_entropy_d2(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("neg_entropy_d2: nonpositive argument {x}")));
    }
    Ok(1.0 / x)
}

/// Convex conjugate of the negative entropy: `g*(y) = exp(y - 1)`.
///
/// Defined for every real `y`; overflow at extreme arguments yields `+inf`,
/// which the dual evaluator propagates as a valid but vacuous bound.
pub fn entropy_conjugate(y: f64) -> f64 {
    (y - 1.0).exp()
}

/// The 2x2 Hessian of the pair integral, stored as its three distinct
/// entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairHessian {
    pub h_uu: f64,
    pub h_uv: f64,
    pub h_vv: f64,
}

impl PairHessian {
    pub fn det(&self) -> f64 {
        self.h_uu * self.h_vv - self.h_uv * self.h_uv
    }
}

/// `t² ln t`, extended by 0 at `t = 0`.
fn sq_ln(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t * t.ln()
    }
}

fn use_stable_branch(u: f64, v: f64) -> bool {
    (u - v).abs() <= PAIR_STABLE_THRESHOLD * u.max(v)
}

fn check_nonnegative(name: &str, u: f64, v: f64) -> Result<()> {
    if u < 0.0 || v < 0.0 {
        return Err(Error::Domain(format!("{name}: negative argument ({u}, {v})")));
    }
    Ok(())
}

fn check_positive(name: &str, u: f64, v: f64) -> Result<()> {
    if u <= 0.0 || v <= 0.0 {
        return Err(Error::Domain(format!("{name}: nonpositive argument ({u}, {v})")));
    }
    Ok(())
}

/// Pair-entropy integral `F(u, v) = ∫₀¹ g((1 - y) u + y v) dy` for
/// `u, v ≥ 0`.
///
/// For `u ≠ v` this is `(v² ln v - u² ln u) / (2 (v - u)) - (u + v) / 4`;
/// the midpoint series takes over inside the [`PAIR_STABLE_THRESHOLD`]
/// band, where the closed form loses all significant digits.
pub fn pair_integral(u: f64, v: f64) -> Result<f64> {
    check_nonnegative("pair_integral", u, v)?;
    if u == v {
        return neg_entropy(u);
    }
    if use_stable_branch(u, v) {
        let m = 0.5 * (u + v);
        let e = 0.5 * (v - u);
        let e2 = e * e;
        // F = g(m) + e²/(6m) + e⁴/(60 m³) + e⁶/(210 m⁵) + ...
        return Ok(m * m.ln() + e2 / (6.0 * m) + e2 * e2 / (60.0 * m * m * m));
    }
    let d = v - u;
    Ok((sq_ln(v) - sq_ln(u)) / (2.0 * d) - 0.25 * (u + v))
}

/// Partial derivatives `(∂F/∂u, ∂F/∂v)` of [`pair_integral`] for
/// `u, v > 0`.
pub fn pair_integral_grad(u: f64, v: f64) -> Result<(f64, f64)> {
    check_positive("pair_integral_grad", u, v)?;
    if use_stable_branch(u, v) {
        let m = 0.5 * (u + v);
        let e = 0.5 * (v - u);
        let base = 0.5 * (m.ln() + 1.0);
        let t1 = e / (6.0 * m);
        let t2 = e * e / (12.0 * m * m);
        let t3 = e * e * e / (30.0 * m * m * m);
        let t4 = e * e * e * e / (40.0 * m * m * m * m);
        return Ok((base - t1 - t2 - t3 - t4, base + t1 - t2 + t3 - t4));
    }
    let d = v - u;
    let d2 = d * d;
    let (lu, lv) = (u.ln(), v.ln());
    // F_u = [v² ln v + (u² - 2uv) ln u + (u² - v²)/2] / (2 (v - u)²)
    let fu = (v * v * lv + (u * u - 2.0 * u * v) * lu + 0.5 * (u * u - v * v)) / (2.0 * d2);
    let fv = (u * u * lu + (v * v - 2.0 * u * v) * lv + 0.5 * (v * v - u * u)) / (2.0 * d2);
    Ok((fu, fv))
}

/// The 2x2 Hessian of [`pair_integral`] for `u, v > 0`:
///
/// ```text
/// ∫₀¹ [ (1-y)²   (1-y)y ]
///     [ (1-y)y     y²   ]  / ((1 - y) u + y v)  dy
/// ```
pub fn pair_integral_hess(u: f64, v: f64) -> Result<PairHessian> {
    check_positive("pair_integral_hess", u, v)?;
    if use_stable_branch(u, v) {
        let m = 0.5 * (u + v);
        let r = 0.5 * (v - u) / m;
        let r2 = r * r;
        let even = 1.0 / 3.0 + 2.0 * r2 / 15.0 + 3.0 * r2 * r2 / 35.0;
        let odd = r / 6.0 + r2 * r / 10.0;
        return Ok(PairHessian {
            h_uu: (even + odd) / m,
            h_uv: (1.0 / 6.0 + r2 / 30.0 + r2 * r2 / 70.0) / m,
            h_vv: (even - odd) / m,
        });
    }
    let d = v - u;
    let d3 = d * d * d;
    let log_ratio = (v / u).ln();
    let half_sq_diff = 0.5 * (v * v - u * u);
    let h_uu = (v * v * log_ratio - 2.0 * v * d + half_sq_diff) / d3;
    let h_vv = (u * u * log_ratio - 2.0 * u * d + half_sq_diff) / d3;
    let h_uv = ((u + v) * d - u * v * log_ratio - half_sq_diff) / d3;
    Ok(PairHessian { h_uu, h_uv, h_vv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_fixed_points() {
        assert_eq!(neg_entropy(0.0).unwrap(), 0.0);
        assert_eq!(neg_entropy(1.0).unwrap(), 0.0);
        assert!(neg_entropy(-0.5).is_err());
        assert!(neg_entropy_d1(0.0).is_err());
        assert!(neg_entropy_d2(0.0).is_err());
        assert_eq!(neg_entropy_d1(1.0).unwrap(), 1.0);
        assert_eq!(neg_entropy_d2(4.0).unwrap(), 0.25);
    }

    #[test]
    fn conjugate_fixed_points() {
        assert_eq!(entropy_conjugate(1.0), 1.0);
        assert!((entropy_conjugate(0.0) - 0.36787944117144233).abs() < 1e-15);
        // Fenchel equality at the maximizer: g*(g'(x)) = x g'(x) - g(x).
        for &x in &[0.5, 2.0] {
            let y = neg_entropy_d1(x).unwrap();
            let lhs = entropy_conjugate(y);
            let rhs = x * y - neg_entropy(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-14, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn pair_integral_fixed_points() {
        assert_eq!(pair_integral(1.0, 1.0).unwrap(), 0.0);
        // ∫₀¹ y ln y dy = -1/4.
        assert!((pair_integral(0.0, 1.0).unwrap() + 0.25).abs() < 1e-15);
        assert!((pair_integral(1.0, 0.0).unwrap() + 0.25).abs() < 1e-15);
        assert!(pair_integral(-1.0, 1.0).is_err());
    }

    #[test]
    fn grad_at_equal_arguments() {
        for &u in &[0.3, 1.0, 7.5] {
            let (fu, fv) = pair_integral_grad(u, u).unwrap();
            let expected = 0.5 * (u.ln() + 1.0);
            assert!((fu - expected).abs() < 1e-14);
            assert!((fv - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn hess_at_equal_arguments() {
        // At u = v the blocks are [1/(3u), 1/(6u); 1/(6u), 1/(3u)].
        let h = pair_integral_hess(2.0, 2.0).unwrap();
        assert!((h.h_uu - 1.0 / 6.0).abs() < 1e-14);
        assert!((h.h_uv - 1.0 / 12.0).abs() < 1e-14);
        assert!((h.h_vv - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn stable_branch_is_continuous() {
        // Compare the two branches right at the threshold boundary.
        for &m in &[0.01, 0.5, 1.0, 40.0] {
            let delta = PAIR_STABLE_THRESHOLD * m;
            let (u, v) = (m - delta, m);
            let direct = (sq_ln(v) - sq_ln(u)) / (2.0 * (v - u)) - 0.25 * (u + v);
            let stable = pair_integral(u, v).unwrap();
            assert!(
                (direct - stable).abs() <= 1e-12 * (1.0 + stable.abs()),
                "m={m}: direct {direct} vs stable {stable}"
            );
        }
    }

    #[test]
    fn limit_consistency_toward_diagonal() {
        let u = 0.8;
        let eps = 1e-8;
        let g_u = neg_entropy(u).unwrap();
        let f = pair_integral(u, u + eps).unwrap();
        assert!((f - g_u).abs() < 1e-7);
    }
}
