//! The lower-bound program.
//!
//! Variables are the four triangle matrices plus one slack per diagonal and
//! anti-diagonal (`d_{-n} .. d_{n-1}`, `a_{-n} .. a_{n-1}`), giving
//! `p = 4n^2 + 4n`. The constraints are the 4n slack-definition rows
//!
//! ```text
//! D_k(S + W) + D_{k+1}(N + E) + d_k = 1/n
//! A_k(S + E) + A_{k+1}(N + W) + a_k = 1/n
//! ```
//!
//! plus the row sums (with the redundant `i = 0` row deleted) and column
//! sums, all equal to `1/n`, for `q = 6n - 1` rows total. The objective is
//! the negative entropy summed over every variable plus the constant
//! `4 ln n + 2 ln 2 + 3`, so the Hessian is diagonal and its optimal value
//! lower-bounds the n-queens constant. Any dual vector certifies a lower
//! bound through the explicit conjugate; see [`LowerProblem::dual_value`].

use crate::board::{BoardLayout, Group, LayoutKind, LowerRowMap};
use crate::error::{Error, Result};
use crate::newton::{schur_newton_step, Iterate, NewtonConfig, NewtonStep};
use crate::problem::{HessianInverse, Problem};
use crate::sparse::{SparseMatrix, SparseMatrixBuilder};
use crate::vecops;
use rayon::prelude::*;

/// Number of partial accumulators used by the row-product kernel; fixed so
/// results do not depend on the thread count.
const APPLY_CHUNKS: usize = 16;

#[derive(Debug, Clone)]
pub struct LowerProblem {
    n: usize,
    layout: BoardLayout,
    rows: LowerRowMap,
    matrix: SparseMatrix,
    rhs: Vec<f64>,
    /// Objective constant `4 ln n + 2 ln 2 + 3`.
    objective_constant: f64,
}

/// Builds the lower-bound program for board size `n`.
pub fn build_lower(n: usize) -> Result<LowerProblem> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("board size {n} must be >= 1")));
    }
    let layout = BoardLayout::new(n, LayoutKind::Lower)?;
    let rows = LowerRowMap { n };
    let ni = n as i64;

    let mut builder = SparseMatrixBuilder::new(layout.num_vars());
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(4 * n + 1);

    let diag_cols = |entries: &mut Vec<(usize, f64)>, groups: [Group; 2], k: i64| {
        for g in groups {
            for i in k.max(0)..(ni + k).min(ni) {
                entries.push((layout.triangle(g, i as usize, (i - k) as usize), 1.0));
            }
        }
    };
    let anti_cols = |entries: &mut Vec<(usize, f64)>, groups: [Group; 2], k: i64| {
        let s = ni - 1 - k;
        for g in groups {
            for i in (s - (ni - 1)).max(0)..=s.min(ni - 1) {
                entries.push((layout.triangle(g, i as usize, (s - i) as usize), 1.0));
            }
        }
    };

    for k in -ni..ni {
        entries.clear();
        diag_cols(&mut entries, [Group::South, Group::West], k);
        diag_cols(&mut entries, [Group::North, Group::East], k + 1);
        entries.push((layout.lower_diag_slack(k), 1.0));
        builder.push_row(&mut entries)?;
    }
    for k in -ni..ni {
        entries.clear();
        anti_cols(&mut entries, [Group::South, Group::East], k);
        anti_cols(&mut entries, [Group::North, Group::West], k + 1);
        entries.push((layout.lower_anti_slack(k), 1.0));
        builder.push_row(&mut entries)?;
    }
    for i in 1..n {
        entries.clear();
        for g in Group::ALL {
            for j in 0..n {
                entries.push((layout.triangle(g, i, j), 1.0));
            }
        }
        builder.push_row(&mut entries)?;
    }
    for j in 0..n {
        entries.clear();
        for g in Group::ALL {
            for i in 0..n {
                entries.push((layout.triangle(g, i, j), 1.0));
            }
        }
        builder.push_row(&mut entries)?;
    }

    let matrix = builder.finish()?;
    debug_assert_eq!(matrix.n_rows(), rows.num_rows());
    if n <= 16 {
        assert!(matrix.has_full_row_rank(), "lower constraint matrix lost full row rank");
    }

    let rhs = vec![1.0 / n as f64; rows.num_rows()];
    let objective_constant = 4.0 * (n as f64).ln() + 2.0 * 2f64.ln() + 3.0;
    Ok(LowerProblem { n, layout, rows, matrix, rhs, objective_constant })
}

impl LowerProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> &BoardLayout {
        &self.layout
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    /// Sum of `g` over every variable plus the objective constant.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_len(x.len(), self.layout.num_vars())?;
        if let Some(i) = x.iter().position(|&v| v < 0.0) {
            return Err(Error::Domain(format!("objective: x[{i}] = {} is negative", x[i])));
        }
        let entropy =
            vecops::map_sum(x, |_, v| if v == 0.0 { 0.0 } else { v * v.ln() });
        Ok(entropy + self.objective_constant)
    }

    /// Gradient `ln x_i + 1`, for strictly positive `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        Problem::gradient_into(self, x, &mut out)?;
        Ok(out)
    }

    /// Applies the inverse Hessian `diag(x)` to `v`.
    pub fn hess_inv_apply(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(v.len(), self.layout.num_vars())?;
        Ok(Problem::hessian_inverse(self, x)?.apply(v))
    }

    /// The dual function `h(nu) = nu^T b - f*(A^T nu)` with the explicit
    /// conjugate `f*(y) = sum_i exp(y_i - 1) - (4 ln n + 2 ln 2 + 3)`.
    ///
    /// Every `nu` yields a valid lower bound on the optimal value; overflow
    /// in an exponential degrades the bound to `-inf` but never invalidates
    /// it.
    pub fn dual_value(&self, nu: &[f64]) -> Result<f64> {
        check_len(nu.len(), self.rows.num_rows())?;
        let mut y = vec![0.0; self.layout.num_vars()];
        self.apply_transpose(nu, &mut y);
        let conj_sum = vecops::map_sum(&y, |_, v| (v - 1.0).exp());
        Ok(vecops::dot(nu, &self.rhs) - conj_sum + self.objective_constant)
    }

    /// Uniform interior starting point: every triangle at `1/(4n^2)` with
    /// the slacks set from their defining equations, which makes `A x0 = b`
    /// hold to rounding, so Newton runs in feasible mode from iteration 0.
    pub fn initial_point(&self) -> Iterate {
        let n = self.n;
        let ni = n as i64;
        let t0 = 1.0 / (4.0 * (n * n) as f64);
        let mut x = vec![t0; self.layout.num_vars()];
        let len = |k: i64| (ni - k.abs()).max(0) as f64;
        for k in -ni..ni {
            let slack = 1.0 / n as f64 - (2.0 * len(k) + 2.0 * len(k + 1)) * t0;
            x[self.layout.lower_diag_slack(k)] = slack;
            x[self.layout.lower_anti_slack(k)] = slack;
        }
        Iterate { x, nu: vec![0.0; self.rows.num_rows()] }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let q = self.rows.num_rows();
        let units: Vec<(usize, usize)> =
            (0..4 * n).map(|u| (u / n, u % n)).collect();
        let chunk = units.len().div_ceil(APPLY_CHUNKS);
        let partials: Vec<Vec<f64>> = units
            .par_chunks(chunk.max(1))
            .map(|unit_chunk| {
                let mut acc = vec![0.0; q];
                for &(g, i) in unit_chunk {
                    self.accumulate_unit(Group::ALL[g], i, x, &mut acc);
                }
                acc
            })
            .collect();
        out.fill(0.0);
        for acc in &partials {
            for (o, a) in out.iter_mut().zip(acc) {
                *o += a;
            }
        }
        // Slack columns: d_k feeds row k + n, a_k feeds row 3n + k, in
        // storage order on both sides.
        let base = self.layout.num_triangles();
        for idx in 0..4 * n {
            out[idx] += x[base + idx];
        }
    }

    /// Row constants of the product kernels: a triangle `(group, i, j)`
    /// touches diagonal-family row `c_diag - j` and anti-family row
    /// `c_anti - j` (plus its column row and, for `i >= 1`, its row row).
    /// N and E sit on the shifted `k + 1` side of the diagonal equations;
    /// N and W on the shifted side of the anti-diagonal equations.
    fn unit_constants(&self, group: Group, i: usize) -> (usize, usize) {
        let n = self.n;
        match group {
            Group::North => (i + n - 1, 4 * n - 2 - i),
            Group::East => (i + n - 1, 4 * n - 1 - i),
            Group::South => (i + n, 4 * n - 1 - i),
            Group::West => (i + n, 4 * n - 2 - i),
        }
    }

    fn accumulate_unit(&self, group: Group, i: usize, x: &[f64], acc: &mut [f64]) {
        let n = self.n;
        let (c_diag, c_anti) = self.unit_constants(group, i);
        let row = &x[self.layout.triangle(group, i, 0)..=self.layout.triangle(group, i, n - 1)];
        let col_base = 5 * n - 1;
        let mut row_total = 0.0;
        for (j, &v) in row.iter().enumerate() {
            acc[c_diag - j] += v;
            acc[c_anti - j] += v;
            acc[col_base + j] += v;
            row_total += v;
        }
        if i >= 1 {
            acc[4 * n + i - 1] += row_total;
        }
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let tri = self.layout.num_triangles();
        let (tri_out, slack_out) = out.split_at_mut(tri);
        tri_out
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(u, dest)| {
                let (g, i) = (u / n, u % n);
                let group = Group::ALL[g];
                let (c_diag, c_anti) = self.unit_constants(group, i);
                let col_base = 5 * n - 1;
                let row_term = if i >= 1 { y[4 * n + i - 1] } else { 0.0 };
                for (j, d) in dest.iter_mut().enumerate() {
                    *d = y[c_diag - j] + y[c_anti - j] + y[col_base + j] + row_term;
                }
            });
        for (idx, s) in slack_out.iter_mut().enumerate() {
            *s = y[idx];
        }
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidArgument(format!("vector length {got}, expected {want}")));
    }
    Ok(())
}

impl Problem for LowerProblem {
    fn board_size(&self) -> usize {
        self.n
    }

    fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    fn num_rows(&self) -> usize {
        self.rows.num_rows()
    }

    fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn objective(&self, x: &[f64]) -> Result<f64> {
        LowerProblem::objective(self, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(x.len(), self.layout.num_vars())?;
        check_len(out.len(), x.len())?;
        if let Some(i) = x.iter().position(|&v| v <= 0.0) {
            return Err(Error::Domain(format!("gradient: x[{i}] = {} not positive", x[i])));
        }
        vecops::map_into(x, out, |v| v.ln() + 1.0);
        Ok(())
    }

    fn apply_constraints_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.layout.num_vars());
        assert_eq!(out.len(), self.rows.num_rows());
        self.apply(x, out);
    }

    fn apply_constraints_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows.num_rows());
        assert_eq!(out.len(), self.layout.num_vars());
        self.apply_transpose(y, out);
    }

    fn hessian_inverse(&self, x: &[f64]) -> Result<HessianInverse> {
        check_len(x.len(), self.layout.num_vars())?;
        if let Some(i) = x.iter().position(|&v| v <= 0.0) {
            return Err(Error::Domain(format!("hessian: x[{i}] = {} not positive", x[i])));
        }
        Ok(HessianInverse::diagonal(x.to_vec()))
    }

    fn solve_newton_step(
        &self,
        x: &[f64],
        r_d: &[f64],
        r_p: &[f64],
        cfg: &NewtonConfig,
    ) -> Result<NewtonStep> {
        schur_newton_step(self, x, r_d, r_p, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formulas() {
        let p = build_lower(2).unwrap();
        assert_eq!(Problem::num_vars(&p), 24);
        assert_eq!(Problem::num_rows(&p), 11);
        // Headline instance dimensions, checked without materializing it.
        // The row count is 6n - 1 after deleting the redundant row-sum
        // constraint (one less than the pre-deletion count of 6n).
        let layout = BoardLayout::new(2048, LayoutKind::Lower).unwrap();
        assert_eq!(layout.num_vars(), 16_785_408);
        assert_eq!(LowerRowMap { n: 2048 }.num_rows(), 12_287);
        assert!(build_lower(0).is_err());
    }

    #[test]
    fn matrix_matches_structured_products() {
        for n in [1usize, 2, 3, 5, 8] {
            let p = build_lower(n).unwrap();
            let pv = Problem::num_vars(&p);
            let x: Vec<f64> = (0..pv).map(|i| ((i * 2654435761) % 97) as f64 / 97.0 + 0.1).collect();
            let via_matrix = p.matrix.spmv(&x).unwrap();
            let mut via_kernel = vec![0.0; Problem::num_rows(&p)];
            p.apply_constraints_into(&x, &mut via_kernel);
            for (a, b) in via_matrix.iter().zip(&via_kernel) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "n={n}");
            }

            let y: Vec<f64> = (0..Problem::num_rows(&p))
                .map(|i| ((i * 40503) % 89) as f64 / 89.0 - 0.4)
                .collect();
            let via_matrix_t = p.matrix.spmv_t(&y).unwrap();
            let mut via_kernel_t = vec![0.0; pv];
            p.apply_constraints_transpose_into(&y, &mut via_kernel_t);
            for (a, b) in via_matrix_t.iter().zip(&via_kernel_t) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "n={n}");
            }
        }
    }

    #[test]
    fn initial_point_is_feasible_and_interior() {
        for n in [2usize, 8, 64] {
            let p = build_lower(n).unwrap();
            let init = p.initial_point();
            assert!(vecops::all_positive(&init.x), "n={n}");
            let r = p.matrix.spmv(&init.x).unwrap();
            let b_norm = vecops::norm2(p.rhs());
            let err: f64 = r
                .iter()
                .zip(p.rhs())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-14 * b_norm, "n={n}: ||Ax0-b|| = {err:.3e}");
        }
    }

    #[test]
    fn initial_slacks_bottom_out_at_the_central_diagonal() {
        // At n = 4 the tightest slack is d_0 = 1/n - (2n - 1)/(2n^2) =
        // 1/(2n^2) = 1/32; the overall minimum coordinate is the uniform
        // triangle value 1/(4n^2) = 1/64.
        let p = build_lower(4).unwrap();
        let init = p.initial_point();
        assert_eq!(init.x[p.layout.lower_diag_slack(0)], 1.0 / 32.0);
        assert_eq!(init.x[p.layout.lower_anti_slack(-1)], 1.0 / 32.0);
        let tri = p.layout.num_triangles();
        let min_slack = init.x[tri..].iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min_slack, 1.0 / 32.0);
        assert_eq!(vecops::min_entry(&init.x), 1.0 / 64.0);
    }

    #[test]
    fn gradient_at_ones_is_ones() {
        let p = build_lower(3).unwrap();
        let g = p.gradient(&vec![1.0; Problem::num_vars(&p)]).unwrap();
        assert!(g.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn objective_at_zero_is_the_constant() {
        let p = build_lower(5).unwrap();
        let v = LowerProblem::objective(&p, &vec![0.0; Problem::num_vars(&p)]).unwrap();
        assert_eq!(v, p.objective_constant());
        assert!(LowerProblem::objective(&p, &vec![-1.0; Problem::num_vars(&p)]).is_err());
    }

    #[test]
    fn dual_at_zero_has_closed_form() {
        let p = build_lower(4).unwrap();
        let h0 = p.dual_value(&vec![0.0; Problem::num_rows(&p)]).unwrap();
        let expected = -(80.0) * (-1.0f64).exp() + p.objective_constant();
        assert!((h0 - expected).abs() < 1e-12);
    }

    #[test]
    fn hessian_inverse_inverts_diag() {
        let p = build_lower(2).unwrap();
        let pv = Problem::num_vars(&p);
        let x: Vec<f64> = (0..pv).map(|i| 0.3 + 0.01 * i as f64).collect();
        let v: Vec<f64> = (0..pv).map(|i| (i as f64).cos()).collect();
        let hv = p.hess_inv_apply(&x, &v).unwrap();
        for i in 0..pv {
            // H = diag(1/x): H * (Hinv v) should return v.
            assert!(((hv[i] / x[i]) - v[i]).abs() <= 1e-14 * (1.0 + v[i].abs()));
        }
    }

    #[test]
    fn column_degrees_at_most_four() {
        let p = build_lower(6).unwrap();
        let deg = p.matrix.column_degrees();
        let tri = p.layout.num_triangles();
        for (c, &d) in deg.iter().enumerate() {
            if c < tri {
                assert!(d <= 4, "triangle column {c} has degree {d}");
            } else {
                assert_eq!(d, 1, "slack column {c}");
            }
        }
    }
}
