//! The upper-bound program and its separable warm-start approximation.
//!
//! Variables are the triangle matrices plus four slack families
//! `d^{SW}_k, d^{NE}_k, a^{SE}_k, a^{NW}_k` for `k` in `[-n+1, n-1]`,
//! defined by the scaled rows
//!
//! ```text
//! D_k(S + W) + 2n d^{SW}_k = 2n      (and analogously for the others)
//! ```
//!
//! so every matrix entry is 0, 1, or 2n. Row/column mass constraints fix
//! `N` and `S` row sums and `E` and `W` column sums to `n`, with combined
//! column/row sums equal to `2n` (one redundant combined row deleted per
//! family), for `q = 14n - 6` rows. The objective couples consecutive
//! slacks through the pair-entropy integral, with the boundary constants
//! `d^{SW}_{-n} = d^{NE}_n = a^{SE}_{-n} = a^{NW}_n = 1`:
//!
//! ```text
//! 3 + (1/4n^2) sum g(triangles)
//!   + (1/n) sum_k F(d^{SW}_{k-1}, d^{NE}_k)
//!   + (1/n) sum_k F(a^{SE}_{k-1}, a^{NW}_k)
//! ```
//!
//! Interleaving the slack families makes the Hessian block diagonal with
//! 1x1 and 2x2 blocks. Its optimal value upper-bounds the n-queens
//! constant; a feasible point certifies it.
//!
//! The approximate problem replaces each integral by `g` at the pair
//! midpoint (Jensen's inequality, so it never exceeds the exact objective
//! at matched points), introducing averaged slacks `d_k, a_k` and the rows
//! `2 d_k - d^{SW}_{k-1} - d^{NE}_k = 0` (boundary constants moving to the
//! right-hand side). That leaves the original slacks outside the objective,
//! so its Hessian is singular on those coordinates and the standard Schur
//! reduction does not apply; [`ApproxUpperProblem`] instead eliminates the
//! definition rows and their duals exactly, which collapses the Newton
//! system onto a positive definite operator over the remaining dual block.

use crate::board::{AntiSide, BoardLayout, DiagSide, Group, LayoutKind, UpperRowMap};
use crate::error::{Error, Result};
use crate::minres::{minres, LinearOperator};
use crate::newton::{schur_newton_step, Iterate, NewtonConfig, NewtonStep};
use crate::problem::{HessianInverse, Problem};
use crate::scalar::{pair_integral, pair_integral_grad, pair_integral_hess};
use crate::sparse::{SparseMatrix, SparseMatrixBuilder};
use crate::vecops;
use rayon::prelude::*;

const APPLY_CHUNKS: usize = 16;

/// One pair term `F(u, v)` of the objective; `None` marks a boundary
/// constant fixed at 1.
#[derive(Debug, Clone, Copy)]
struct PairTerm {
    u: Option<u32>,
    v: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct UpperProblem {
    n: usize,
    layout: BoardLayout,
    rows: UpperRowMap,
    matrix: SparseMatrix,
    rhs: Vec<f64>,
    /// Definition row of each slack column, in slack storage order.
    slack_def_rows: Vec<u32>,
    /// The 4n objective pair terms (diagonal family then anti family).
    pair_terms: Vec<PairTerm>,
}

#[derive(Debug, Clone)]
pub struct ApproxUpperProblem {
    n: usize,
    layout: BoardLayout,
    rows: UpperRowMap,
    matrix: SparseMatrix,
    rhs: Vec<f64>,
    slack_def_rows: Vec<u32>,
    /// Averaging row each original slack appears in (coefficient -1).
    slack_avg_rows: Vec<u32>,
}

/// Emits the `14n - 6` shared constraint rows. Column indexing is identical
/// for the exact and approximate layouts because the shared variables come
/// first.
fn push_upper_rows(builder: &mut SparseMatrixBuilder, layout: &BoardLayout) -> Result<()> {
    let n = layout.n();
    let ni = n as i64;
    let two_n = (2 * n) as f64;
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * n + 1);

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

    for k in (-ni + 1)..ni {
        entries.clear();
        diag_cols(&mut entries, [Group::South, Group::West], k);
        entries.push((layout.upper_diag_slack(DiagSide::SouthWest, k), two_n));
        builder.push_row(&mut entries)?;
    }
    for k in (-ni + 1)..ni {
        entries.clear();
        diag_cols(&mut entries, [Group::North, Group::East], k);
        entries.push((layout.upper_diag_slack(DiagSide::NorthEast, k), two_n));
        builder.push_row(&mut entries)?;
    }
    for k in (-ni + 1)..ni {
        entries.clear();
        anti_cols(&mut entries, [Group::South, Group::East], k);
        entries.push((layout.upper_anti_slack(AntiSide::SouthEast, k), two_n));
        builder.push_row(&mut entries)?;
    }
    for k in (-ni + 1)..ni {
        entries.clear();
        anti_cols(&mut entries, [Group::North, Group::West], k);
        entries.push((layout.upper_anti_slack(AntiSide::NorthWest, k), two_n));
        builder.push_row(&mut entries)?;
    }

    for g in [Group::North, Group::South] {
        for i in 0..n {
            entries.clear();
            for j in 0..n {
                entries.push((layout.triangle(g, i, j), 1.0));
            }
            builder.push_row(&mut entries)?;
        }
    }
    for j in 1..n {
        entries.clear();
        for g in [Group::North, Group::South] {
            for i in 0..n {
                entries.push((layout.triangle(g, i, j), 1.0));
            }
        }
        builder.push_row(&mut entries)?;
    }
    for g in [Group::East, Group::West] {
        for j in 0..n {
            entries.clear();
            for i in 0..n {
                entries.push((layout.triangle(g, i, j), 1.0));
            }
            builder.push_row(&mut entries)?;
        }
    }
    for i in 1..n {
        entries.clear();
        for g in [Group::East, Group::West] {
            for j in 0..n {
                entries.push((layout.triangle(g, i, j), 1.0));
            }
        }
        builder.push_row(&mut entries)?;
    }
    Ok(())
}

fn upper_rhs(n: usize, rows: &UpperRowMap) -> Vec<f64> {
    let mut b = vec![0.0; rows.num_rows()];
    let nf = n as f64;
    for r in b.iter_mut().take(8 * n - 4) {
        *r = 2.0 * nf;
    }
    for i in 0..n {
        b[rows.n_row(i)] = nf;
        b[rows.s_row(i)] = nf;
        b[rows.e_col_row(i)] = nf;
        b[rows.w_col_row(i)] = nf;
    }
    for j in 1..n {
        b[rows.ns_col_row(j)] = 2.0 * nf;
    }
    for i in 1..n {
        b[rows.ew_row_row(i)] = 2.0 * nf;
    }
    b
}

/// Definition row of each slack column, in slack storage order.
fn slack_def_rows(n: usize, layout: &BoardLayout, rows: &UpperRowMap) -> Vec<u32> {
    let ni = n as i64;
    let mut def = vec![0u32; 8 * n - 4];
    let base = layout.num_triangles();
    for k in (-ni + 1)..ni {
        for side in [DiagSide::SouthWest, DiagSide::NorthEast] {
            def[layout.upper_diag_slack(side, k) - base] = rows.def_diag_row(side, k) as u32;
        }
        for side in [AntiSide::SouthEast, AntiSide::NorthWest] {
            def[layout.upper_anti_slack(side, k) - base] = rows.def_anti_row(side, k) as u32;
        }
    }
    def
}

fn pair_terms(n: usize, layout: &BoardLayout) -> Vec<PairTerm> {
    let ni = n as i64;
    let mut terms = Vec::with_capacity(4 * n);
    for k in (-ni + 1)..=ni {
        terms.push(PairTerm {
            u: (k - 1 >= -ni + 1)
                .then(|| layout.upper_diag_slack(DiagSide::SouthWest, k - 1) as u32),
            v: (k <= ni - 1).then(|| layout.upper_diag_slack(DiagSide::NorthEast, k) as u32),
        });
    }
    for k in (-ni + 1)..=ni {
        terms.push(PairTerm {
            u: (k - 1 >= -ni + 1)
                .then(|| layout.upper_anti_slack(AntiSide::SouthEast, k - 1) as u32),
            v: (k <= ni - 1).then(|| layout.upper_anti_slack(AntiSide::NorthWest, k) as u32),
        });
    }
    terms
}

/// Builds the upper-bound program for board size `n`.
pub fn build_upper(n: usize) -> Result<UpperProblem> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("board size {n} must be >= 1")));
    }
    let layout = BoardLayout::new(n, LayoutKind::Upper)?;
    let rows = UpperRowMap { n };
    let mut builder = SparseMatrixBuilder::new(layout.num_vars());
    push_upper_rows(&mut builder, &layout)?;
    let matrix = builder.finish()?;
    debug_assert_eq!(matrix.n_rows(), rows.num_rows());
    if n <= 16 {
        assert!(matrix.has_full_row_rank(), "upper constraint matrix lost full row rank");
    }
    let rhs = upper_rhs(n, &rows);
    let slack_def = slack_def_rows(n, &layout, &rows);
    let terms = pair_terms(n, &layout);
    Ok(UpperProblem {
        n,
        rows,
        matrix,
        rhs,
        slack_def_rows: slack_def,
        pair_terms: terms,
        layout,
    })
}

/// Builds the Jensen-approximated problem: the upper-bound constraint
/// system plus 4n averaged slacks and their defining rows.
pub fn build_approx_upper(n: usize) -> Result<ApproxUpperProblem> {
    if n < 1 {
        return Err(Error::InvalidArgument(format!("board size {n} must be >= 1")));
    }
    let layout = BoardLayout::new(n, LayoutKind::ApproxUpper)?;
    let rows = UpperRowMap { n };
    let ni = n as i64;
    let mut builder = SparseMatrixBuilder::new(layout.num_vars());
    push_upper_rows(&mut builder, &layout)?;

    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(3);
    let mut rhs = upper_rhs(n, &rows);
    rhs.resize(rows.num_rows_approx(), 0.0);
    for k in (-ni + 1)..=ni {
        entries.clear();
        entries.push((layout.avg_diag_slack(k), 2.0));
        if k - 1 >= -ni + 1 {
            entries.push((layout.upper_diag_slack(DiagSide::SouthWest, k - 1), -1.0));
        } else {
            rhs[rows.avg_diag_row(k)] = 1.0;
        }
        if k <= ni - 1 {
            entries.push((layout.upper_diag_slack(DiagSide::NorthEast, k), -1.0));
        } else {
            rhs[rows.avg_diag_row(k)] = 1.0;
        }
        builder.push_row(&mut entries)?;
    }
    for k in (-ni + 1)..=ni {
        entries.clear();
        entries.push((layout.avg_anti_slack(k), 2.0));
        if k - 1 >= -ni + 1 {
            entries.push((layout.upper_anti_slack(AntiSide::SouthEast, k - 1), -1.0));
        } else {
            rhs[rows.avg_anti_row(k)] = 1.0;
        }
        if k <= ni - 1 {
            entries.push((layout.upper_anti_slack(AntiSide::NorthWest, k), -1.0));
        } else {
            rhs[rows.avg_anti_row(k)] = 1.0;
        }
        builder.push_row(&mut entries)?;
    }

    let matrix = builder.finish()?;
    debug_assert_eq!(matrix.n_rows(), rows.num_rows_approx());
    if n <= 16 {
        assert!(matrix.has_full_row_rank(), "approx constraint matrix lost full row rank");
    }

    let slack_def = slack_def_rows(n, &layout, &rows);
    let mut slack_avg = vec![0u32; 8 * n - 4];
    let base = layout.num_triangles();
    for k in (-ni + 1)..ni {
        slack_avg[layout.upper_diag_slack(DiagSide::SouthWest, k) - base] =
            rows.avg_diag_row(k + 1) as u32;
        slack_avg[layout.upper_diag_slack(DiagSide::NorthEast, k) - base] =
            rows.avg_diag_row(k) as u32;
        slack_avg[layout.upper_anti_slack(AntiSide::SouthEast, k) - base] =
            rows.avg_anti_row(k + 1) as u32;
        slack_avg[layout.upper_anti_slack(AntiSide::NorthWest, k) - base] =
            rows.avg_anti_row(k) as u32;
    }

    Ok(ApproxUpperProblem {
        n,
        rows,
        matrix,
        rhs,
        slack_def_rows: slack_def,
        slack_avg_rows: slack_avg,
        layout,
    })
}

/// Row constants of the shared triangle kernel: triangle `(group, i, j)`
/// feeds diagonal definition row `c0 - j` and anti definition row `c1 - j`.
fn triangle_constants(n: usize, group: Group, i: usize) -> (usize, usize) {
    match group {
        Group::North => (i + 3 * n - 2, 8 * n - 5 - i),
        Group::East => (i + 3 * n - 2, 6 * n - 4 - i),
        Group::South => (i + n - 1, 6 * n - 4 - i),
        Group::West => (i + n - 1, 8 * n - 5 - i),
    }
}

/// Adds the triangle contributions of `A x` into rows `[0, 14n - 6)`.
fn triangles_apply(n: usize, x: &[f64], out: &mut [f64]) {
    let units: Vec<(usize, usize)> = (0..4 * n).map(|u| (u / n, u % n)).collect();
    let chunk = units.len().div_ceil(APPLY_CHUNKS);
    let q = 14 * n - 6;
    let partials: Vec<Vec<f64>> = units
        .par_chunks(chunk.max(1))
        .map(|unit_chunk| {
            let mut acc = vec![0.0; q];
            for &(g, i) in unit_chunk {
                let group = Group::ALL[g];
                let (c0, c1) = triangle_constants(n, group, i);
                let base = g * n * n + i * n;
                let row = &x[base..base + n];
                let mut total = 0.0;
                match group {
                    Group::North | Group::South => {
                        // Column term skipped at j = 0 (deleted combined row).
                        for (j, &v) in row.iter().enumerate() {
                            acc[c0 - j] += v;
                            acc[c1 - j] += v;
                            total += v;
                            if j >= 1 {
                                acc[10 * n - 5 + j] += v;
                            }
                        }
                        let row_row = if matches!(group, Group::North) {
                            8 * n - 4 + i
                        } else {
                            9 * n - 4 + i
                        };
                        acc[row_row] += total;
                    }
                    Group::East | Group::West => {
                        let col_base =
                            if matches!(group, Group::East) { 11 * n - 5 } else { 12 * n - 5 };
                        for (j, &v) in row.iter().enumerate() {
                            acc[c0 - j] += v;
                            acc[c1 - j] += v;
                            acc[col_base + j] += v;
                            total += v;
                        }
                        if i >= 1 {
                            acc[13 * n - 5 + (i - 1)] += total;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    for acc in &partials {
        for (o, a) in out[..q].iter_mut().zip(acc) {
            *o += a;
        }
    }
}

/// Triangle part of `A^T y` (rows beyond `14n - 6` never touch triangles).
fn triangles_apply_transpose(n: usize, y: &[f64], out_tri: &mut [f64]) {
    out_tri.par_chunks_mut(n).enumerate().for_each(|(u, dest)| {
        let (g, i) = (u / n, u % n);
        let group = Group::ALL[g];
        let (c0, c1) = triangle_constants(n, group, i);
        match group {
            Group::North | Group::South => {
                let row_row =
                    if matches!(group, Group::North) { 8 * n - 4 + i } else { 9 * n - 4 + i };
                let row_term = y[row_row];
                dest[0] = y[c0] + y[c1] + row_term;
                for (j, d) in dest.iter_mut().enumerate().skip(1) {
                    *d = y[c0 - j] + y[c1 - j] + row_term + y[10 * n - 5 + j];
                }
            }
            Group::East | Group::West => {
                let col_base = if matches!(group, Group::East) { 11 * n - 5 } else { 12 * n - 5 };
                let row_term = if i >= 1 { y[13 * n - 5 + (i - 1)] } else { 0.0 };
                for (j, d) in dest.iter_mut().enumerate() {
                    *d = y[c0 - j] + y[c1 - j] + row_term + y[col_base + j];
                }
            }
        }
    });
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidArgument(format!("vector length {got}, expected {want}")));
    }
    Ok(())
}

fn check_nonnegative(x: &[f64]) -> Result<()> {
    if let Some(i) = x.iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!("x[{i}] = {} is negative", x[i])));
    }
    Ok(())
}

fn check_positive(x: &[f64]) -> Result<()> {
    if let Some(i) = x.iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain(format!("x[{i}] = {} is not positive", x[i])));
    }
    Ok(())
}

impl UpperProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> &BoardLayout {
        &self.layout
    }

    /// `3 + L_0 + L_- + L_+` at a componentwise nonnegative point.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_len(x.len(), self.layout.num_vars())?;
        check_nonnegative(x)?;
        let n = self.n as f64;
        let tri = self.layout.num_triangles();
        let entropy = vecops::map_sum(&x[..tri], |_, v| if v == 0.0 { 0.0 } else { v * v.ln() });
        let mut pair_sum = 0.0;
        for term in &self.pair_terms {
            let u = term.u.map_or(1.0, |i| x[i as usize]);
            let v = term.v.map_or(1.0, |i| x[i as usize]);
            pair_sum += pair_integral(u, v)?;
        }
        Ok(3.0 + entropy / (4.0 * n * n) + pair_sum / n)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        Problem::gradient_into(self, x, &mut out)?;
        Ok(out)
    }

    /// Applies the block-diagonal inverse Hessian at `x` to `v`.
    pub fn hess_inv_apply(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len(v.len(), self.layout.num_vars())?;
        Ok(Problem::hessian_inverse(self, x)?.apply(v))
    }

    /// All-ones interior start. It violates the slack-definition rows (the
    /// infeasible-start method absorbs this) but satisfies every row and
    /// column constraint.
    pub fn initial_point(&self) -> Iterate {
        Iterate { x: vec![1.0; self.layout.num_vars()], nu: vec![0.0; self.rows.num_rows()] }
    }
}

impl Problem for UpperProblem {
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
        UpperProblem::objective(self, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(x.len(), self.layout.num_vars())?;
        check_len(out.len(), x.len())?;
        check_positive(x)?;
        let n = self.n as f64;
        let tri = self.layout.num_triangles();
        let scale = 1.0 / (4.0 * n * n);
        vecops::map_into(&x[..tri], &mut out[..tri], |v| scale * (v.ln() + 1.0));
        for o in out[tri..].iter_mut() {
            *o = 0.0;
        }
        for term in &self.pair_terms {
            let u = term.u.map_or(1.0, |i| x[i as usize]);
            let v = term.v.map_or(1.0, |i| x[i as usize]);
            let (gu, gv) = pair_integral_grad(u, v)?;
            if let Some(i) = term.u {
                out[i as usize] += gu / n;
            }
            if let Some(i) = term.v {
                out[i as usize] += gv / n;
            }
        }
        Ok(())
    }

    fn apply_constraints_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.layout.num_vars());
        assert_eq!(out.len(), self.rows.num_rows());
        out.fill(0.0);
        triangles_apply(self.n, x, out);
        let two_n = (2 * self.n) as f64;
        let base = self.layout.num_triangles();
        for (t, &row) in self.slack_def_rows.iter().enumerate() {
            out[row as usize] += two_n * x[base + t];
        }
    }

    fn apply_constraints_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows.num_rows());
        assert_eq!(out.len(), self.layout.num_vars());
        let tri = self.layout.num_triangles();
        let (tri_out, slack_out) = out.split_at_mut(tri);
        triangles_apply_transpose(self.n, y, tri_out);
        let two_n = (2 * self.n) as f64;
        for (t, s) in slack_out.iter_mut().enumerate() {
            *s = two_n * y[self.slack_def_rows[t] as usize];
        }
    }

    fn hessian_inverse(&self, x: &[f64]) -> Result<HessianInverse> {
        check_len(x.len(), self.layout.num_vars())?;
        check_positive(x)?;
        let n = self.n as f64;
        let tri = self.layout.num_triangles();
        let mut inv_diag = vec![0.0; x.len()];
        let scale = 4.0 * n * n;
        vecops::map_into(&x[..tri], &mut inv_diag[..tri], |v| scale * v);
        let mut pair_off = Vec::with_capacity(self.pair_terms.len());
        for term in &self.pair_terms {
            match (term.u, term.v) {
                (Some(ui), Some(vi)) => {
                    let (ui, vi) = (ui as usize, vi as usize);
                    debug_assert_eq!(vi, ui + 1, "pair block must be contiguous");
                    let h = pair_integral_hess(x[ui], x[vi])?;
                    let det = h.det();
                    if det <= 0.0 || h.h_uu <= 0.0 {
                        return Err(Error::HessianNotPositiveDefinite(format!(
                            "pair block at ({ui}, {vi}): det = {det:.3e}"
                        )));
                    }
                    inv_diag[ui] = n * h.h_vv / det;
                    inv_diag[vi] = n * h.h_uu / det;
                    pair_off.push((ui as u32, -n * h.h_uv / det));
                }
                (Some(ui), None) => {
                    let h = pair_integral_hess(x[ui as usize], 1.0)?;
                    if h.h_uu <= 0.0 {
                        return Err(Error::HessianNotPositiveDefinite(format!(
                            "boundary block at {ui}"
                        )));
                    }
                    inv_diag[ui as usize] = n / h.h_uu;
                }
                (None, Some(vi)) => {
                    let h = pair_integral_hess(1.0, x[vi as usize])?;
                    if h.h_vv <= 0.0 {
                        return Err(Error::HessianNotPositiveDefinite(format!(
                            "boundary block at {vi}"
                        )));
                    }
                    inv_diag[vi as usize] = n / h.h_vv;
                }
                (None, None) => unreachable!("pair term with no variables"),
            }
        }
        Ok(HessianInverse::with_pairs(inv_diag, pair_off))
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

impl ApproxUpperProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> &BoardLayout {
        &self.layout
    }

    /// `3 + L_0 + (1/n) sum g(d_k) + (1/n) sum g(a_k)`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_len(x.len(), self.layout.num_vars())?;
        check_nonnegative(x)?;
        let n = self.n as f64;
        let tri = self.layout.num_triangles();
        let avg_base = self.shared_vars();
        let entropy = vecops::map_sum(&x[..tri], |_, v| if v == 0.0 { 0.0 } else { v * v.ln() });
        let avg_entropy =
            vecops::map_sum(&x[avg_base..], |_, v| if v == 0.0 { 0.0 } else { v * v.ln() });
        Ok(3.0 + entropy / (4.0 * n * n) + avg_entropy / n)
    }

    /// All-ones interior start, mirroring the exact problem's.
    pub fn initial_point(&self) -> Iterate {
        Iterate {
            x: vec![1.0; self.layout.num_vars()],
            nu: vec![0.0; self.rows.num_rows_approx()],
        }
    }

    fn first_avg_row(&self) -> usize {
        14 * self.n - 6
    }

    /// Count of variables shared with the exact problem (everything except
    /// the averaged slacks).
    pub fn shared_vars(&self) -> usize {
        self.layout.num_triangles() + 8 * self.n - 4
    }
}

impl Problem for ApproxUpperProblem {
    fn board_size(&self) -> usize {
        self.n
    }

    fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    fn num_rows(&self) -> usize {
        self.rows.num_rows_approx()
    }

    fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn objective(&self, x: &[f64]) -> Result<f64> {
        ApproxUpperProblem::objective(self, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(x.len(), self.layout.num_vars())?;
        check_len(out.len(), x.len())?;
        check_positive(x)?;
        let n = self.n as f64;
        let tri = self.layout.num_triangles();
        let avg_base = self.shared_vars();
        let scale = 1.0 / (4.0 * n * n);
        vecops::map_into(&x[..tri], &mut out[..tri], |v| scale * (v.ln() + 1.0));
        // Original slacks are absent from the objective.
        for o in out[tri..avg_base].iter_mut() {
            *o = 0.0;
        }
        let inv_n = 1.0 / n;
        vecops::map_into(&x[avg_base..], &mut out[avg_base..], |v| inv_n * (v.ln() + 1.0));
        Ok(())
    }

    fn apply_constraints_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.layout.num_vars());
        assert_eq!(out.len(), self.rows.num_rows_approx());
        out.fill(0.0);
        triangles_apply(self.n, x, out);
        let two_n = (2 * self.n) as f64;
        let base = self.layout.num_triangles();
        for t in 0..self.slack_def_rows.len() {
            let v = x[base + t];
            out[self.slack_def_rows[t] as usize] += two_n * v;
            out[self.slack_avg_rows[t] as usize] -= v;
        }
        let avg_base = self.shared_vars();
        let first_avg = self.first_avg_row();
        for idx in 0..4 * self.n {
            out[first_avg + idx] += 2.0 * x[avg_base + idx];
        }
    }

    fn apply_constraints_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows.num_rows_approx());
        assert_eq!(out.len(), self.layout.num_vars());
        let tri = self.layout.num_triangles();
        let (tri_out, rest) = out.split_at_mut(tri);
        triangles_apply_transpose(self.n, y, tri_out);
        let (slack_out, avg_out) = rest.split_at_mut(8 * self.n - 4);
        let two_n = (2 * self.n) as f64;
        for (t, s) in slack_out.iter_mut().enumerate() {
            *s = two_n * y[self.slack_def_rows[t] as usize]
                - y[self.slack_avg_rows[t] as usize];
        }
        let first_avg = self.first_avg_row();
        for (idx, s) in avg_out.iter_mut().enumerate() {
            *s = 2.0 * y[first_avg + idx];
        }
    }

    /// The approximate objective has no curvature on the original slack
    /// coordinates, so a full inverse Hessian does not exist; the Newton
    /// step eliminates those blocks instead.
    fn hessian_inverse(&self, _x: &[f64]) -> Result<HessianInverse> {
        Err(Error::InvalidArgument(
            "approximate upper problem has a structurally singular Hessian; \
             its Newton step uses block elimination"
                .into(),
        ))
    }

    fn solve_newton_step(
        &self,
        x: &[f64],
        r_d: &[f64],
        r_p: &[f64],
        cfg: &NewtonConfig,
    ) -> Result<NewtonStep> {
        approx_newton_step(self, x, r_d, r_p, cfg)
    }
}

/// Inverse of the Hessian restricted to the curved coordinates (triangles
/// and averaged slacks); zero on the original slacks.
fn approx_partial_hessian_inverse(p: &ApproxUpperProblem, x: &[f64]) -> Result<Vec<f64>> {
    check_positive(x)?;
    let n = p.n as f64;
    let tri = p.layout.num_triangles();
    let avg_base = p.shared_vars();
    let mut hinv = vec![0.0; x.len()];
    let scale = 4.0 * n * n;
    vecops::map_into(&x[..tri], &mut hinv[..tri], |v| scale * v);
    vecops::map_into(&x[avg_base..], &mut hinv[avg_base..], |v| n * v);
    Ok(hinv)
}

/// Reduced Newton operator for the approximate problem.
///
/// Eliminating the original slacks (through their definition rows) and the
/// definition-row duals (through the zero-curvature stationarity rows)
/// leaves a symmetric positive definite system over the duals of the
/// remaining rows `u = (nu_rowcol, nu_avg)`:
///
/// ```text
/// Sigma u = E^T A H_P^{-1} A^T E u
/// ```
///
/// where `E` embeds `u` into the full dual space via
/// `nu_def(w) = u_avg(w) / 2n` and `H_P` is the curved part of the Hessian.
struct ApproxReducedOperator<'a> {
    problem: &'a ApproxUpperProblem,
    hinv: &'a [f64],
    nu_buf: Vec<f64>,
    y_buf: Vec<f64>,
    h_buf: Vec<f64>,
    z_buf: Vec<f64>,
}

impl<'a> ApproxReducedOperator<'a> {
    fn new(problem: &'a ApproxUpperProblem, hinv: &'a [f64]) -> Self {
        let p = problem.layout.num_vars();
        let q = problem.rows.num_rows_approx();
        ApproxReducedOperator {
            problem,
            hinv,
            nu_buf: vec![0.0; q],
            y_buf: vec![0.0; p],
            h_buf: vec![0.0; p],
            z_buf: vec![0.0; q],
        }
    }

    fn def_count(&self) -> usize {
        8 * self.problem.n - 4
    }

    /// Expands reduced duals into the full dual space (homogeneous part).
    fn embed(&mut self, u: &[f64]) {
        let off = self.def_count();
        let two_n = (2 * self.problem.n) as f64;
        self.nu_buf[..off].fill(0.0);
        self.nu_buf[off..].copy_from_slice(u);
        for t in 0..off {
            self.nu_buf[self.problem.slack_def_rows[t] as usize] =
                self.nu_buf[self.problem.slack_avg_rows[t] as usize] / two_n;
        }
    }

    /// Collapses full row values onto the reduced index set:
    /// `(E^T z)_o = z_o + sum_{w in avg row o} z_def(w) / 2n`.
    fn collapse(&self, z: &[f64], out: &mut [f64]) {
        let off = self.def_count();
        let two_n = (2 * self.problem.n) as f64;
        out.copy_from_slice(&z[off..]);
        for t in 0..off {
            out[self.problem.slack_avg_rows[t] as usize - off] +=
                z[self.problem.slack_def_rows[t] as usize] / two_n;
        }
    }
}

impl LinearOperator for ApproxReducedOperator<'_> {
    fn dim(&self) -> usize {
        self.problem.rows.num_rows_approx() - self.def_count()
    }

    fn apply(&mut self, u: &[f64], out: &mut [f64]) {
        self.embed(u);
        let nu = std::mem::take(&mut self.nu_buf);
        self.problem.apply_constraints_transpose_into(&nu, &mut self.y_buf);
        self.nu_buf = nu;
        vecops::mul_into(self.hinv, &self.y_buf, &mut self.h_buf);
        let h = std::mem::take(&mut self.h_buf);
        self.problem.apply_constraints_into(&h, &mut self.z_buf);
        self.h_buf = h;
        self.collapse(&self.z_buf, out);
    }
}

/// Newton step for the approximate problem via exact block elimination.
///
/// The eliminations (with `w` the original slacks, `def` their definition
/// rows, `avg` the averaging rows):
///
/// ```text
/// d_nu_def(w) = (d_nu_avg(w) - r_d[w]) / 2n         (w stationarity)
/// d_x_P      = -H_P^{-1} (r_d + A^T d_nu)_P         (curved stationarity)
/// d_w        = (-r_p[def(w)] - (A d_x)_def(w)) / 2n (definition rows)
/// ```
///
/// reduce the KKT system to `Sigma u = r_p|_o + (A dx_c)|_o` over the
/// remaining rows `o`, with `Sigma` from [`ApproxReducedOperator`]. The
/// result is the exact Newton direction of the full problem.
fn approx_newton_step(
    problem: &ApproxUpperProblem,
    x: &[f64],
    r_d: &[f64],
    r_p: &[f64],
    cfg: &NewtonConfig,
) -> Result<NewtonStep> {
    let tri = problem.layout.num_triangles();
    let def_count = 8 * problem.n - 4;
    let q = problem.rows.num_rows_approx();
    let reduced_dim = q - def_count;
    let two_n = (2 * problem.n) as f64;

    let hinv = approx_partial_hessian_inverse(problem, x)?;

    // Constant part of the eliminated variables.
    let mut nu_c = vec![0.0; q];
    for t in 0..def_count {
        nu_c[problem.slack_def_rows[t] as usize] = -r_d[tri + t] / two_n;
    }
    let mut y = vec![0.0; problem.layout.num_vars()];
    problem.apply_constraints_transpose_into(&nu_c, &mut y);
    let mut xc = vec![0.0; problem.layout.num_vars()];
    for i in 0..xc.len() {
        xc[i] = -hinv[i] * (r_d[i] + y[i]);
    }
    let mut z = vec![0.0; q];
    problem.apply_constraints_into(&xc, &mut z);
    for t in 0..def_count {
        let row = problem.slack_def_rows[t] as usize;
        xc[tri + t] = (-r_p[row] - z[row]) / two_n;
    }
    problem.apply_constraints_into(&xc, &mut z);

    let mut rhs = vec![0.0; reduced_dim];
    for i in 0..reduced_dim {
        rhs[i] = r_p[def_count + i] + z[def_count + i];
    }

    let rhs_norm = vecops::norm2(&rhs);
    let mut op = ApproxReducedOperator::new(problem, &hinv);
    let outcome = minres(&mut op, &rhs, cfg.minres_rel_tol, cfg.minres_cap(reduced_dim))?;

    // Reassemble the full direction.
    let mut dnu = vec![0.0; q];
    dnu[def_count..].copy_from_slice(&outcome.solution);
    for t in 0..def_count {
        dnu[problem.slack_def_rows[t] as usize] =
            (dnu[problem.slack_avg_rows[t] as usize] - r_d[tri + t]) / two_n;
    }
    problem.apply_constraints_transpose_into(&dnu, &mut y);
    let mut dx = vec![0.0; problem.layout.num_vars()];
    for i in 0..dx.len() {
        dx[i] = -hinv[i] * (r_d[i] + y[i]);
    }
    problem.apply_constraints_into(&dx, &mut z);
    for t in 0..def_count {
        let row = problem.slack_def_rows[t] as usize;
        dx[tri + t] = (-r_p[row] - z[row]) / two_n;
    }

    Ok(NewtonStep {
        dx,
        dnu,
        minres_iterations: outcome.iterations,
        minres_relative_residual: outcome.relative_residual,
        minres_residual_norm: outcome.relative_residual * rhs_norm,
        minres_converged: outcome.converged,
    })
}

/// Maps a solution of the approximate problem onto a starting iterate for
/// the exact problem: shared coordinates (triangles and original slacks)
/// and shared-row duals are copied, the averaged slacks and averaging-row
/// duals are dropped.
pub fn lift_approx_solution(
    exact: &UpperProblem,
    approx: &ApproxUpperProblem,
    x_approx: &[f64],
    nu_approx: &[f64],
) -> Result<Iterate> {
    if exact.n != approx.n {
        return Err(Error::InvalidArgument(format!(
            "board sizes differ: exact {} vs approximate {}",
            exact.n, approx.n
        )));
    }
    check_len(x_approx.len(), approx.layout.num_vars())?;
    check_len(nu_approx.len(), approx.rows.num_rows_approx())?;
    let shared = approx.shared_vars();
    let x = x_approx[..shared].to_vec();
    if let Some(i) = x.iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain(format!("shared coordinate {i} = {} is not positive", x[i])));
    }
    let nu = nu_approx[..exact.rows.num_rows()].to_vec();
    Ok(Iterate { x, nu })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formulas() {
        let p = build_upper(2).unwrap();
        assert_eq!(Problem::num_vars(&p), 28);
        assert_eq!(Problem::num_rows(&p), 22);
        let a = build_approx_upper(2).unwrap();
        assert_eq!(Problem::num_vars(&a), 36);
        assert_eq!(Problem::num_rows(&a), 30);
        // Headline instance dimensions from the layout alone.
        let layout = BoardLayout::new(1024, LayoutKind::Upper).unwrap();
        assert_eq!(layout.num_vars(), 4_202_492);
        assert_eq!(UpperRowMap { n: 1024 }.num_rows(), 14_330);
        let approx_layout = BoardLayout::new(1024, LayoutKind::ApproxUpper).unwrap();
        assert_eq!(approx_layout.num_vars(), 4_206_588);
        assert_eq!(UpperRowMap { n: 1024 }.num_rows_approx(), 18_426);
        assert!(build_upper(0).is_err());
        assert!(build_approx_upper(0).is_err());
    }

    #[test]
    fn matrix_matches_structured_products() {
        for n in [1usize, 2, 3, 5] {
            let upper = build_upper(n).unwrap();
            let approx = build_approx_upper(n).unwrap();
            check_products(&upper, n);
            check_products(&approx, n);
        }
    }

    fn check_products(p: &dyn Problem, n: usize) {
        let pv = p.num_vars();
        let q = p.num_rows();
        let x: Vec<f64> = (0..pv).map(|i| ((i * 2654435761) % 97) as f64 / 97.0 + 0.1).collect();
        let via_matrix = p.matrix().spmv(&x).unwrap();
        let mut via_kernel = vec![0.0; q];
        p.apply_constraints_into(&x, &mut via_kernel);
        for (r, (a, b)) in via_matrix.iter().zip(&via_kernel).enumerate() {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "n={n} row={r}: {a} vs {b}");
        }
        let y: Vec<f64> = (0..q).map(|i| ((i * 40503) % 89) as f64 / 89.0 - 0.4).collect();
        let via_matrix_t = p.matrix().spmv_t(&y).unwrap();
        let mut via_kernel_t = vec![0.0; pv];
        p.apply_constraints_transpose_into(&y, &mut via_kernel_t);
        for (c, (a, b)) in via_matrix_t.iter().zip(&via_kernel_t).enumerate() {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "n={n} col={c}: {a} vs {b}");
        }
    }

    #[test]
    fn objective_at_all_ones_is_three() {
        for n in [1usize, 2, 5] {
            let upper = build_upper(n).unwrap();
            let x = vec![1.0; Problem::num_vars(&upper)];
            assert!((UpperProblem::objective(&upper, &x).unwrap() - 3.0).abs() < 1e-14, "n={n}");
            let approx = build_approx_upper(n).unwrap();
            let x = vec![1.0; Problem::num_vars(&approx)];
            assert!(
                (ApproxUpperProblem::objective(&approx, &x).unwrap() - 3.0).abs() < 1e-14,
                "n={n}"
            );
        }
    }

    #[test]
    fn pair_terms_cover_each_slack_once() {
        let n = 2;
        let p = build_upper(n).unwrap();
        // 2n terms per family; at n = 2 the diagonal terms are indexed by
        // k in {-1, 0, 1, 2}.
        assert_eq!(p.pair_terms.len(), 4 * n);
        let mut seen = vec![0usize; Problem::num_vars(&p)];
        let mut boundary = 0;
        for term in &p.pair_terms {
            for idx in [term.u, term.v].into_iter().flatten() {
                seen[idx as usize] += 1;
            }
            boundary += usize::from(term.u.is_none()) + usize::from(term.v.is_none());
        }
        assert_eq!(boundary, 4, "two boundary constants per family");
        let tri = p.layout.num_triangles();
        for (i, &count) in seen.iter().enumerate() {
            if i < tri {
                assert_eq!(count, 0);
            } else {
                assert_eq!(count, 1, "slack {i} appears in {count} terms");
            }
        }
    }

    #[test]
    fn scaled_slack_rows_recover_unit_form() {
        // Dividing a definition row by 2n recovers
        // d^{SW}_k = 1 - D_k(S+W)/2n: triangle coefficients 1/2n, slack
        // coefficient 1, right-hand side 1.
        let n = 4;
        let p = build_upper(n).unwrap();
        let two_n = (2 * n) as f64;
        for k in [-2i64, 0, 3] {
            let row_idx = p.rows.def_diag_row(DiagSide::SouthWest, k);
            let slack_col = p.layout.upper_diag_slack(DiagSide::SouthWest, k);
            assert_eq!(p.rhs[row_idx] / two_n, 1.0);
            for (c, v) in p.matrix.row(row_idx) {
                if c == slack_col {
                    assert_eq!(v / two_n, 1.0);
                } else {
                    assert_eq!(v, 1.0);
                    assert!(c < p.layout.num_triangles());
                }
            }
        }
    }

    #[test]
    fn boundary_slack_point_satisfies_definition_rows() {
        // Triangles at 1 with d^{SW}_k = |k|/n (and symmetrically for the
        // other families) satisfies every slack-definition row exactly;
        // it touches the domain boundary so it is only an algebraic probe.
        let n = 3;
        let p = build_upper(n).unwrap();
        let ni = n as i64;
        let mut x = vec![1.0; Problem::num_vars(&p)];
        for k in (-ni + 1)..ni {
            let val = k.abs() as f64 / n as f64;
            x[p.layout.upper_diag_slack(DiagSide::SouthWest, k)] = val;
            x[p.layout.upper_diag_slack(DiagSide::NorthEast, k)] = val;
            x[p.layout.upper_anti_slack(AntiSide::SouthEast, k)] = val;
            x[p.layout.upper_anti_slack(AntiSide::NorthWest, k)] = val;
        }
        let ax = p.matrix.spmv(&x).unwrap();
        for t in 0..(8 * n - 4) {
            let row = p.slack_def_rows[t] as usize;
            assert!((ax[row] - p.rhs[row]).abs() < 1e-12, "slack row {row}");
        }
    }

    #[test]
    fn initial_point_residual_structure() {
        // At the all-ones start the slack row for d^{SW}_k has residual
        // 2(n - |k|); row/column rows are satisfied exactly.
        let n = 5;
        let p = build_upper(n).unwrap();
        let init = p.initial_point();
        let ax = p.matrix.spmv(&init.x).unwrap();
        let ni = n as i64;
        for k in (-ni + 1)..ni {
            let row = p.rows.def_diag_row(DiagSide::SouthWest, k);
            let expected = 2.0 * (n as f64 - k.abs() as f64);
            assert!((ax[row] - p.rhs[row] - expected).abs() < 1e-12, "k={k}");
        }
        for i in 0..n {
            let row = p.rows.n_row(i);
            assert!((ax[row] - p.rhs[row]).abs() < 1e-12);
        }
        for j in 1..n {
            let row = p.rows.ns_col_row(j);
            assert!((ax[row] - p.rhs[row]).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_inverse_inverts_blocks() {
        let n = 3;
        let p = build_upper(n).unwrap();
        let pv = Problem::num_vars(&p);
        let x: Vec<f64> = (0..pv).map(|i| 0.4 + 0.07 * ((i % 11) as f64)).collect();
        let hinv = Problem::hessian_inverse(&p, &x).unwrap();
        let v: Vec<f64> = (0..pv).map(|i| ((i as f64) * 0.7).sin()).collect();
        let hv = hinv.apply(&v);
        // Apply the forward Hessian block by block and compare with v.
        let nf = n as f64;
        let tri = p.layout.num_triangles();
        let mut forward = vec![0.0; pv];
        for i in 0..tri {
            forward[i] = hv[i] / (4.0 * nf * nf * x[i]);
        }
        for term in &p.pair_terms {
            match (term.u, term.v) {
                (Some(ui), Some(vi)) => {
                    let (ui, vi) = (ui as usize, vi as usize);
                    let h = pair_integral_hess(x[ui], x[vi]).unwrap();
                    forward[ui] = (h.h_uu * hv[ui] + h.h_uv * hv[vi]) / nf;
                    forward[vi] = (h.h_uv * hv[ui] + h.h_vv * hv[vi]) / nf;
                }
                (Some(ui), None) => {
                    let h = pair_integral_hess(x[ui as usize], 1.0).unwrap();
                    forward[ui as usize] = h.h_uu * hv[ui as usize] / nf;
                }
                (None, Some(vi)) => {
                    let h = pair_integral_hess(1.0, x[vi as usize]).unwrap();
                    forward[vi as usize] = h.h_vv * hv[vi as usize] / nf;
                }
                (None, None) => unreachable!(),
            }
        }
        for i in 0..pv {
            assert!(
                (forward[i] - v[i]).abs() <= 1e-10 * (1.0 + v[i].abs()),
                "coordinate {i}: {} vs {}",
                forward[i],
                v[i]
            );
        }
    }

    #[test]
    fn lift_preserves_feasibility_and_prefix() {
        let n = 4;
        let exact = build_upper(n).unwrap();
        let approx = build_approx_upper(n).unwrap();
        let ni = n as i64;
        // An interior point with consistent averaged slacks: original
        // slacks off their defining values (so shared rows have a defect),
        // averaged slacks at the pair midpoints (so averaging rows hold).
        let mut x = vec![1.0; Problem::num_vars(&approx)];
        for k in (-ni + 1)..ni {
            let val = k.abs() as f64 / n as f64 + 0.125;
            x[approx.layout.upper_diag_slack(DiagSide::SouthWest, k)] = val;
            x[approx.layout.upper_diag_slack(DiagSide::NorthEast, k)] = val;
            x[approx.layout.upper_anti_slack(AntiSide::SouthEast, k)] = val;
            x[approx.layout.upper_anti_slack(AntiSide::NorthWest, k)] = val;
        }
        for k in (-ni + 1)..=ni {
            let u = if k - 1 >= -ni + 1 {
                x[approx.layout.upper_diag_slack(DiagSide::SouthWest, k - 1)]
            } else {
                1.0
            };
            let v = if k <= ni - 1 {
                x[approx.layout.upper_diag_slack(DiagSide::NorthEast, k)]
            } else {
                1.0
            };
            x[approx.layout.avg_diag_slack(k)] = 0.5 * (u + v);
            let u = if k - 1 >= -ni + 1 {
                x[approx.layout.upper_anti_slack(AntiSide::SouthEast, k - 1)]
            } else {
                1.0
            };
            let v = if k <= ni - 1 {
                x[approx.layout.upper_anti_slack(AntiSide::NorthWest, k)]
            } else {
                1.0
            };
            x[approx.layout.avg_anti_slack(k)] = 0.5 * (u + v);
        }
        let nu: Vec<f64> = (0..Problem::num_rows(&approx)).map(|i| i as f64 * 0.1).collect();
        let lifted = lift_approx_solution(&exact, &approx, &x, &nu).unwrap();
        assert_eq!(lifted.x.len(), Problem::num_vars(&exact));
        assert_eq!(lifted.nu.len(), Problem::num_rows(&exact));
        assert_eq!(&lifted.x[..], &x[..approx.shared_vars()]);
        // Shared-row values carry over exactly.
        let r_exact = exact.matrix.spmv(&lifted.x).unwrap();
        let r_approx = approx.matrix.spmv(&x).unwrap();
        for row in 0..Problem::num_rows(&exact) {
            assert!((r_exact[row] - r_approx[row]).abs() < 1e-12);
            assert_eq!(exact.rhs[row], approx.rhs[row]);
        }
        // Averaging rows are satisfied by the midpoint fill-in above.
        for row in Problem::num_rows(&exact)..Problem::num_rows(&approx) {
            assert!((r_approx[row] - approx.rhs[row]).abs() < 1e-12, "avg row {row}");
        }
    }

    #[test]
    fn column_degree_bounds() {
        let p = build_upper(5).unwrap();
        let deg = p.matrix.column_degrees();
        let tri = p.layout.num_triangles();
        for (c, &d) in deg.iter().enumerate() {
            if c < tri {
                assert!(d <= 4, "triangle column {c} has degree {d}");
            } else {
                assert_eq!(d, 1, "slack column {c}");
            }
        }
        let row_max = (0..Problem::num_rows(&p)).map(|r| p.matrix.row(r).count()).max().unwrap();
        assert!(row_max <= 2 * 5 + 1);
    }
}
