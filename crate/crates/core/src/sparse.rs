//! Compressed sparse row storage for the constraint matrices.
//!
//! This is deliberately not a general sparse-algebra toolkit: it stores a
//! wide, full-rank constraint matrix and provides the two products the
//! solver needs (`A x` and `A^T y`), plus a Matrix Market dump for
//! cross-checking against external tools. All stored values are small
//! integers by construction (1 and 2n in the main problems), which the
//! builder asserts; they are kept as doubles to avoid mixed-type products
//! in the hot loops.

use crate::error::{Error, Result};
use std::io::{self, Write};

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

/// Row-by-row builder. Rows are appended in order; entries within a row are
/// sorted by column and checked for duplicates.
pub struct SparseMatrixBuilder {
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrixBuilder {
    pub fn new(n_cols: usize) -> Self {
        SparseMatrixBuilder { n_cols, row_ptr: vec![0], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Appends one row given as (column, value) pairs in any order.
    pub fn push_row(&mut self, entries: &mut Vec<(usize, f64)>) -> Result<()> {
        entries.sort_unstable_by_key(|&(c, _)| c);
        for window in entries.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate column {} in row {}",
                    window[0].0,
                    self.row_ptr.len() - 1
                )));
            }
        }
        for &(c, v) in entries.iter() {
            if c >= self.n_cols {
                return Err(Error::InvalidArgument(format!(
                    "column {c} out of range (matrix has {} columns)",
                    self.n_cols
                )));
            }
            if v == 0.0 || !v.is_finite() || v.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "value {v} at ({}, {c}) is not a nonzero integer",
                    self.row_ptr.len() - 1
                )));
            }
            self.col_idx.push(c as u32);
            self.values.push(v);
        }
        self.row_ptr.push(self.col_idx.len());
        Ok(())
    }

    pub fn finish(self) -> Result<SparseMatrix> {
        let n_rows = self.row_ptr.len() - 1;
        if n_rows > self.n_cols {
            return Err(Error::InvalidArgument(format!(
                "constraint matrix must be wide, got {n_rows} x {}",
                self.n_cols
            )));
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols: self.n_cols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        })
    }
}

impl SparseMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as (column, value) pairs, sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::InvalidArgument(format!(
                "spmv: x has length {}, expected {}",
                x.len(),
                self.n_cols
            )));
        }
        let mut out = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut out);
        Ok(out)
    }

    pub fn spmv_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(out.len(), self.n_rows);
        for r in 0..self.n_rows {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            let mut acc = 0.0;
            for (&c, &v) in self.col_idx[range.clone()].iter().zip(&self.values[range]) {
                acc += v * x[c as usize];
            }
            out[r] = acc;
        }
    }

    /// `A^T y`.
    pub fn spmv_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n_rows {
            return Err(Error::InvalidArgument(format!(
                "spmv_t: y has length {}, expected {}",
                y.len(),
                self.n_rows
            )));
        }
        let mut out = vec![0.0; self.n_cols];
        self.spmv_t_into(y, &mut out);
        Ok(out)
    }

    pub fn spmv_t_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.n_rows);
        assert_eq!(out.len(), self.n_cols);
        out.fill(0.0);
        for r in 0..self.n_rows {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for (&c, &v) in self.col_idx[range.clone()].iter().zip(&self.values[range]) {
                out[c as usize] += v * yr;
            }
        }
    }

    /// Number of stored entries in each column.
    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_cols];
        for &c in &self.col_idx {
            deg[c as usize] += 1;
        }
        deg
    }

    /// Checks `rank(A) = n_rows` by attempting a Cholesky factorization of
    /// the Gram matrix `A A^T`. Intended for small instances; cost is
    /// quadratic in the row count.
    pub fn has_full_row_rank(&self) -> bool {
        let q = self.n_rows;
        let mut gram = vec![0.0; q * q];
        let mut dense_row = vec![0.0; self.n_cols];
        for i in 0..q {
            for (c, v) in self.row(i) {
                dense_row[c] = v;
            }
            for j in i..q {
                let mut acc = 0.0;
                for (c, v) in self.row(j) {
                    acc += v * dense_row[c];
                }
                gram[i * q + j] = acc;
                gram[j * q + i] = acc;
            }
            for (c, _) in self.row(i) {
                dense_row[c] = 0.0;
            }
        }
        let max_diag = (0..q).map(|i| gram[i * q + i]).fold(0.0, f64::max);
        let tol = 1e-10 * max_diag.max(1.0);
        // In-place Cholesky; a nonpositive pivot signals rank deficiency.
        for k in 0..q {
            let mut pivot = gram[k * q + k];
            for t in 0..k {
                pivot -= gram[k * q + t] * gram[k * q + t];
            }
            if pivot <= tol {
                return false;
            }
            let pivot = pivot.sqrt();
            gram[k * q + k] = pivot;
            for i in (k + 1)..q {
                let mut acc = gram[i * q + k];
                for t in 0..k {
                    acc -= gram[i * q + t] * gram[k * q + t];
                }
                gram[i * q + k] = acc / pivot;
            }
        }
        true
    }

    /// Writes the matrix in Matrix Market coordinate format with exact
    /// integer values (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate integer general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {}", r + 1, c + 1, v as i64)?;
            }
        }
        Ok(())
    }
}

/// Writes a dense vector in Matrix Market array format, with enough digits
/// to reproduce each double exactly.
pub fn write_vector_market<W: Write>(b: &[f64], w: &mut W) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", b.len())?;
    for &v in b {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseMatrix {
        // [1 0 2 0]
        // [0 3 0 0]
        let mut b = SparseMatrixBuilder::new(4);
        b.push_row(&mut vec![(2, 2.0), (0, 1.0)]).unwrap();
        b.push_row(&mut vec![(1, 3.0)]).unwrap();
        b.finish().unwrap()
    }

    #[test]
    fn products_match_by_hand() {
        let a = small();
        assert_eq!(a.spmv(&[1.0, 1.0, 1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert_eq!(a.spmv_t(&[1.0, 2.0]).unwrap(), vec![1.0, 6.0, 2.0, 0.0]);
        assert_eq!(a.spmv(&[0.0; 4]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn spmv_t_of_unit_vector_is_a_row() {
        let a = small();
        let row0 = a.spmv_t(&[1.0, 0.0]).unwrap();
        assert_eq!(row0, vec![1.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = small();
        assert!(a.spmv(&[1.0; 3]).is_err());
        assert!(a.spmv_t(&[1.0; 4]).is_err());
    }

    #[test]
    fn builder_rejects_bad_entries() {
        let mut b = SparseMatrixBuilder::new(4);
        assert!(b.push_row(&mut vec![(0, 1.0), (0, 2.0)]).is_err());
        let mut b = SparseMatrixBuilder::new(4);
        assert!(b.push_row(&mut vec![(9, 1.0)]).is_err());
        let mut b = SparseMatrixBuilder::new(4);
        assert!(b.push_row(&mut vec![(0, 0.5)]).is_err());
        let mut b = SparseMatrixBuilder::new(4);
        assert!(b.push_row(&mut vec![(0, 0.0)]).is_err());
    }

    #[test]
    fn tall_matrices_are_rejected() {
        let mut b = SparseMatrixBuilder::new(1);
        b.push_row(&mut vec![(0, 1.0)]).unwrap();
        b.push_row(&mut vec![(0, 1.0)]).unwrap();
        assert!(b.finish().is_err());
    }

    #[test]
    fn rank_check_detects_dependent_rows() {
        let mut b = SparseMatrixBuilder::new(3);
        b.push_row(&mut vec![(0, 1.0), (1, 1.0)]).unwrap();
        b.push_row(&mut vec![(1, 1.0), (2, 1.0)]).unwrap();
        assert!(b.finish().unwrap().has_full_row_rank());

        let mut b = SparseMatrixBuilder::new(3);
        b.push_row(&mut vec![(0, 1.0), (1, 1.0)]).unwrap();
        b.push_row(&mut vec![(0, 2.0), (1, 2.0)]).unwrap();
        assert!(!b.finish().unwrap().has_full_row_rank());
    }

    #[test]
    fn matrix_market_dump() {
        let a = small();
        let mut out = Vec::new();
        a.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate integer general\n2 4 3\n1 1 1\n1 3 2\n2 2 3\n"
        );
    }
}
