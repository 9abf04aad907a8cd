//! Property tests for the sparse kernels and board operators.

use proptest::prelude::*;
use queens_bounds::board::{antidiag_sum, diag_sum};
use queens_bounds::sparse::{SparseMatrix, SparseMatrixBuilder};

/// Random wide matrix with small integer entries.
fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
    (2usize..8, 1usize..7).prop_flat_map(|(n_cols, n_rows_raw)| {
        let n_rows = n_rows_raw.min(n_cols);
        proptest::collection::vec(
            proptest::collection::vec((0..n_cols, 1i32..5), 0..n_cols),
            n_rows..=n_rows,
        )
        .prop_map(move |rows| {
            let mut builder = SparseMatrixBuilder::new(n_cols);
            for row in rows {
                let mut entries: Vec<(usize, f64)> = Vec::new();
                for (c, v) in row {
                    if !entries.iter().any(|&(ec, _)| ec == c) {
                        entries.push((c, v as f64));
                    }
                }
                builder.push_row(&mut entries).unwrap();
            }
            builder.finish().unwrap()
        })
    })
}

proptest! {
    #[test]
    fn spmv_adjointness(
        a in arb_matrix(),
        seed in proptest::array::uniform2(-5.0..5.0f64),
    ) {
        let x: Vec<f64> = (0..a.n_cols())
            .map(|i| seed[0] + (i as f64 * 0.7).sin())
            .collect();
        let y: Vec<f64> = (0..a.n_rows())
            .map(|i| seed[1] + (i as f64 * 1.3).cos())
            .collect();
        let ax = a.spmv(&x).unwrap();
        let aty = a.spmv_t(&y).unwrap();
        let lhs: f64 = ax.iter().zip(&y).map(|(p, q)| p * q).sum();
        let rhs: f64 = x.iter().zip(&aty).map(|(p, q)| p * q).sum();
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (x_norm * y_norm + 1.0));
    }

    #[test]
    fn diag_sums_partition_the_matrix(entries in proptest::collection::vec(-3.0..3.0f64, 16)) {
        let n = 4usize;
        let total: f64 = entries.iter().sum();
        let mut diag_total = 0.0;
        let mut anti_total = 0.0;
        for k in -(n as i64)..=(n as i64) {
            diag_total += diag_sum(&entries, n, k).unwrap();
            anti_total += antidiag_sum(&entries, n, k).unwrap();
        }
        prop_assert!((diag_total - total).abs() <= 1e-12);
        prop_assert!((anti_total - total).abs() <= 1e-12);
    }
}

#[test]
fn spmv_matches_dense_materialization() {
    // n = 4 board-sized sanity check against a dense product.
    let p = queens_bounds::build_lower(4).unwrap();
    let a = queens_bounds::Problem::matrix(&p);
    let pv = a.n_cols();
    let x: Vec<f64> = (0..pv).map(|i| ((i * 31 % 17) as f64) / 17.0 - 0.3).collect();

    let mut dense = vec![0.0; a.n_rows() * a.n_cols()];
    for r in 0..a.n_rows() {
        for (c, v) in a.row(r) {
            dense[r * a.n_cols() + c] = v;
        }
    }
    let expected: Vec<f64> = (0..a.n_rows())
        .map(|r| (0..pv).map(|c| dense[r * pv + c] * x[c]).sum())
        .collect();
    let got = a.spmv(&x).unwrap();
    for (e, g) in expected.iter().zip(&got) {
        assert!((e - g).abs() <= 1e-12);
    }
}
