//! Chessboard variable layout and diagonal summation operators.
//!
//! Every square of an n x n board is split into four right triangles, giving
//! four n x n matrices of triangle variables `N, E, S, W` (indexed from 0).
//! Both problems flatten these, followed by problem-specific slack
//! variables, into a single primal vector; [`BoardLayout`] owns that
//! bijection. The diagonal operators fix the indexing conventions used
//! everywhere else:
//!
//! * `diag_sum(Z, k)` sums entries with `i - j = k`, so `k = 0` is the
//!   trace and `k = 1` sums `Z[i, i-1]`.
//! * `antidiag_sum(Z, k)` sums entries with `i + j = n - 1 - k`, so `k = 0`
//!   is the main anti-diagonal and `k = -1` sums entries with `i + j = n`.
//!
//! Both vanish identically at `k = ±n`.

use crate::error::{Error, Result};

/// One of the four triangle families on the board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    North,
    East,
    South,
    West,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::North, Group::East, Group::South, Group::West];

    fn offset(self) -> usize {
        match self {
            Group::North => 0,
            Group::East => 1,
            Group::South => 2,
            Group::West => 3,
        }
    }
}

/// Which slack family a diagonal-sum slack belongs to in the upper problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagSide {
    /// Diagonal sums of `S + W`.
    SouthWest,
    /// Diagonal sums of `N + E`.
    NorthEast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntiSide {
    /// Anti-diagonal sums of `S + E`.
    SouthEast,
    /// Anti-diagonal sums of `N + W`.
    NorthWest,
}

/// Slack ordering used by a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    /// `d_{-n} .. d_{n-1}` then `a_{-n} .. a_{n-1}`.
    Lower,
    /// Interleaved pairs per family so Hessian blocks are contiguous.
    Upper,
    /// [`LayoutKind::Upper`] followed by the averaged slacks
    /// `d_{-n+1} .. d_n`, `a_{-n+1} .. a_n`.
    ApproxUpper,
}

/// Identity of a single primal coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarId {
    Triangle(Group, usize, usize),
    /// Lower problem `d_k`.
    LowerDiag(i64),
    /// Lower problem `a_k`.
    LowerAnti(i64),
    /// Upper problem `d^{SW}_k` / `d^{NE}_k`.
    UpperDiag(DiagSide, i64),
    /// Upper problem `a^{SE}_k` / `a^{NW}_k`.
    UpperAnti(AntiSide, i64),
    /// Approximate problem averaged slack `d_k`.
    AvgDiag(i64),
    /// Approximate problem averaged slack `a_k`.
    AvgAnti(i64),
}

/// Flat index assignment for every variable of a problem instance.
///
/// The four triangle matrices come first (`N`, `E`, `S`, `W`, each row
/// major), followed by the slacks in the order fixed by [`LayoutKind`]. The
/// mapping is a bijection onto `0..num_vars()`.
#[derive(Debug, Clone)]
pub struct BoardLayout {
    n: usize,
    kind: LayoutKind,
}

impl BoardLayout {
    pub fn new(n: usize, kind: LayoutKind) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument(format!("board size {n} must be >= 1")));
        }
        Ok(BoardLayout { n, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn num_triangles(&self) -> usize {
        4 * self.n * self.n
    }

    pub fn num_vars(&self) -> usize {
        let n = self.n;
        match self.kind {
            LayoutKind::Lower => 4 * n * n + 4 * n,
            LayoutKind::Upper => 4 * n * n + 8 * n - 4,
            LayoutKind::ApproxUpper => 4 * n * n + 12 * n - 4,
        }
    }

    pub fn triangle(&self, group: Group, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        group.offset() * self.n * self.n + i * self.n + j
    }

    /// Lower problem `d_k`, `k` in `[-n, n-1]`.
    pub fn lower_diag_slack(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(matches!(self.kind, LayoutKind::Lower));
        debug_assert!((-n..n).contains(&k));
        self.num_triangles() + (k + n) as usize
    }

    /// Lower problem `a_k`, `k` in `[-n, n-1]`.
    pub fn lower_anti_slack(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(matches!(self.kind, LayoutKind::Lower));
        debug_assert!((-n..n).contains(&k));
        self.num_triangles() + 2 * self.n + (k + n) as usize
    }

    /// Upper problem diagonal slack, `k` in `[-n+1, n-1]`.
    ///
    /// The two sides interleave as `NE_{-n+1}, SW_{-n+1}, NE_{-n+2}, ...,
    /// NE_{n-1}, SW_{n-1}` so that each objective pair `(SW_{k-1}, NE_k)`
    /// occupies adjacent coordinates.
    pub fn upper_diag_slack(&self, side: DiagSide, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(!matches!(self.kind, LayoutKind::Lower));
        debug_assert!((-n + 1..n).contains(&k));
        let pos = 2 * (k + n - 1) as usize;
        self.num_triangles()
            + match side {
                DiagSide::NorthEast => pos,
                DiagSide::SouthWest => pos + 1,
            }
    }

    /// Upper problem anti-diagonal slack, `k` in `[-n+1, n-1]`; interleaved
    /// as `NW_{-n+1}, SE_{-n+1}, ...` mirroring [`Self::upper_diag_slack`].
    pub fn upper_anti_slack(&self, side: AntiSide, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(!matches!(self.kind, LayoutKind::Lower));
        debug_assert!((-n + 1..n).contains(&k));
        let pos = 2 * (k + n - 1) as usize;
        self.num_triangles() + (4 * self.n - 2)
            + match side {
                AntiSide::NorthWest => pos,
                AntiSide::SouthEast => pos + 1,
            }
    }

    /// Averaged slack `d_k` of the approximate problem, `k` in `[-n+1, n]`.
    pub fn avg_diag_slack(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(matches!(self.kind, LayoutKind::ApproxUpper));
        debug_assert!((-n + 1..=n).contains(&k));
        self.num_triangles() + (8 * self.n - 4) + (k + n - 1) as usize
    }

    /// Averaged slack `a_k` of the approximate problem, `k` in `[-n+1, n]`.
    pub fn avg_anti_slack(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(matches!(self.kind, LayoutKind::ApproxUpper));
        debug_assert!((-n + 1..=n).contains(&k));
        self.num_triangles() + (8 * self.n - 4) + 2 * self.n + (k + n - 1) as usize
    }

    /// Inverse of the flat-index assignment.
    pub fn decode(&self, flat: usize) -> VarId {
        let n = self.n;
        let nn = n * n;
        if flat < 4 * nn {
            let group = Group::ALL[flat / nn];
            let rem = flat % nn;
            return VarId::Triangle(group, rem / n, rem % n);
        }
        let s = flat - 4 * nn;
        let ni = n as i64;
        match self.kind {
            LayoutKind::Lower => {
                if s < 2 * n {
                    VarId::LowerDiag(s as i64 - ni)
                } else {
                    VarId::LowerAnti((s - 2 * n) as i64 - ni)
                }
            }
            LayoutKind::Upper | LayoutKind::ApproxUpper => {
                if s < 4 * n - 2 {
                    let k = (s / 2) as i64 - ni + 1;
                    let side = if s % 2 == 0 { DiagSide::NorthEast } else { DiagSide::SouthWest };
                    VarId::UpperDiag(side, k)
                } else if s < 8 * n - 4 {
                    let t = s - (4 * n - 2);
                    let k = (t / 2) as i64 - ni + 1;
                    let side = if t % 2 == 0 { AntiSide::NorthWest } else { AntiSide::SouthEast };
                    VarId::UpperAnti(side, k)
                } else {
                    let t = s - (8 * n - 4);
                    if t < 2 * n {
                        VarId::AvgDiag(t as i64 - ni + 1)
                    } else {
                        VarId::AvgAnti((t - 2 * n) as i64 - ni + 1)
                    }
                }
            }
        }
    }
}

fn check_diag_index(n: usize, k: i64) -> Result<()> {
    let ni = n as i64;
    if !(-ni..=ni).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "diagonal index {k} outside [-{n}, {n}]"
        )));
    }
    Ok(())
}

/// Sum of the k-th diagonal (`i - j = k`) of the row-major n x n matrix `z`.
pub fn diag_sum(z: &[f64], n: usize, k: i64) -> Result<f64> {
    check_diag_index(n, k)?;
    assert_eq!(z.len(), n * n, "matrix view has wrong length");
    let ni = n as i64;
    let lo = k.max(0);
    let hi = (ni + k).min(ni);
    let mut acc = 0.0;
    for i in lo..hi {
        acc += z[(i * ni + (i - k)) as usize];
    }
    Ok(acc)
}

/// Sum of the k-th anti-diagonal (`i + j = n - 1 - k`) of the row-major
/// n x n matrix `z`.
pub fn antidiag_sum(z: &[f64], n: usize, k: i64) -> Result<f64> {
    check_diag_index(n, k)?;
    assert_eq!(z.len(), n * n, "matrix view has wrong length");
    let ni = n as i64;
    let s = ni - 1 - k;
    let lo = (s - (ni - 1)).max(0);
    let hi = s.min(ni - 1);
    let mut acc = 0.0;
    for i in lo..=hi {
        acc += z[(i * ni + (s - i)) as usize];
    }
    Ok(acc)
}

/// Constraint-row numbering of the lower problem: the 4n slack-definition
/// rows first, then the row-sum rows (i >= 1) and the column-sum rows.
#[derive(Debug, Clone, Copy)]
pub struct LowerRowMap {
    pub n: usize,
}

impl LowerRowMap {
    pub fn num_rows(&self) -> usize {
        6 * self.n - 1
    }

    /// Row of the diagonal slack equation for `d_k`, `k` in `[-n, n-1]`.
    pub fn diag_row(&self, k: i64) -> usize {
        (k + self.n as i64) as usize
    }

    /// Row of the anti-diagonal slack equation for `a_k`.
    pub fn anti_row(&self, k: i64) -> usize {
        2 * self.n + (k + self.n as i64) as usize
    }

    /// Row-sum constraint for board row `i`, `i` in `[1, n-1]` (the `i = 0`
    /// row is the deleted redundant constraint).
    pub fn row_sum_row(&self, i: usize) -> usize {
        debug_assert!(i >= 1 && i < self.n);
        4 * self.n + i - 1
    }

    /// Column-sum constraint for board column `j`.
    pub fn col_sum_row(&self, j: usize) -> usize {
        debug_assert!(j < self.n);
        5 * self.n - 1 + j
    }

    /// Constraint rows touching triangle `(group, i, j)`: its diagonal-slack
    /// row, anti-diagonal-slack row, optional row-sum row, and column-sum
    /// row.
    pub fn triangle_rows(&self, group: Group, i: usize, j: usize) -> (usize, usize, Option<usize>, usize) {
        let (ii, jj) = (i as i64, j as i64);
        let n = self.n as i64;
        // N and E sit on the k+1 side of the d_k equation; S and W on the k
        // side. The anti-diagonal family mirrors this with N, W shifted.
        let diag_k = match group {
            Group::North | Group::East => ii - jj - 1,
            Group::South | Group::West => ii - jj,
        };
        let anti_k = match group {
            Group::North | Group::West => n - 2 - ii - jj,
            Group::South | Group::East => n - 1 - ii - jj,
        };
        let row = if i >= 1 { Some(self.row_sum_row(i)) } else { None };
        (self.diag_row(diag_k), self.anti_row(anti_k), row, self.col_sum_row(j))
    }
}

/// Constraint-row numbering of the upper problem (`q = 14n - 6`), with the
/// approximate problem's 4n averaging rows appended after them.
#[derive(Debug, Clone, Copy)]
pub struct UpperRowMap {
    pub n: usize,
}

impl UpperRowMap {
    pub fn num_rows(&self) -> usize {
        14 * self.n - 6
    }

    pub fn num_rows_approx(&self) -> usize {
        18 * self.n - 6
    }

    /// Slack-definition row for the given side, `k` in `[-n+1, n-1]`.
    pub fn def_diag_row(&self, side: DiagSide, k: i64) -> usize {
        let base = match side {
            DiagSide::SouthWest => 0,
            DiagSide::NorthEast => 2 * self.n - 1,
        };
        base + (k + self.n as i64 - 1) as usize
    }

    pub fn def_anti_row(&self, side: AntiSide, k: i64) -> usize {
        let base = match side {
            AntiSide::SouthEast => 4 * self.n - 2,
            AntiSide::NorthWest => 6 * self.n - 3,
        };
        base + (k + self.n as i64 - 1) as usize
    }

    /// `sum_j N[i, j] = n`.
    pub fn n_row(&self, i: usize) -> usize {
        8 * self.n - 4 + i
    }

    /// `sum_j S[i, j] = n`.
    pub fn s_row(&self, i: usize) -> usize {
        9 * self.n - 4 + i
    }

    /// `sum_i (N + S)[i, j] = 2n`, `j` in `[1, n-1]` (j = 0 deleted).
    pub fn ns_col_row(&self, j: usize) -> usize {
        debug_assert!(j >= 1 && j < self.n);
        10 * self.n - 4 + (j - 1)
    }

    /// `sum_i E[i, j] = n`.
    pub fn e_col_row(&self, j: usize) -> usize {
        11 * self.n - 5 + j
    }

    /// `sum_i W[i, j] = n`.
    pub fn w_col_row(&self, j: usize) -> usize {
        12 * self.n - 5 + j
    }

    /// `sum_j (E + W)[i, j] = 2n`, `i` in `[1, n-1]` (i = 0 deleted).
    pub fn ew_row_row(&self, i: usize) -> usize {
        debug_assert!(i >= 1 && i < self.n);
        13 * self.n - 5 + (i - 1)
    }

    /// Averaging row `2 d_k - d^{SW}_{k-1} - d^{NE}_k = 0/1`, `k` in
    /// `[-n+1, n]`. Only present in the approximate problem.
    pub fn avg_diag_row(&self, k: i64) -> usize {
        14 * self.n - 6 + (k + self.n as i64 - 1) as usize
    }

    pub fn avg_anti_row(&self, k: i64) -> usize {
        16 * self.n - 6 + (k + self.n as i64 - 1) as usize
    }

    /// Constraint rows touching triangle `(group, i, j)`: diagonal
    /// definition row, anti-diagonal definition row, row-family row (absent
    /// for the deleted combined rows), and column-family row.
    pub fn triangle_rows(&self, group: Group, i: usize, j: usize) -> (usize, usize, Option<usize>, Option<usize>) {
        let n = self.n as i64;
        let diag_k = i as i64 - j as i64;
        let anti_k = n - 1 - i as i64 - j as i64;
        match group {
            Group::North => (
                self.def_diag_row(DiagSide::NorthEast, diag_k),
                self.def_anti_row(AntiSide::NorthWest, anti_k),
                Some(self.n_row(i)),
                (j >= 1).then(|| self.ns_col_row(j)),
            ),
            Group::East => (
                self.def_diag_row(DiagSide::NorthEast, diag_k),
                self.def_anti_row(AntiSide::SouthEast, anti_k),
                (i >= 1).then(|| self.ew_row_row(i)),
                Some(self.e_col_row(j)),
            ),
            Group::South => (
                self.def_diag_row(DiagSide::SouthWest, diag_k),
                self.def_anti_row(AntiSide::SouthEast, anti_k),
                Some(self.s_row(i)),
                (j >= 1).then(|| self.ns_col_row(j)),
            ),
            Group::West => (
                self.def_diag_row(DiagSide::SouthWest, diag_k),
                self.def_anti_row(AntiSide::NorthWest, anti_k),
                (i >= 1).then(|| self.ew_row_row(i)),
                Some(self.w_col_row(j)),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_sum_conventions() {
        // n = 2, Z = [[1, 2], [3, 4]].
        let z = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(diag_sum(&z, 2, 0).unwrap(), 5.0);
        assert_eq!(diag_sum(&z, 2, 1).unwrap(), 3.0);
        assert_eq!(diag_sum(&z, 2, -1).unwrap(), 2.0);
        assert_eq!(diag_sum(&z, 2, 2).unwrap(), 0.0);
        assert_eq!(diag_sum(&z, 2, -2).unwrap(), 0.0);
        assert!(diag_sum(&z, 2, 3).is_err());

        assert_eq!(antidiag_sum(&z, 2, 0).unwrap(), 5.0);
        assert_eq!(antidiag_sum(&z, 2, 1).unwrap(), 1.0);
        assert_eq!(antidiag_sum(&z, 2, -1).unwrap(), 4.0);
        assert_eq!(antidiag_sum(&z, 2, 2).unwrap(), 0.0);
        assert!(antidiag_sum(&z, 2, -3).is_err());
    }

    #[test]
    fn trace_of_identity() {
        for n in [1usize, 3, 6] {
            let mut z = vec![0.0; n * n];
            for i in 0..n {
                z[i * n + i] = 1.0;
            }
            assert_eq!(diag_sum(&z, n, 0).unwrap(), n as f64);
        }
    }

    #[test]
    fn antidiag_counts_on_ones() {
        let n = 5;
        let z = vec![1.0; n * n];
        for k in -(n as i64)..=(n as i64) {
            let expect = (n as i64 - k.abs()).max(0) as f64;
            assert_eq!(antidiag_sum(&z, n, k).unwrap(), expect, "k={k}");
            assert_eq!(diag_sum(&z, n, k).unwrap(), expect, "k={k}");
        }
    }

    #[test]
    fn layout_is_a_bijection() {
        for (n, kind) in [
            (1, LayoutKind::Lower),
            (4, LayoutKind::Lower),
            (1, LayoutKind::Upper),
            (5, LayoutKind::Upper),
            (3, LayoutKind::ApproxUpper),
        ] {
            let layout = BoardLayout::new(n, kind).unwrap();
            let p = layout.num_vars();
            let mut seen = vec![false; p];
            for flat in 0..p {
                let id = layout.decode(flat);
                let back = encode(&layout, id);
                assert_eq!(back, flat, "{kind:?} n={n} flat={flat} id={id:?}");
                assert!(!seen[flat]);
                seen[flat] = true;
            }
        }
    }

    fn encode(layout: &BoardLayout, id: VarId) -> usize {
        match id {
            VarId::Triangle(g, i, j) => layout.triangle(g, i, j),
            VarId::LowerDiag(k) => layout.lower_diag_slack(k),
            VarId::LowerAnti(k) => layout.lower_anti_slack(k),
            VarId::UpperDiag(side, k) => layout.upper_diag_slack(side, k),
            VarId::UpperAnti(side, k) => layout.upper_anti_slack(side, k),
            VarId::AvgDiag(k) => layout.avg_diag_slack(k),
            VarId::AvgAnti(k) => layout.avg_anti_slack(k),
        }
    }

    #[test]
    fn upper_pairs_are_adjacent() {
        let layout = BoardLayout::new(4, LayoutKind::Upper).unwrap();
        let n = 4i64;
        for k in (-n + 2)..n {
            let sw = layout.upper_diag_slack(DiagSide::SouthWest, k - 1);
            let ne = layout.upper_diag_slack(DiagSide::NorthEast, k);
            assert_eq!(ne, sw + 1, "pair (SW_{}, NE_{}) not adjacent", k - 1, k);
            let se = layout.upper_anti_slack(AntiSide::SouthEast, k - 1);
            let nw = layout.upper_anti_slack(AntiSide::NorthWest, k);
            assert_eq!(nw, se + 1);
        }
    }
}
