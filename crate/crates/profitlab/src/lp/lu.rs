//! Exact sparse LU factorization of a square basis matrix.
//!
//! Gaussian elimination with a Markowitz-style pivot choice (sparsest column,
//! then sparsest row). Row operations are recorded so that both `B x = b`
//! and `yᵀ B = cᵀ` can be solved.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::rational::Q;

type SparseRow = Vec<(usize, Q)>;

#[derive(Debug, Clone)]
pub struct SparseLu {
    dim: usize,
    /// `(target, source, factor)`: `row[target] -= factor * row[source]`.
    ops: Vec<(usize, usize, Q)>,
    /// `(row, column)` in elimination order.
    pivots: Vec<(usize, usize)>,
    /// Row contents at the moment each row was used as a pivot.
    upper: Vec<SparseRow>,
}

fn axpy(target: &SparseRow, factor: &Q, source: &SparseRow) -> SparseRow {
    // target - factor * source, both sorted by column.
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut a, mut b) = (0, 0);
    while a < target.len() || b < source.len() {
        let ca = target.get(a).map(|e| e.0).unwrap_or(usize::MAX);
        let cb = source.get(b).map(|e| e.0).unwrap_or(usize::MAX);
        if ca < cb {
            out.push(target[a].clone());
            a += 1;
        } else if cb < ca {
            out.push((cb, -(factor * &source[b].1)));
            b += 1;
        } else {
            let v = &target[a].1 - factor * &source[b].1;
            if !v.is_zero() {
                out.push((ca, v));
            }
            a += 1;
            b += 1;
        }
    }
    out
}

impl SparseLu {
    /// Factor the matrix whose column `k` is `columns[k]` (entries `(row, value)`).
    ///
    /// Returns `None` for a singular matrix.
    pub fn factor(dim: usize, columns: &[Vec<(usize, Q)>]) -> Option<Self> {
        assert_eq!(columns.len(), dim, "basis must be square");
        let mut rows: Vec<SparseRow> = vec![Vec::new(); dim];
        for (k, col) in columns.iter().enumerate() {
            for (r, v) in col {
                if !v.is_zero() {
                    rows[*r].push((k, v.clone()));
                }
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); dim];
        for (r, row) in rows.iter().enumerate() {
            for (c, _) in row {
                col_rows[*c].insert(r);
            }
        }
        let mut row_done = vec![false; dim];
        let mut col_done = vec![false; dim];
        let mut ops = Vec::new();
        let mut pivots = Vec::with_capacity(dim);
        let mut upper: Vec<SparseRow> = vec![Vec::new(); dim];

        for _ in 0..dim {
            let col = (0..dim)
                .filter(|&c| !col_done[c])
                .min_by_key(|&c| (col_rows[c].len(), c))?;
            let prow = *col_rows[col].iter().min_by_key(|&&r| (rows[r].len(), r))?;
            let pivot_row = core::mem::take(&mut rows[prow]);
            let pval = pivot_row.iter().find(|e| e.0 == col).map(|e| e.1.clone())?;
            let targets: Vec<usize> = col_rows[col]
                .iter()
                .copied()
                .filter(|&r| r != prow)
                .collect();
            for r in targets {
                let a = rows[r]
                    .iter()
                    .find(|e| e.0 == col)
                    .map(|e| e.1.clone())
                    .expect("indexed entry");
                let factor = a / &pval;
                let before: BTreeSet<usize> = rows[r].iter().map(|e| e.0).collect();
                let updated = axpy(&rows[r], &factor, &pivot_row);
                let after: BTreeSet<usize> = updated.iter().map(|e| e.0).collect();
                for c in before.difference(&after) {
                    col_rows[*c].remove(&r);
                }
                for c in after.difference(&before) {
                    col_rows[*c].insert(r);
                }
                rows[r] = updated;
                ops.push((r, prow, factor));
            }
            for (c, _) in &pivot_row {
                col_rows[*c].remove(&prow);
            }
            row_done[prow] = true;
            col_done[col] = true;
            pivots.push((prow, col));
            upper[prow] = pivot_row;
        }
        Some(Self {
            dim,
            ops,
            pivots,
            upper,
        })
    }

    /// Solve `B x = b`; the result is indexed by basis column.
    pub fn solve(&self, b: &[Q]) -> Vec<Q> {
        let mut rhs = b.to_vec();
        for (t, s, f) in &self.ops {
            if !rhs[*s].is_zero() {
                let d = f * &rhs[*s];
                rhs[*t] -= d;
            }
        }
        let mut x = vec![Q::zero(); self.dim];
        for &(row, col) in self.pivots.iter().rev() {
            let mut acc = rhs[row].clone();
            let mut diag = None;
            for (c, v) in &self.upper[row] {
                if *c == col {
                    diag = Some(v);
                } else if !x[*c].is_zero() {
                    acc -= v * &x[*c];
                }
            }
            x[col] = acc / diag.expect("pivot entry");
        }
        x
    }

    /// Solve `yᵀ B = cᵀ` where `c` is indexed by basis column; `y` is indexed by row.
    pub fn solve_transpose(&self, c: &[Q]) -> Vec<Q> {
        let mut upper_cols: Vec<Vec<(usize, &Q)>> = vec![Vec::new(); self.dim];
        for &(row, _) in &self.pivots {
            for (col, v) in &self.upper[row] {
                upper_cols[*col].push((row, v));
            }
        }
        let mut z = vec![Q::zero(); self.dim];
        for &(row, col) in &self.pivots {
            let mut acc = c[col].clone();
            let mut diag = None;
            for &(r, v) in &upper_cols[col] {
                if r == row {
                    diag = Some(v);
                } else if !z[r].is_zero() {
                    acc -= v * &z[r];
                }
            }
            z[row] = acc / diag.expect("pivot entry");
        }
        for (t, s, f) in self.ops.iter().rev() {
            if !z[*t].is_zero() {
                let d = f * &z[*t];
                z[*s] -= d;
            }
        }
        z
    }
}
