//! A small exact LP solver: maximize `cᵀx` subject to sparse rows, `x ≥ 0`.
//!
//! Rows are `≤` with non-negative right-hand side or `=` with zero right-hand
//! side, so the all-slack basis is feasible. A floating-point tableau pass
//! proposes a basis; the exact revised simplex (Bland's rule) then starts from
//! it when it is exactly feasible, or from the slack basis otherwise. The
//! answer is always certified in rational arithmetic.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_traits::{Signed, Zero};

use super::lu::SparseLu;
use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, Q)>,
    pub kind: RowKind,
    pub rhs: Q,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<Q>,
    pub rows: Vec<Row>,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LpOptimum {
    pub objective: Q,
    pub primal: Vec<Q>,
    /// One multiplier per row; non-negative on `≤` rows.
    pub dual: Vec<Q>,
    /// Exact pivots performed after the warm start.
    pub exact_pivots: usize,
    pub warm_start_used: bool,
}

impl LinearProgram {
    pub fn add_var(&mut self, name: String, cost: Q) -> usize {
        self.objective.push(cost);
        self.var_names.push(name);
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: String,
        coeffs: Vec<(usize, Q)>,
        kind: RowKind,
        rhs: Q,
    ) -> usize {
        self.rows.push(Row { coeffs, kind, rhs });
        self.row_names.push(name);
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// CPLEX-style LP text. Coefficients are written as decimals.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: bool, v: &Q, name: &str| {
            let f = to_f64(v);
            let sign = if f < 0.0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let _ = write!(out, " {sign} {:e} {name}", f.abs());
        };
        out.push_str("Maximize\n obj:");
        let mut first = true;
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                term(&mut out, first, c, &self.var_names[j]);
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " {}:", self.row_names[r]);
            let mut first = true;
            for (j, v) in &row.coeffs {
                term(&mut out, first, v, &self.var_names[*j]);
                first = false;
            }
            if first {
                out.push_str(" 0");
            }
            let op = if row.kind == RowKind::Le { "<=" } else { "=" };
            let _ = writeln!(out, " {op} {:e}", to_f64(&row.rhs));
        }
        out.push_str("End\n");
        out
    }

    fn validate(&self) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            let ok = match row.kind {
                RowKind::Le => !row.rhs.is_negative(),
                RowKind::Eq => row.rhs.is_zero(),
            };
            if !ok {
                return Err(Error::Solver(format!(
                    "row {r} does not admit the slack basis"
                )));
            }
            if row.coeffs.iter().any(|(j, _)| *j >= self.num_vars()) {
                return Err(Error::Solver(format!(
                    "row {r} references an unknown variable"
                )));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpOptimum> {
        self.validate()?;
        let cols = Columns::new(self);
        let slack_basis: Vec<usize> = (0..self.num_rows()).map(|r| self.num_vars() + r).collect();
        if let Some(basis) = float_tableau(self, &cols) {
            if let Ok(opt) = exact_simplex(self, &cols, basis, true) {
                return Ok(opt);
            }
        }
        exact_simplex(self, &cols, slack_basis, false)
    }
}

/// Column-major copy of the constraint matrix including slack/artificial columns.
struct Columns {
    cols: Vec<Vec<(usize, Q)>>,
    n_struct: usize,
    artificial: Vec<bool>,
}

impl Columns {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut cols: Vec<Vec<(usize, Q)>> = vec![Vec::new(); n + lp.num_rows()];
        let mut artificial = vec![false; n + lp.num_rows()];
        for (r, row) in lp.rows.iter().enumerate() {
            for (j, v) in &row.coeffs {
                if !v.is_zero() {
                    cols[*j].push((r, v.clone()));
                }
            }
            cols[n + r].push((r, Q::from_integer(1.into())));
            artificial[n + r] = row.kind == RowKind::Eq;
        }
        Self {
            cols,
            n_struct: n,
            artificial,
        }
    }

    fn cost(&self, lp: &LinearProgram, j: usize) -> Q {
        if j < self.n_struct {
            lp.objective[j].clone()
        } else {
            Q::zero()
        }
    }
}

const TOL: f64 = 1e-9;

/// Dense floating-point primal simplex; returns the final basis (column per row).
fn float_tableau(lp: &LinearProgram, cols: &Columns) -> Option<Vec<usize>> {
    let m = lp.num_rows();
    let ncol = cols.cols.len();
    let width = ncol + 1;
    let mut t = vec![0.0f64; (m + 1) * width];
    for (j, col) in cols.cols.iter().enumerate() {
        for (r, v) in col {
            t[r * width + j] = to_f64(v);
        }
    }
    for (r, row) in lp.rows.iter().enumerate() {
        t[r * width + ncol] = to_f64(&row.rhs);
    }
    let obj = m * width;
    for j in 0..cols.n_struct {
        t[obj + j] = -to_f64(&lp.objective[j]);
    }
    let mut basis: Vec<usize> = (0..m).map(|r| cols.n_struct + r).collect();
    let mut is_basic = vec![false; ncol];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut degenerate_run = 0usize;
    let max_iter = 50 * (m + ncol) + 1000;
    let mut pivot_col = vec![0.0f64; m + 1];
    for _ in 0..max_iter {
        let bland = degenerate_run > 50;
        let mut enter = None;
        let mut best = -TOL;
        for j in 0..ncol {
            if is_basic[j] || cols.artificial[j] {
                continue;
            }
            let d = t[obj + j];
            if d < -TOL {
                if bland {
                    enter = Some(j);
                    break;
                }
                if d < best {
                    best = d;
                    enter = Some(j);
                }
            }
        }
        let Some(q) = enter else {
            return Some(basis);
        };
        // Ratio test with a stability preference for large pivots among near-ties.
        let mut leave: Option<(usize, f64, f64)> = None;
        for r in 0..m {
            let d = t[r * width + q];
            let rhs = t[r * width + ncol].max(0.0);
            let ratio = if cols.artificial[basis[r]] {
                if d.abs() > TOL {
                    0.0
                } else {
                    continue;
                }
            } else if d > TOL {
                rhs / d
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((lr, lratio, ld)) => {
                    if ratio < lratio - TOL {
                        true
                    } else if ratio <= lratio + TOL {
                        if bland {
                            basis[r] < basis[lr]
                        } else {
                            d.abs() > ld
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                leave = Some((r, ratio, d.abs()));
            }
        }
        let (p, ratio, _) = leave?;
        degenerate_run = if ratio <= TOL { degenerate_run + 1 } else { 0 };
        // Pivot on (p, q).
        let pv = t[p * width + q];
        for k in 0..width {
            t[p * width + k] /= pv;
        }
        for r in 0..=m {
            pivot_col[r] = t[r * width + q];
        }
        let (head, tail) = t.split_at_mut(p * width);
        let (prow, rest) = tail.split_at_mut(width);
        for (r, chunk) in head
            .chunks_mut(width)
            .chain(rest.chunks_mut(width))
            .enumerate()
        {
            let rr = if r < p { r } else { r + 1 };
            let f = pivot_col[rr];
            if f != 0.0 {
                for (a, b) in chunk.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                chunk[q] = 0.0;
            }
        }
        is_basic[basis[p]] = false;
        is_basic[q] = true;
        basis[p] = q;
    }
    None
}

fn exact_simplex(
    lp: &LinearProgram,
    cols: &Columns,
    mut basis: Vec<usize>,
    warm: bool,
) -> Result<LpOptimum> {
    let m = lp.num_rows();
    let rhs: Vec<Q> = lp.rows.iter().map(|r| r.rhs.clone()).collect();
    let ncol = cols.cols.len();
    let mut pivots = 0usize;
    loop {
        let bcols: Vec<Vec<(usize, Q)>> = basis.iter().map(|&j| cols.cols[j].clone()).collect();
        let lu =
            SparseLu::factor(m, &bcols).ok_or_else(|| Error::Solver("singular basis".into()))?;
        let x = lu.solve(&rhs);
        if x.iter()
            .zip(&basis)
            .any(|(v, &j)| v.is_negative() || (cols.artificial[j] && !v.is_zero()))
        {
            return Err(Error::Solver("basis is not primal feasible".into()));
        }
        let cb: Vec<Q> = basis.iter().map(|&j| cols.cost(lp, j)).collect();
        let y = lu.solve_transpose(&cb);
        let mut is_basic = vec![false; ncol];
        for &b in &basis {
            is_basic[b] = true;
        }
        let entering = (0..ncol).find(|&j| {
            if is_basic[j] || cols.artificial[j] {
                return false;
            }
            let mut rc = cols.cost(lp, j);
            for (r, v) in &cols.cols[j] {
                if !y[*r].is_zero() {
                    rc -= v * &y[*r];
                }
            }
            rc.is_positive()
        });
        let Some(q) = entering else {
            let mut primal = vec![Q::zero(); cols.n_struct];
            let mut objective = Q::zero();
            for (k, &j) in basis.iter().enumerate() {
                if j < cols.n_struct {
                    objective += &lp.objective[j] * &x[k];
                    primal[j] = x[k].clone();
                }
            }
            return Ok(LpOptimum {
                objective,
                primal,
                dual: y,
                exact_pivots: pivots,
                warm_start_used: warm,
            });
        };
        let mut a = vec![Q::zero(); m];
        for (r, v) in &cols.cols[q] {
            a[*r] = v.clone();
        }
        let d = lu.solve(&a);
        let mut leave: Option<(usize, Q)> = None;
        for k in 0..m {
            let ratio = if cols.artificial[basis[k]] {
                if d[k].is_zero() {
                    continue;
                }
                Q::zero()
            } else if d[k].is_positive() {
                &x[k] / &d[k]
            } else {
                continue;
            };
            let better = match &leave {
                None => true,
                Some((lk, lr)) => ratio < *lr || (ratio == *lr && basis[k] < basis[*lk]),
            };
            if better {
                leave = Some((k, ratio));
            }
        }
        let (k, _) = leave.ok_or_else(|| Error::Solver("objective is unbounded".into()))?;
        basis[k] = q;
        pivots += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use alloc::string::ToString;

    #[test]
    fn textbook_lp() {
        // max 3x + 2y s.t. x + y ≤ 4, x + 3y ≤ 6, x ≤ 3.
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".to_string(), int(3));
        let y = lp.add_var("y".to_string(), int(2));
        lp.add_row(
            "a".into(),
            vec![(x, int(1)), (y, int(1))],
            RowKind::Le,
            int(4),
        );
        lp.add_row(
            "b".into(),
            vec![(x, int(1)), (y, int(3))],
            RowKind::Le,
            int(6),
        );
        lp.add_row("c".into(), vec![(x, int(1))], RowKind::Le, int(3));
        let opt = lp.solve().unwrap();
        assert_eq!(opt.objective, int(11));
        assert_eq!(opt.primal, vec![int(3), int(1)]);
        // Degenerate vertex: all three rows are tight, so any certificate will do.
        let y = &opt.dual;
        assert!(y.iter().all(|d| *d >= int(0)));
        assert!(&y[0] + &y[1] + &y[2] >= int(3));
        assert!(&y[0] + &y[1] * int(3) >= int(2));
        assert_eq!(&y[0] * int(4) + &y[1] * int(6) + &y[2] * int(3), int(11));
    }

    #[test]
    fn equality_rows_with_zero_rhs() {
        // max z - w s.t. z - x = 0, x ≤ 1/2, w = 0 implied by w - 0 = 0 style row.
        let mut lp = LinearProgram::default();
        let z = lp.add_var("z".into(), int(1));
        let x = lp.add_var("x".into(), int(0));
        lp.add_row(
            "link".into(),
            vec![(z, int(1)), (x, int(-1))],
            RowKind::Eq,
            int(0),
        );
        lp.add_row("cap".into(), vec![(x, int(2))], RowKind::Le, int(1));
        let opt = lp.solve().unwrap();
        assert_eq!(opt.objective, frac(1, 2));
    }

    #[test]
    fn rejects_negative_rhs() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), int(1));
        lp.add_row("r".into(), vec![(x, int(1))], RowKind::Le, int(-1));
        assert!(lp.solve().is_err());
    }
}
