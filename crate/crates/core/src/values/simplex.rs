//! Dense two-phase primal simplex.
//!
//! Solves `max c.x` subject to `A x = b`, `x >= 0`. Meant for the tiny LPs of
//! this crate (a few thousand columns at most); no sparsity, no scaling.
//!
//! Pricing is steepest edge. After a long run of degenerate pivots it falls
//! back to Bland's rule, which cannot cycle, until the objective strictly
//! improves. The final basic solution is recomputed from the original
//! constraints to shed the drift of many tableau updates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivot and reduced-cost tolerance.
pub const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
    /// Equality rows found linearly dependent and dropped.
    pub redundant_rows: usize,
}

struct Tableau {
    /// Row-major, `rows + 1` rows (last is the reduced-cost row) of `width` entries.
    t: Vec<f64>,
    rows: usize,
    width: usize,
    basis: Vec<usize>,
    /// Original constraint index of each remaining row.
    row_ids: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[r * w..(r + 1) * w];
            for (v, q) in row.iter_mut().zip(&prow) {
                if *q != 0.0 {
                    *v -= f * q;
                }
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Improving column with the largest reduced cost per unit length of its
    /// tableau column.
    fn steepest_edge(&self, allowed: usize) -> Option<usize> {
        let obj = self.rows;
        let mut norms = vec![1.0f64; allowed];
        for r in 0..self.rows {
            let row = &self.t[r * self.width..r * self.width + allowed];
            for (nj, v) in norms.iter_mut().zip(row) {
                *nj += v * v;
            }
        }
        let mut best = None;
        let mut best_score = 0.0;
        for (j, nj) in norms.iter().enumerate() {
            let d = self.at(obj, j);
            if d > PIVOT_TOL {
                let score = d / nj.sqrt();
                if score > best_score {
                    best_score = score;
                    best = Some(j);
                }
            }
        }
        best
    }

    /// Ratio ties always go to the lowest basic index.
    fn run(&mut self, allowed: usize, max_pivots: usize) -> Result<LpStatus> {
        let obj = self.rows;
        let mut degenerate_run = 0;
        loop {
            let entering = if degenerate_run >= DEGENERATE_SWITCH {
                (0..allowed).find(|&j| self.at(obj, j) > PIVOT_TOL)
            } else {
                self.steepest_edge(allowed)
            };
            let Some(e) = entering else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, e);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, self.rhs_col()) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            if ratio * self.at(obj, e) > 1e-12 {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            if self.pivots >= max_pivots {
                return Err(Error::Budget { what: "simplex pivots".into(), needed: self.pivots as u128 + 1, limit: max_pivots as u128 });
            }
            self.pivot(r, e);
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.t.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.row_ids.remove(r);
        self.rows -= 1;
    }
}

/// Solve `max c.x` s.t. `a x = b`, `x >= 0`; `a` is row-major `m x n`.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64], max_pivots: usize) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("constraint matrix does not match b and c".into()));
    }
    // Columns: n structural, m artificial, rhs.
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for r in 0..m {
        let s = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[r * width + j] = s * a[r][j];
        }
        t[r * width + n + r] = 1.0;
        t[r * width + width - 1] = s * b[r];
    }
    // Phase 1 maximizes -sum(artificials): reduced costs are the column sums.
    for r in 0..m {
        for j in 0..n {
            t[m * width + j] += t[r * width + j];
        }
        t[m * width + width - 1] += t[r * width + width - 1];
    }
    let mut tab = Tableau { t, rows: m, width, basis: (n..n + m).collect(), row_ids: (0..m).collect(), pivots: 0 };
    tab.run(n + m, max_pivots)?;
    // The phase 1 rhs cell holds sum of artificials still in play.
    let infeas = tab.at(tab.rows, tab.rhs_col());
    if infeas > 1e-7 {
        return Ok(LpSolution { status: LpStatus::Infeasible, objective: f64::NAN, x: vec![], pivots: tab.pivots, redundant_rows: 0 });
    }
    // Drive artificials out of the basis; rows where that is impossible are redundant.
    let mut redundant = 0;
    let mut r = 0;
    while r < tab.rows {
        if tab.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
                tab.pivot(r, j);
                r += 1;
            } else {
                tab.remove_row(r);
                redundant += 1;
            }
        } else {
            r += 1;
        }
    }
    // Phase 2 reduced costs: c_j - c_B . column j. Artificial columns stay barred.
    let (rows, w) = (tab.rows, tab.width);
    for j in 0..w {
        let mut v = if j < n { c[j] } else { 0.0 };
        for r in 0..rows {
            let cb = c[tab.basis[r]];
            v -= cb * tab.t[r * w + j];
        }
        tab.t[rows * w + j] = if j < n || j == w - 1 { v } else { 0.0 };
    }
    let status = tab.run(n, max_pivots)?;
    let mut x = vec![0.0; n];
    for r in 0..tab.rows {
        x[tab.basis[r]] = tab.at(r, tab.rhs_col());
    }
    if status == LpStatus::Optimal {
        if let Some(xb) = polish(a, b, &tab.basis, &tab.row_ids) {
            for (r, &j) in tab.basis.iter().enumerate() {
                x[j] = xb[r];
            }
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpSolution { status, objective, x, pivots: tab.pivots, redundant_rows: redundant })
}

/// Solve `B x_B = b` on the surviving rows with a fresh LU factorization.
fn polish(a: &[Vec<f64>], b: &[f64], basis: &[usize], rows: &[usize]) -> Option<Vec<f64>> {
    let m = rows.len();
    if m == 0 {
        return Some(vec![]);
    }
    let bm = DMatrix::from_fn(m, m, |r, c| a[rows[r]][basis[c]]);
    let rhs = DVector::from_fn(m, |r, _| b[rows[r]]);
    let xb = bm.lu().solve(&rhs)?;
    // Keep the tableau values if the fresh solve is not a clean feasible point.
    if xb.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return None;
    }
    Some(xb.iter().map(|v| v.max(0.0)).collect())
}
