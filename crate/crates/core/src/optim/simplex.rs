//! Dense condensed-tableau simplex with Bland's rule.
//!
//! Solves `max c^T y  s.t.  A y <= b, y >= 0`. The tableau stores only the
//! nonbasic columns, so a pivot costs `O(rows * cols)` with `cols` equal to
//! the number of structural variables, which stays tiny here even when the
//! constraint count runs into the thousands.

use crate::error::{Error, Result};

/// Entries smaller than this are never used as pivots.
const PIVOT_EPS: f64 = 1e-11;
/// Reduced costs at or below this count as nonpositive.
const OPT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum StdOutcome {
    Optimal { y: Vec<f64>, value: f64 },
    Infeasible,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x cols`, row-major; basic_r = rhs_r - sum_k t[r][k] * nonbasic_k
    t: Vec<f64>,
    rhs: Vec<f64>,
    /// objective: z = z0 + sum_k obj[k] * nonbasic_k
    obj: Vec<f64>,
    z0: f64,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    pivots: usize,
    cap: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, k: usize) -> f64 {
        self.t[r * self.cols + k]
    }

    fn pivot(&mut self, r: usize, j: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.cap {
            return Err(Error::IterationLimit(self.cap));
        }
        let cols = self.cols;
        let piv = self.at(r, j);
        let inv = 1.0 / piv;

        // pivot row
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for (k, v) in row.iter_mut().enumerate() {
                if k == j {
                    *v = inv;
                } else {
                    *v *= inv;
                }
            }
        }
        self.rhs[r] *= inv;
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        let pivot_rhs = self.rhs[r];

        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for k in 0..cols {
                if k == j {
                    row[k] = -f * inv;
                } else {
                    row[k] -= f * pivot_row[k];
                }
            }
            self.rhs[i] -= f * pivot_rhs;
        }

        let cj = self.obj[j];
        if cj != 0.0 {
            for k in 0..cols {
                if k == j {
                    self.obj[k] = -cj * inv;
                } else {
                    self.obj[k] -= cj * pivot_row[k];
                }
            }
            self.z0 += cj * pivot_rhs;
        }

        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[j]);
        Ok(())
    }

    /// Bland's rule: lowest-labelled improving column, then the ratio test
    /// with ties broken by lowest basic label.
    fn optimize(&mut self) -> Result<()> {
        loop {
            let mut enter: Option<usize> = None;
            for k in 0..self.cols {
                if self.obj[k] > OPT_EPS {
                    match enter {
                        Some(e) if self.nonbasic[e] < self.nonbasic[k] => {}
                        _ => enter = Some(k),
                    }
                }
            }
            let Some(j) = enter else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, j);
                if a > PIVOT_EPS {
                    let ratio = self.rhs[r].max(0.0) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, best)) => {
                            if ratio < best || (ratio == best && self.basic[r] < self.basic[lr]) {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, j)?;
        }
    }
}

/// Solves `max c^T y s.t. a y <= b, y >= 0` where `a` is row-major with
/// `c.len()` columns. Phase 1 uses a single auxiliary variable entering on
/// the most violated row; the problem is declared infeasible when the
/// auxiliary optimum stays below `-feas_tol`.
pub(crate) fn solve_standard(c: &[f64], a: &[f64], b: &[f64], feas_tol: f64) -> Result<StdOutcome> {
    let n = c.len();
    let rows = b.len();
    debug_assert_eq!(a.len(), rows * n);
    let cap = 50 * (rows + n + 10);

    let needs_phase1 = b.iter().any(|&v| v < 0.0);
    let aux_label = n + rows;
    let cols = if needs_phase1 { n + 1 } else { n };

    let mut t = vec![0.0; rows * cols];
    for r in 0..rows {
        t[r * cols..r * cols + n].copy_from_slice(&a[r * n..(r + 1) * n]);
        if needs_phase1 {
            t[r * cols + n] = -1.0;
        }
    }
    let mut nonbasic: Vec<usize> = (0..n).collect();
    if needs_phase1 {
        nonbasic.push(aux_label);
    }
    let mut tab = Tableau {
        rows,
        cols,
        t,
        rhs: b.to_vec(),
        obj: vec![0.0; cols],
        z0: 0.0,
        basic: (n..n + rows).collect(),
        nonbasic,
        pivots: 0,
        cap,
    };

    if needs_phase1 {
        tab.obj[n] = -1.0;
        let mut worst = 0;
        for r in 1..rows {
            if tab.rhs[r] < tab.rhs[worst] {
                worst = r;
            }
        }
        tab.pivot(worst, n)?;
        tab.optimize()?;
        if tab.z0 < -feas_tol {
            return Ok(StdOutcome::Infeasible);
        }
        // drive the auxiliary variable out of the basis if it is still there
        if let Some(r) = tab.basic.iter().position(|&l| l == aux_label) {
            let mut best: Option<usize> = None;
            for k in 0..tab.cols {
                let v = tab.at(r, k).abs();
                if v > PIVOT_EPS && best.is_none_or(|b| v > tab.at(r, b).abs()) {
                    best = Some(k);
                }
            }
            match best {
                Some(k) => tab.pivot(r, k)?,
                None => {
                    // the row is identically zero: the auxiliary stays basic at 0
                    tab.rhs[r] = 0.0;
                }
            }
        }
        // remove the auxiliary column (if nonbasic) and install the real objective
        if let Some(j) = tab.nonbasic.iter().position(|&l| l == aux_label) {
            let old_cols = tab.cols;
            let mut t2 = Vec::with_capacity(rows * (old_cols - 1));
            for r in 0..rows {
                for k in 0..old_cols {
                    if k != j {
                        t2.push(tab.t[r * old_cols + k]);
                    }
                }
            }
            tab.t = t2;
            tab.cols = old_cols - 1;
            tab.nonbasic.remove(j);
        }
        tab.obj = vec![0.0; tab.cols];
        tab.z0 = 0.0;
        for (var, &cv) in c.iter().enumerate() {
            if cv == 0.0 {
                continue;
            }
            if let Some(k) = tab.nonbasic.iter().position(|&l| l == var) {
                tab.obj[k] += cv;
            } else if let Some(r) = tab.basic.iter().position(|&l| l == var) {
                tab.z0 += cv * tab.rhs[r];
                for k in 0..tab.cols {
                    tab.obj[k] -= cv * tab.at(r, k);
                }
            }
        }
        // an auxiliary stuck in the basis must never re-enter; its row is zero
    } else {
        tab.obj.copy_from_slice(c);
    }

    tab.optimize()?;

    let mut y = vec![0.0; n];
    for (r, &label) in tab.basic.iter().enumerate() {
        if label < n {
            y[label] = tab.rhs[r].max(0.0);
        }
    }
    let value = c.iter().zip(&y).map(|(ci, yi)| ci * yi).sum();
    Ok(StdOutcome::Optimal { y, value })
}
