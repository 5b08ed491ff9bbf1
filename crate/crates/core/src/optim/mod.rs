//! Optimisation over the action polytope: exact LPs, the scaling search that
//! mixes a perturbed optimiser back towards a safe action, and cutting-plane
//! handling of the second-order-cone rows used by the SAFE-LTS baseline.

mod scaling;
mod simplex;
mod soc;

pub use scaling::{max_scaling_rho, scaling_gap, ScalingProblem};
pub use soc::{solve_soc, SocProblem, SocSolution, DEFAULT_CUT_CAP};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result};
use crate::instance::Polytope;
use simplex::{solve_standard, StdOutcome};

/// Outcome of a linear program over a compact domain.
#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpResult::Optimal { .. })
    }

    pub fn x(&self) -> Option<&DVector<f64>> {
        match self {
            LpResult::Optimal { x, .. } => Some(x),
            LpResult::Infeasible => None,
        }
    }

    /// Objective value, with `-inf` for infeasible programs.
    pub fn value(&self) -> f64 {
        match self {
            LpResult::Optimal { value, .. } => *value,
            LpResult::Infeasible => f64::NEG_INFINITY,
        }
    }
}

/// Per-round LP tolerance, `min(1e-6, 1/t)`.
pub fn round_tolerance(t: usize) -> f64 {
    (1.0 / t.max(1) as f64).min(1e-6)
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lower + y
    Shift(f64),
    /// x = upper - y
    Reflect(f64),
    /// x = y[pos] - y[neg]
    Split(usize),
}

/// Maximises `c^T a` over `dom ∩ {extra_lhs a <= extra_rhs}`.
///
/// `extra_lhs` may have zero rows. Pivoting follows Bland's rule, so the
/// returned vertex is a deterministic function of the input ordering.
pub fn solve_lp(
    c: &DVector<f64>,
    dom: &Polytope,
    extra_lhs: &DMatrix<f64>,
    extra_rhs: &DVector<f64>,
    tol: f64,
) -> Result<LpResult> {
    let d = dom.dim();
    check_dim(d, c.len())?;
    if extra_lhs.nrows() > 0 {
        check_dim(d, extra_lhs.ncols())?;
    }
    check_dim(extra_lhs.nrows(), extra_rhs.len())?;

    // variable substitution so that every standard-form variable is >= 0
    let mut maps = Vec::with_capacity(d);
    let mut n = d;
    for j in 0..d {
        let (lo, hi) = (dom.lower()[j], dom.upper()[j]);
        maps.push(if lo.is_finite() {
            VarMap::Shift(lo)
        } else if hi.is_finite() {
            VarMap::Reflect(hi)
        } else {
            n += 1;
            VarMap::Split(n - 1)
        });
    }

    let dom_rows = dom.lhs().nrows();
    let extra_rows = extra_lhs.nrows();
    let bound_rows: Vec<usize> = (0..d)
        .filter(|&j| dom.lower()[j].is_finite() && dom.upper()[j].is_finite())
        .collect();
    let rows = dom_rows + extra_rows + bound_rows.len();

    let mut a = vec![0.0; rows * n];
    let mut b = vec![0.0; rows];
    let mut fill = |r: usize, g: &dyn Fn(usize) -> f64, h: f64| {
        let mut rhs = h;
        for (j, map) in maps.iter().enumerate() {
            let gj = g(j);
            if gj == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shift(lo) => {
                    a[r * n + j] = gj;
                    rhs -= gj * lo;
                }
                VarMap::Reflect(hi) => {
                    a[r * n + j] = -gj;
                    rhs -= gj * hi;
                }
                VarMap::Split(neg) => {
                    a[r * n + j] = gj;
                    a[r * n + neg] = -gj;
                }
            }
        }
        b[r] = rhs;
    };
    for i in 0..dom_rows {
        fill(i, &|j| dom.lhs()[(i, j)], dom.rhs()[i]);
    }
    for i in 0..extra_rows {
        fill(dom_rows + i, &|j| extra_lhs[(i, j)], extra_rhs[i]);
    }
    let base = dom_rows + extra_rows;
    for (k, &j) in bound_rows.iter().enumerate() {
        a[(base + k) * n + j] = 1.0;
        b[base + k] = dom.upper()[j] - dom.lower()[j];
    }

    let mut cs = vec![0.0; n];
    for (j, map) in maps.iter().enumerate() {
        match *map {
            VarMap::Shift(_) => cs[j] = c[j],
            VarMap::Reflect(_) => cs[j] = -c[j],
            VarMap::Split(neg) => {
                cs[j] = c[j];
                cs[neg] = -c[j];
            }
        }
    }

    match solve_standard(&cs, &a, &b, tol)? {
        StdOutcome::Infeasible => Ok(LpResult::Infeasible),
        StdOutcome::Optimal { y, .. } => {
            let x = DVector::from_iterator(
                d,
                maps.iter().enumerate().map(|(j, map)| match *map {
                    VarMap::Shift(lo) => (lo + y[j]).min(dom.upper()[j]),
                    VarMap::Reflect(hi) => hi - y[j],
                    VarMap::Split(neg) => y[j] - y[neg],
                }),
            );
            let value = c.dot(&x);
            Ok(LpResult::Optimal { x, value })
        }
    }
}
