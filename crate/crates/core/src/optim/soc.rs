use nalgebra::{DMatrix, DVector};

use super::scaling::ScalingProblem;
use super::{solve_lp, LpResult};
use crate::error::{check_dim, Error, Result};
use crate::instance::Polytope;
use crate::linalg::SymMatrix;

/// Cutting-plane rounds allowed before falling back to a shrunk iterate.
pub const DEFAULT_CUT_CAP: usize = 200;

/// `max c^T a` over `dom` subject to the `m` cone rows
/// `phi_hat^i a + omega ||a||_{V^-1} <= alpha^i`.
#[derive(Debug, Clone)]
pub struct SocProblem<'a> {
    pub c: &'a DVector<f64>,
    pub dom: &'a Polytope,
    pub phi_hat: &'a DMatrix<f64>,
    pub alpha: &'a DVector<f64>,
    pub omega: f64,
    pub v_inv_sqrt: &'a SymMatrix,
    /// A point strictly inside the cone system (the known safe action).
    pub anchor: &'a DVector<f64>,
    pub tol: f64,
    pub cut_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocSolution {
    pub result: LpResult,
    /// Number of cutting-plane rounds that added rows.
    pub rounds: usize,
    pub rows_added: usize,
    /// The cut cap was hit and the iterate was shrunk towards the anchor.
    pub degraded: bool,
}

impl SocProblem<'_> {
    /// Worst cone-row violation at `a`.
    pub fn max_violation(&self, a: &DVector<f64>) -> f64 {
        let nrm = (self.v_inv_sqrt.as_matrix() * a).norm();
        let lin = self.phi_hat * a - self.alpha;
        lin.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v)) + self.omega * nrm
    }
}

/// Kelley-style outer approximation: solve the LP relaxation, linearise the
/// norm at the current optimum for every violated row, and repeat. The final
/// iterate is pulled back along the segment to the anchor so the returned
/// point satisfies the cone rows exactly.
pub fn solve_soc(p: &SocProblem<'_>) -> Result<SocSolution> {
    solve_soc_observed(p, &mut |_, _| {})
}

/// As [`solve_soc`], reporting every added cut `(row, rhs)` to `on_cut`.
pub(crate) fn solve_soc_observed(
    p: &SocProblem<'_>,
    on_cut: &mut dyn FnMut(&[f64], f64),
) -> Result<SocSolution> {
    let d = p.dom.dim();
    check_dim(d, p.c.len())?;
    check_dim(d, p.phi_hat.ncols())?;
    check_dim(p.phi_hat.nrows(), p.alpha.len())?;
    check_dim(d, p.v_inv_sqrt.dim())?;
    check_dim(d, p.anchor.len())?;
    let m = p.phi_hat.nrows();

    let mut rows: Vec<f64> = Vec::with_capacity(m * d * 4);
    let mut rhs: Vec<f64> = Vec::with_capacity(m * 4);
    for i in 0..m {
        rows.extend(p.phi_hat.row(i).iter());
        rhs.push(p.alpha[i]);
    }

    let mut rounds = 0;
    let mut rows_added = 0;
    let (x, degraded) = loop {
        let k = rhs.len();
        let lhs = DMatrix::from_row_slice(k, d, &rows);
        let rhs_v = DVector::from_column_slice(&rhs);
        let x = match solve_lp(p.c, p.dom, &lhs, &rhs_v, p.tol)? {
            LpResult::Infeasible => {
                return Ok(SocSolution {
                    result: LpResult::Infeasible,
                    rounds,
                    rows_added,
                    degraded: false,
                })
            }
            LpResult::Optimal { x, .. } => x,
        };
        if p.omega == 0.0 {
            break (x, false);
        }
        let w = p.v_inv_sqrt.as_matrix() * &x;
        let nrm = w.norm();
        let lin = p.phi_hat * &x - p.alpha;
        let violated: Vec<usize> = (0..m).filter(|&i| lin[i] + p.omega * nrm > p.tol).collect();
        if violated.is_empty() {
            break (x, false);
        }
        if rounds >= p.cut_cap || nrm == 0.0 {
            break (x, true);
        }
        // supporting hyperplane of ||V^{-1/2} a|| at x: u^T V^{-1/2} a
        let grad = p.v_inv_sqrt.as_matrix() * (w / nrm);
        for &i in &violated {
            let start = rows.len();
            for j in 0..d {
                rows.push(p.phi_hat[(i, j)] + p.omega * grad[j]);
            }
            rhs.push(p.alpha[i]);
            on_cut(&rows[start..], p.alpha[i]);
        }
        rows_added += violated.len();
        rounds += 1;
    };

    let mut x = x;
    if p.max_violation(&x) > 0.0 {
        let v_inv = SymMatrix::symmetrize(p.v_inv_sqrt.as_matrix() * p.v_inv_sqrt.as_matrix())?;
        let shrink = ScalingProblem::new(p.phi_hat, p.alpha, p.omega, &v_inv, p.anchor, &x)?;
        if shrink.gap(0.0) > 0.0 {
            return Err(Error::Precondition(
                "cone anchor violates the cone rows".into(),
            ));
        }
        let rho = shrink.max_rho(1e-12)?;
        x = p.anchor * (1.0 - rho) + x * rho;
    }
    let value = p.c.dot(&x);
    Ok(SocSolution {
        result: LpResult::Optimal { x, value },
        rounds,
        rows_added,
        degraded,
    })
}
