use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::SymMatrix;

/// The pessimistic constraint along the segment from a safe action to a
/// candidate, `g(rho) = max_i (Phi a(rho) - alpha)_i + omega ||a(rho)||_{V^-1}`
/// with `a(rho) = (1 - rho) a_safe + rho b`.
///
/// The affine part and the three quadratic-form coefficients are
/// precomputed, so each evaluation is `O(m)`.
#[derive(Debug, Clone)]
pub struct ScalingProblem {
    safe_rows: DVector<f64>,
    cand_rows: DVector<f64>,
    alpha: DVector<f64>,
    omega: f64,
    ss: f64,
    sb: f64,
    bb: f64,
}

impl ScalingProblem {
    pub fn new(
        phi_hat: &DMatrix<f64>,
        alpha: &DVector<f64>,
        omega: f64,
        v_inv: &SymMatrix,
        a_safe: &DVector<f64>,
        b: &DVector<f64>,
    ) -> Result<Self> {
        check_dim(phi_hat.ncols(), a_safe.len())?;
        check_dim(phi_hat.ncols(), b.len())?;
        check_dim(phi_hat.nrows(), alpha.len())?;
        check_dim(v_inv.dim(), b.len())?;
        Ok(Self {
            safe_rows: phi_hat * a_safe,
            cand_rows: phi_hat * b,
            alpha: alpha.clone(),
            omega,
            ss: v_inv.quad_form(a_safe),
            sb: v_inv.bilinear(a_safe, b),
            bb: v_inv.quad_form(b),
        })
    }

    pub fn gap(&self, rho: f64) -> f64 {
        let s = 1.0 - rho;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.alpha.len() {
            let v = s * self.safe_rows[i] + rho * self.cand_rows[i] - self.alpha[i];
            worst = worst.max(v);
        }
        if self.alpha.is_empty() {
            worst = 0.0;
        }
        let q = s * s * self.ss + 2.0 * s * rho * self.sb + rho * rho * self.bb;
        worst + self.omega * q.max(0.0).sqrt()
    }

    /// Largest `rho` in `[0, 1]` with `g(rho) <= 0`, resolved to `tol` by a
    /// fixed number of bisection steps. The fixed step count makes the output
    /// the dyadic floor of the true supremum, hence monotone in the data.
    pub fn max_rho(&self, tol: f64) -> Result<f64> {
        let g0 = self.gap(0.0);
        if g0 > tol {
            return Err(Error::Precondition(format!(
                "scaling search needs g(0) <= 0 at the safe action, got {g0:e}"
            )));
        }
        if self.gap(1.0) <= 0.0 {
            return Ok(1.0);
        }
        if g0 > 0.0 {
            return Ok(0.0);
        }
        let steps = (1.0 / tol.clamp(1e-15, 0.5)).log2().ceil() as usize;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            if self.gap(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// `g(rho)` evaluated directly from its definition.
pub fn scaling_gap(
    phi_hat: &DMatrix<f64>,
    alpha: &DVector<f64>,
    omega: f64,
    v_inv: &SymMatrix,
    a_safe: &DVector<f64>,
    b: &DVector<f64>,
    rho: f64,
) -> Result<f64> {
    Ok(ScalingProblem::new(phi_hat, alpha, omega, v_inv, a_safe, b)?.gap(rho))
}

/// The scaling factor that mixes `b_t` back towards `a_safe` until the
/// pessimistic constraints certify the mixture.
pub fn max_scaling_rho(
    phi_hat: &DMatrix<f64>,
    alpha: &DVector<f64>,
    omega: f64,
    v_inv: &SymMatrix,
    a_safe: &DVector<f64>,
    b_t: &DVector<f64>,
    tol: f64,
) -> Result<f64> {
    ScalingProblem::new(phi_hat, alpha, omega, v_inv, a_safe, b_t)?.max_rho(tol)
}
