//! Online ridge regression for the objective and constraint matrix, with the
//! confidence radius and uncertainty widths built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::instance::SlbInstance;
use crate::linalg::{inverse_factors, mahalanobis, rank1_update, SymMatrix};

/// Ridge-regression state. `V = I + Σ a aᵀ`, `xr = Σ a R`, `xs = Σ a Sᵀ`.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    v: SymMatrix,
    xr: DVector<f64>,
    xs: DMatrix<f64>,
    t: usize,
    v_inv: SymMatrix,
    v_inv_sqrt: SymMatrix,
    log_det: f64,
}

/// Point estimates at the current round together with `ω_t(δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub theta_hat: DVector<f64>,
    pub phi_hat: DMatrix<f64>,
    pub omega: f64,
}

impl SufficientStats {
    pub fn new(d: usize, m: usize) -> Self {
        Self {
            v: SymMatrix::identity(d),
            xr: DVector::zeros(d),
            xs: DMatrix::zeros(d, m),
            t: 0,
            v_inv: SymMatrix::identity(d),
            v_inv_sqrt: SymMatrix::identity(d),
            log_det: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.xr.len()
    }
    pub fn num_constraints(&self) -> usize {
        self.xs.ncols()
    }
    /// Number of updates so far; the round being decided is `updates() + 1`.
    pub fn updates(&self) -> usize {
        self.t
    }
    pub fn gram(&self) -> &SymMatrix {
        &self.v
    }
    pub fn v_inv(&self) -> &SymMatrix {
        &self.v_inv
    }
    pub fn v_inv_sqrt(&self) -> &SymMatrix {
        &self.v_inv_sqrt
    }
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Folds in one round of feedback; caches are refreshed eagerly.
    pub fn update(&mut self, a: &DVector<f64>, reward: f64, s: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), a.len())?;
        check_dim(self.num_constraints(), s.len())?;
        let v = rank1_update(&self.v, a)?;
        let f = inverse_factors(&v)?;
        self.v = v;
        self.xr += a * reward;
        self.xs += a * s.transpose();
        self.t += 1;
        self.v_inv = f.inv;
        self.v_inv_sqrt = f.inv_sqrt;
        self.log_det = f.log_det;
        Ok(())
    }

    pub fn theta_hat(&self) -> DVector<f64> {
        self.v_inv.mul_vec(&self.xr)
    }

    /// `Φ̂ = (V^{-1} Σ a Sᵀ)ᵀ`, an `m × d` matrix.
    pub fn phi_hat(&self) -> DMatrix<f64> {
        (self.v_inv.as_matrix() * &self.xs).transpose()
    }

    pub fn estimates(&self, delta: f64) -> Result<Estimates> {
        Ok(Estimates {
            theta_hat: self.theta_hat(),
            phi_hat: self.phi_hat(),
            omega: confidence_radius(self, self.num_constraints(), delta)?,
        })
    }

    /// `‖a‖_{V^{-1}}`.
    pub fn inv_norm(&self, a: &DVector<f64>) -> Result<f64> {
        mahalanobis(a, &self.v_inv)
    }
}

/// `ω_t(δ) = 1 + sqrt(½ log((m+1)/δ) + ¼ log det V_t)`.
pub fn confidence_radius(stats: &SufficientStats, m: usize, delta: f64) -> Result<f64> {
    radius_from_log_det(stats.log_det(), m, delta)
}

pub fn radius_from_log_det(log_det: f64, m: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let inner = 0.5 * ((m as f64 + 1.0) / delta).ln() + 0.25 * log_det;
    Ok(1.0 + inner.max(0.0).sqrt())
}

/// `δ_t = δ / (t (t+1))` for the round index `t >= 1`.
pub fn delta_t(delta: f64, t: usize) -> f64 {
    let t = t.max(1) as f64;
    delta / (t * (t + 1.0))
}

/// `M_t(a) = B_t · ω_t · ‖a‖_{V^{-1}}`.
pub fn width(stats: &SufficientStats, b_t: f64, omega: f64, a: &DVector<f64>) -> Result<f64> {
    Ok(b_t * omega * stats.inv_norm(a)?)
}

/// Whether the truth lies in both confidence ellipsoids. Needs the true
/// parameters, so only the simulator calls this.
pub fn consistency_holds(est: &Estimates, stats: &SufficientStats, truth: &SlbInstance) -> bool {
    let v = stats.gram();
    let dt = &est.theta_hat - &truth.theta_star;
    if v.quad_form(&dt).max(0.0).sqrt() > est.omega {
        return false;
    }
    for i in 0..truth.num_constraints() {
        let diff: DVector<f64> = (est.phi_hat.row(i) - truth.phi_star.row(i)).transpose();
        if v.quad_form(&diff).max(0.0).sqrt() > est.omega {
            return false;
        }
    }
    true
}

/// Running sums behind the elliptical potential bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialTracker {
    pub sum_sq: f64,
    pub sum: f64,
    pub rounds: usize,
}

impl PotentialTracker {
    /// Records `‖a_t‖_{V_t^{-1}}` computed before the update with `a_t`.
    pub fn record(&mut self, inv_norm: f64) {
        self.sum_sq += inv_norm * inv_norm;
        self.sum += inv_norm;
        self.rounds += 1;
    }

    /// `(2 d log(1 + t/d), sqrt(2 d t log(1 + t/d)))`.
    pub fn bounds(d: usize, t: usize) -> (f64, f64) {
        let (d, t) = (d as f64, t as f64);
        let l = (1.0 + t / d).ln();
        (2.0 * d * l, (2.0 * d * t * l).sqrt())
    }

    pub fn check(&self, d: usize) -> Result<()> {
        let (sq_bound, bound) = Self::bounds(d, self.rounds);
        if self.sum_sq > sq_bound || self.sum > bound {
            return Err(Error::EllipticalPotential {
                t: self.rounds,
                detail: format!(
                    "sum of squares {} vs {}, sum {} vs {}",
                    self.sum_sq, sq_bound, self.sum, bound
                ),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builtin_polygon_instance;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_update_normal_equations() {
        let mut s = SufficientStats::new(3, 1);
        s.update(
            &DVector::from_vec(vec![1.0, 0.0, 0.0]),
            1.0,
            &DVector::zeros(1),
        )
        .unwrap();
        assert_abs_diff_eq!(
            s.theta_hat(),
            DVector::from_vec(vec![0.5, 0.0, 0.0]),
            epsilon = 1e-15
        );
        assert_eq!(s.updates(), 1);
    }

    #[test]
    fn zero_action_leaves_estimates() {
        let mut s = SufficientStats::new(2, 2);
        s.update(
            &DVector::from_vec(vec![0.3, 0.4]),
            0.7,
            &DVector::from_vec(vec![0.1, -0.2]),
        )
        .unwrap();
        let (th, ph) = (s.theta_hat(), s.phi_hat());
        s.update(&DVector::zeros(2), 5.0, &DVector::from_vec(vec![3.0, 3.0]))
            .unwrap();
        assert_eq!(s.theta_hat(), th);
        assert_eq!(s.phi_hat(), ph);
    }

    #[test]
    fn dimension_errors() {
        let mut s = SufficientStats::new(2, 2);
        assert!(s
            .update(&DVector::zeros(3), 0.0, &DVector::zeros(2))
            .is_err());
        assert!(s
            .update(&DVector::zeros(2), 0.0, &DVector::zeros(1))
            .is_err());
    }

    #[test]
    fn noiseless_stream_bias_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta = DVector::from_vec(vec![0.6, -0.3, 0.2]);
        let mut s = SufficientStats::new(3, 1);
        for _ in 0..500 {
            let a = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)).normalize();
            s.update(&a, theta.dot(&a), &DVector::zeros(1)).unwrap();
        }
        let lam_min = s.gram().eigenvalues().min();
        assert!((s.theta_hat() - &theta).norm() <= 2.0 * theta.norm() / lam_min);
    }

    #[test]
    fn radius_examples() {
        let s = SufficientStats::new(2, 1);
        let r = confidence_radius(&s, 1, 0.1).unwrap();
        assert_abs_diff_eq!(r, 1.0 + (0.5 * 20f64.ln()).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r, 2.2238734, epsilon = 1e-6);
        // (m+1)/δ = e
        let r = confidence_radius(&s, 1, 2.0 / std::f64::consts::E).unwrap();
        assert_abs_diff_eq!(r, 1.0 + 0.5f64.sqrt(), epsilon = 1e-15);
        let mut s = SufficientStats::new(2, 1);
        s.update(
            &DVector::from_vec(vec![3f64.sqrt(), 0.0]),
            0.0,
            &DVector::zeros(1),
        )
        .unwrap();
        let r = confidence_radius(&s, 1, 0.1).unwrap();
        assert_abs_diff_eq!(
            r,
            1.0 + (0.5 * 20f64.ln() + 0.25 * 4f64.ln()).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(r, 2.3581, epsilon = 1e-4);
        assert!(confidence_radius(&s, 1, 0.0).is_err());
        assert!(confidence_radius(&s, 1, 1.0).is_err());
    }

    #[test]
    fn width_examples() {
        let s = SufficientStats::new(2, 1);
        assert_eq!(width(&s, 2.0, 2.0, &DVector::zeros(2)).unwrap(), 0.0);
        assert_eq!(
            width(&s, 2.0, 2.0, &DVector::from_vec(vec![1.0, 0.0])).unwrap(),
            4.0
        );
        let a = DVector::from_vec(vec![0.3, -0.7]);
        let w1 = width(&s, 1.5, 3.0, &a).unwrap();
        let w2 = width(&s, 1.5, 3.0, &(&a * 2.0)).unwrap();
        assert_abs_diff_eq!(w2, 2.0 * w1, epsilon = 1e-15);
    }

    #[test]
    fn delta_schedule() {
        assert_eq!(delta_t(0.1, 1), 0.05);
        assert_abs_diff_eq!(delta_t(0.1, 3), 0.1 / 12.0);
    }

    #[test]
    fn consistency_examples() {
        let inst = builtin_polygon_instance(4).unwrap();
        let mut s = SufficientStats::new(2, 4);
        s.update(&DVector::from_vec(vec![0.5, 0.2]), 0.1, &DVector::zeros(4))
            .unwrap();
        let omega = confidence_radius(&s, 4, 0.1).unwrap();
        let exact = Estimates {
            theta_hat: inst.theta_star.clone(),
            phi_hat: inst.phi_star.clone(),
            omega,
        };
        assert!(consistency_holds(&exact, &s, &inst));
        let shift = s.v_inv_sqrt().mul_vec(&DVector::from_vec(vec![1.0, 0.0])) * (2.0 * omega);
        let off = Estimates {
            theta_hat: &inst.theta_star + shift,
            ..exact.clone()
        };
        assert!(!consistency_holds(&off, &s, &inst));
    }

    #[test]
    fn recursive_matches_batch_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (d, m) = (3, 2);
        let mut s = SufficientStats::new(d, m);
        let mut log: Vec<(DVector<f64>, f64, DVector<f64>)> = vec![];
        for t in 1..=200 {
            let a = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let r = rng.random_range(-1.0..1.0);
            let sv = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            s.update(&a, r, &sv).unwrap();
            log.push((a, r, sv));
            if t % 25 == 0 {
                // batch: (I + X^T X)^{-1} X^T y solved by LU
                let mut g = DMatrix::<f64>::identity(d, d);
                let mut xr = DVector::zeros(d);
                let mut xs = DMatrix::zeros(d, m);
                for (a, r, sv) in &log {
                    g += a * a.transpose();
                    xr += a * *r;
                    xs += a * sv.transpose();
                }
                let lu = g.lu();
                let th = lu.solve(&xr).unwrap();
                let ph = lu.solve(&xs).unwrap().transpose();
                assert!((th - s.theta_hat()).abs().max() <= 1e-7);
                assert!((ph - s.phi_hat()).abs().max() <= 1e-7);
            }
        }
    }

    #[test]
    fn radius_monotonicity() {
        let mut s = SufficientStats::new(2, 3);
        let mut prev = confidence_radius(&s, 3, 0.1).unwrap();
        for k in 0..50 {
            let a = DVector::from_vec(vec![(k as f64).sin(), (k as f64).cos()]);
            s.update(&a, 0.0, &DVector::zeros(3)).unwrap();
            let r = confidence_radius(&s, 3, 0.1).unwrap();
            assert!(r >= prev);
            assert!(confidence_radius(&s, 3, 0.2).unwrap() <= r);
            prev = r;
        }
    }

    #[test]
    fn elliptical_potential_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for d in [1usize, 2, 5] {
            let mut s = SufficientStats::new(d, 1);
            let mut p = PotentialTracker::default();
            for _ in 0..500 {
                let mut a = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                if a.norm() > 1.0 {
                    a /= a.norm();
                }
                p.record(s.inv_norm(&a).unwrap());
                s.update(&a, 0.0, &DVector::zeros(1)).unwrap();
                p.check(d).unwrap();
            }
        }
    }
}
