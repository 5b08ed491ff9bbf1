//! Perturbation laws for the estimates: the coupled design (one draw shifts
//! the objective up and every constraint row down) and the decoupled
//! ablation, over sphere or Gaussian base measures.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::{Estimates, SufficientStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDesign {
    Coupled,
    Decoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BaseMeasure {
    /// Uniform on the sphere of the given radius.
    Sphere { radius: f64 },
    /// Standard normal coordinates.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationLaw {
    pub design: NoiseDesign,
    pub base: BaseMeasure,
    pub d: usize,
    pub m: usize,
}

/// One draw `(η, H)`: `eta` is the objective shift, `h` the `m × d` row shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub eta: DVector<f64>,
    pub h: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedParams {
    pub theta_tilde: DVector<f64>,
    pub phi_tilde: DMatrix<f64>,
}

impl PerturbationLaw {
    pub fn new(design: NoiseDesign, base: BaseMeasure, d: usize, m: usize) -> Result<Self> {
        if let BaseMeasure::Sphere { radius } = base {
            if !(radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sphere radius must be positive, got {radius}"
                )));
            }
        }
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { design, base, d, m })
    }

    /// Coupled sphere law with radius `√(3d)`, the analysed setting.
    pub fn theory(d: usize, m: usize) -> Self {
        Self {
            design: NoiseDesign::Coupled,
            base: BaseMeasure::Sphere {
                radius: (3.0 * d as f64).sqrt(),
            },
            d,
            m,
        }
    }

    /// Coupled sphere law with radius 0.5, used for the experiments.
    pub fn practical(d: usize, m: usize) -> Self {
        Self {
            design: NoiseDesign::Coupled,
            base: BaseMeasure::Sphere { radius: 0.5 },
            d,
            m,
        }
    }

    pub fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.d, |_, _| rng.sample::<f64, _>(StandardNormal));
        match self.base {
            BaseMeasure::Gaussian => z,
            BaseMeasure::Sphere { radius } => {
                let n = z.norm();
                if n == 0.0 {
                    let mut e = DVector::zeros(self.d);
                    e[0] = radius;
                    e
                } else {
                    z * (radius / n)
                }
            }
        }
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseDraw {
        let eta = self.sample_base(rng);
        let h = match self.design {
            NoiseDesign::Coupled => DMatrix::from_fn(self.m, self.d, |_, j| -eta[j]),
            NoiseDesign::Decoupled => {
                let mut h = DMatrix::zeros(self.m, self.d);
                for i in 0..self.m {
                    let row = self.sample_base(rng);
                    h.set_row(i, &row.transpose());
                }
                h
            }
        };
        NoiseDraw { eta, h }
    }

    /// `B(ξ)`: a level exceeded by the draw norms with probability at most ξ.
    #[allow(non_snake_case)]
    pub fn concentration_B(&self, xi: f64) -> Result<f64> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "xi must lie in (0, 1], got {xi}"
            )));
        }
        Ok(match self.base {
            BaseMeasure::Sphere { radius } => radius,
            BaseMeasure::Gaussian => (self.d as f64).sqrt() + (2.0 * (1.0 / xi).ln()).sqrt(),
        })
    }

    /// `B_t = 1 + max(1, B(δ_t))`.
    pub fn width_scale(&self, delta_t: f64) -> Result<f64> {
        Ok(1.0 + self.concentration_B(delta_t)?.max(1.0))
    }
}

/// `θ̃ = θ̂ + ω V^{-1/2} η` and `Φ̃ = Φ̂ + ω H V^{-1/2}`.
pub fn perturb(
    est: &Estimates,
    stats: &SufficientStats,
    draw: &NoiseDraw,
) -> Result<PerturbedParams> {
    let d = stats.dim();
    check_dim(d, est.theta_hat.len())?;
    check_dim(d, draw.eta.len())?;
    check_dim(d, draw.h.ncols())?;
    check_dim(est.phi_hat.nrows(), draw.h.nrows())?;
    let w = stats.v_inv_sqrt().as_matrix();
    Ok(PerturbedParams {
        theta_tilde: &est.theta_hat + (w * &draw.eta) * est.omega,
        phi_tilde: &est.phi_hat + (&draw.h * w) * est.omega,
    })
}
