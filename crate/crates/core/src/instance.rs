//! Ground-truth safe linear bandit instances and the two benchmark families.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::optim::{solve_lp, LpResult};

const ROW_NORM_SLACK: f64 = 1e-12;
/// Tolerance used when solving the true program.
pub const TRUTH_TOL: f64 = 1e-9;

/// `{a : lower <= a <= upper, lhs a <= rhs}`. Infinite box bounds are
/// allowed as long as the general rows bound the coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    lower: DVector<f64>,
    upper: DVector<f64>,
    lhs: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl Polytope {
    pub fn new(
        lower: DVector<f64>,
        upper: DVector<f64>,
        lhs: DMatrix<f64>,
        rhs: DVector<f64>,
    ) -> Result<Self> {
        let d = lower.len();
        check_dim(d, upper.len())?;
        if lhs.nrows() > 0 {
            check_dim(d, lhs.ncols())?;
        }
        check_dim(lhs.nrows(), rhs.len())?;
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| l > u || l.is_nan() || u.is_nan())
        {
            return Err(Error::InvalidParameter(
                "box bounds must satisfy lower <= upper".into(),
            ));
        }
        let lhs = if lhs.nrows() == 0 {
            DMatrix::zeros(0, d)
        } else {
            lhs
        };
        Ok(Self {
            lower,
            upper,
            lhs,
            rhs,
        })
    }

    pub fn boxed(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let d = lower.len();
        Self::new(lower, upper, DMatrix::zeros(0, d), DVector::zeros(0))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }
    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
    pub fn lhs(&self) -> &DMatrix<f64> {
        &self.lhs
    }
    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// True when the polytope is a finite box with no general rows.
    pub fn is_box(&self) -> bool {
        self.lhs.nrows() == 0
            && self
                .lower
                .iter()
                .chain(self.upper.iter())
                .all(|v| v.is_finite())
    }

    /// Largest amount by which `a` violates any bound or row (<= 0 inside).
    pub fn max_violation(&self, a: &DVector<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..self.dim() {
            worst = worst.max(self.lower[j] - a[j]).max(a[j] - self.upper[j]);
        }
        if self.lhs.nrows() > 0 {
            let r = &self.lhs * a - &self.rhs;
            worst = r.iter().fold(worst, |w, &v| w.max(v));
        }
        worst
    }

    pub fn contains(&self, a: &DVector<f64>, tol: f64) -> bool {
        a.len() == self.dim() && self.max_violation(a) <= tol
    }

    /// A deterministic feasible point (the phase-1 vertex of the zero objective).
    pub fn feasible_point(&self) -> Result<DVector<f64>> {
        let zero = DVector::zeros(self.dim());
        match solve_lp(
            &zero,
            self,
            &DMatrix::zeros(0, self.dim()),
            &DVector::zeros(0),
            TRUTH_TOL,
        )? {
            LpResult::Optimal { x, .. } => Ok(x),
            LpResult::Infeasible => Err(Error::InfeasibleInstance),
        }
    }

    /// Checks nonemptiness and boundedness by solving `max ±e_j`.
    pub fn validate(&self) -> Result<()> {
        let none = DMatrix::zeros(0, self.dim());
        let empty = DVector::zeros(0);
        for j in 0..self.dim() {
            for sign in [1.0, -1.0] {
                let mut c = DVector::zeros(self.dim());
                c[j] = sign;
                if let LpResult::Infeasible = solve_lp(&c, self, &none, &empty, TRUTH_TOL)? {
                    return Err(Error::InfeasibleInstance);
                }
            }
        }
        Ok(())
    }
}

/// The true objective and constraints of a safe linear bandit, along with the
/// known domain and (optionally) a known safe action.
#[derive(Debug, Clone, PartialEq)]
pub struct SlbInstance {
    pub name: String,
    pub theta_star: DVector<f64>,
    pub phi_star: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub domain: Polytope,
    pub a_safe: Option<DVector<f64>>,
    pub obs_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSolution {
    pub a_star: DVector<f64>,
    pub value_star: f64,
    /// `Γ(a_safe)` when a safe action is given.
    pub gamma_safe: Option<f64>,
}

impl SlbInstance {
    /// Validates every instance invariant, including feasibility of the true
    /// program via an LP.
    pub fn new(
        name: impl Into<String>,
        theta_star: DVector<f64>,
        phi_star: DMatrix<f64>,
        alpha: DVector<f64>,
        domain: Polytope,
        a_safe: Option<DVector<f64>>,
        obs_sigma: f64,
    ) -> Result<Self> {
        let d = domain.dim();
        check_dim(d, theta_star.len())?;
        check_dim(d, phi_star.ncols())?;
        check_dim(phi_star.nrows(), alpha.len())?;
        if phi_star.nrows() == 0 {
            return Err(Error::InvalidParameter(
                "need at least one unknown constraint".into(),
            ));
        }
        if theta_star.norm() > 1.0 + ROW_NORM_SLACK {
            return Err(Error::InvalidParameter(format!(
                "|theta*| = {} exceeds 1",
                theta_star.norm()
            )));
        }
        for (i, row) in phi_star.row_iter().enumerate() {
            if row.norm() > 1.0 + ROW_NORM_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "row {i} of phi* has norm {}",
                    row.norm()
                )));
            }
        }
        if !(obs_sigma >= 0.0) {
            return Err(Error::InvalidParameter(
                "obs_sigma must be nonnegative".into(),
            ));
        }
        domain.validate()?;
        if domain.is_box() {
            let corner = domain
                .lower()
                .zip_map(domain.upper(), |l, u| l.abs().max(u.abs()));
            if corner.norm() > 1.0 + ROW_NORM_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "box domain reaches norm {} > 1",
                    corner.norm()
                )));
            }
        }
        let inst = Self {
            name: name.into(),
            theta_star,
            phi_star,
            alpha,
            domain,
            a_safe,
            obs_sigma,
        };
        if let Some(a) = &inst.a_safe {
            check_dim(d, a.len())?;
            if !inst.domain.contains(a, 1e-9) {
                return Err(Error::InvalidParameter(
                    "a_safe lies outside the domain".into(),
                ));
            }
            if safety_margin(&inst, a) <= 0.0 {
                return Err(Error::InvalidParameter(
                    "a_safe must have a positive safety margin".into(),
                ));
            }
        }
        optimal_action(&inst)?;
        Ok(inst)
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.alpha.len()
    }

    /// Worst true constraint violation `max_i (Phi* a - alpha)^i` (signed).
    pub fn constraint_excess(&self, a: &DVector<f64>) -> f64 {
        (&self.phi_star * a - &self.alpha).max()
    }
}

/// Solves the true program `max θ*ᵀa s.t. Φ*a ≤ α, a ∈ 𝒜`.
pub fn optimal_action(inst: &SlbInstance) -> Result<InstanceSolution> {
    match solve_lp(
        &inst.theta_star,
        &inst.domain,
        &inst.phi_star,
        &inst.alpha,
        TRUTH_TOL,
    )? {
        LpResult::Infeasible => Err(Error::InfeasibleInstance),
        LpResult::Optimal { x, .. } => {
            let value_star = inst.theta_star.dot(&x);
            let gamma_safe = inst.a_safe.as_ref().map(|a| safety_margin(inst, a));
            Ok(InstanceSolution {
                a_star: x,
                value_star,
                gamma_safe,
            })
        }
    }
}

/// `Δ(a) = θ*ᵀ(a* − a)`; negative for superoptimal (infeasible) actions.
pub fn reward_gap(inst: &SlbInstance, sol: &InstanceSolution, a: &DVector<f64>) -> f64 {
    sol.value_star - inst.theta_star.dot(a)
}

/// `Γ(a) = (min_i (α − Φ*a)^i)_+`.
pub fn safety_margin(inst: &SlbInstance, a: &DVector<f64>) -> f64 {
    (-inst.constraint_excess(a)).max(0.0)
}

pub const BOX_INSTANCE_DIM: usize = 9;

/// The `d = m = 9` box benchmark: `θ* = 1/√d`, `𝒜 = [0, 1/√d]^d`, constraint
/// levels `0.8/√d`, with a seeded 60%-dense 0/1 matrix (unit-norm rows)
/// standing in for the sparse-collection adjacency matrix.
pub fn builtin_box_instance(seed: u64) -> Result<SlbInstance> {
    let d = BOX_INSTANCE_DIM;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = DMatrix::zeros(d, d);
    for i in 0..d {
        loop {
            for j in 0..d {
                phi[(i, j)] = if rng.random_bool(0.6) { 1.0 } else { 0.0 };
            }
            let n = phi.row(i).norm();
            if n > 0.0 {
                for j in 0..d {
                    phi[(i, j)] /= n;
                }
                break;
            }
        }
    }
    let s = 1.0 / (d as f64).sqrt();
    SlbInstance::new(
        format!("box9-s{seed}"),
        DVector::from_element(d, s),
        phi,
        DVector::from_element(d, 0.8 * s),
        Polytope::boxed(DVector::zeros(d), DVector::from_element(d, s))?,
        Some(DVector::zeros(d)),
        1.0,
    )
}

/// Circumradius of the polygon benchmark; one vertex sits at `(R, 0)`.
pub const POLYGON_RADIUS: f64 = 0.2 / SQRT_2;

/// The `d = 2` benchmark: `θ* = (1, 0)`, `𝒜 = [−1/√2, 1/√2]²`, unknown
/// constraints the edges of a regular `m`-gon centred at the origin with a
/// vertex at `(R, 0)`. `m = 1` gives the single half-plane `a₁ ≤ R`.
pub fn builtin_polygon_instance(m: usize) -> Result<SlbInstance> {
    if m == 0 || m == 2 {
        return Err(Error::InvalidParameter(format!(
            "polygon needs m = 1 or m >= 3, got {m}"
        )));
    }
    let (phi, alpha) = if m == 1 {
        (
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_element(1, POLYGON_RADIUS),
        )
    } else {
        let apothem = POLYGON_RADIUS * (PI / m as f64).cos();
        let phi = DMatrix::from_fn(m, 2, |k, j| {
            let angle = PI * (2 * k + 1) as f64 / m as f64;
            if j == 0 {
                angle.cos()
            } else {
                angle.sin()
            }
        });
        (phi, DVector::from_element(m, apothem))
    };
    let h = 1.0 / SQRT_2;
    SlbInstance::new(
        format!("polygon-m{m}"),
        DVector::from_vec(vec![1.0, 0.0]),
        phi,
        alpha,
        Polytope::boxed(DVector::from_element(2, -h), DVector::from_element(2, h))?,
        Some(DVector::zeros(2)),
        1.0,
    )
}

/// Resolves a builtin by name: `box9` (uses `seed`) or `polygon` (uses `m`).
pub fn builtin(name: &str, seed: u64, m: usize) -> Result<SlbInstance> {
    match name {
        "box9" | "box" => builtin_box_instance(seed),
        "polygon" => builtin_polygon_instance(m),
        other => Err(Error::InvalidParameter(format!(
            "unknown builtin instance '{other}'"
        ))),
    }
}

/// Key-value text form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    name: String,
    d: usize,
    m: usize,
    sigma: f64,
    theta: Vec<f64>,
    phi: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(default)]
    domain_lhs: Vec<Vec<f64>>,
    #[serde(default)]
    domain_rhs: Vec<f64>,
    #[serde(default)]
    a_safe: Option<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_of(rows: &[Vec<f64>], cols: usize) -> Result<DMatrix<f64>> {
    for r in rows {
        check_dim(cols, r.len())?;
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl SlbInstance {
    pub fn to_text(&self) -> String {
        let f = InstanceFile {
            name: self.name.clone(),
            d: self.dim(),
            m: self.num_constraints(),
            sigma: self.obs_sigma,
            theta: self.theta_star.iter().copied().collect(),
            phi: rows_of(&self.phi_star),
            alpha: self.alpha.iter().copied().collect(),
            lower: self.domain.lower.iter().copied().collect(),
            upper: self.domain.upper.iter().copied().collect(),
            domain_lhs: rows_of(&self.domain.lhs),
            domain_rhs: self.domain.rhs.iter().copied().collect(),
            a_safe: self.a_safe.as_ref().map(|a| a.iter().copied().collect()),
        };
        toml::to_string(&f).expect("instance fields are always serializable")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let f: InstanceFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        check_dim(f.d, f.theta.len())?;
        check_dim(f.m, f.alpha.len())?;
        check_dim(f.m, f.phi.len())?;
        let domain = Polytope::new(
            DVector::from_vec(f.lower),
            DVector::from_vec(f.upper),
            matrix_of(&f.domain_lhs, f.d)?,
            DVector::from_vec(f.domain_rhs),
        )?;
        SlbInstance::new(
            f.name,
            DVector::from_vec(f.theta),
            matrix_of(&f.phi, f.d)?,
            DVector::from_vec(f.alpha),
            domain,
            f.a_safe.map(DVector::from_vec),
            f.sigma,
        )
    }
}
