//! Per-round decision rules: S-COLTS with its Γ₀ estimation phase, R-COLTS,
//! E-COLTS, and the SAFE-LTS baseline.
//!
//! Each rule is a pure function of a [`RoundContext`] and the perturbed
//! parameters of the round; [`Agent`] owns the state and the noise draws.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimator::{delta_t, Estimates, SufficientStats};
use crate::instance::{Polytope, SlbInstance};
use crate::linalg::{mahalanobis, SymMatrix};
use crate::noise::{
    perturb, BaseMeasure, NoiseDesign, NoiseDraw, PerturbationLaw, PerturbedParams,
};
use crate::optim::{
    round_tolerance, solve_lp, solve_soc, LpResult, ScalingProblem, SocProblem, DEFAULT_CUT_CAP,
};

/// Resolution of the scaling bisection.
pub const SCALING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    SColts,
    RColts,
    EColts,
    SafeLts,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::SColts,
        Algorithm::RColts,
        Algorithm::EColts,
        Algorithm::SafeLts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SColts => "s-colts",
            Algorithm::RColts => "r-colts",
            Algorithm::EColts => "e-colts",
            Algorithm::SafeLts => "safe-lts",
        }
    }

    /// Hard-enforcement methods need a known safe action.
    pub fn needs_safe_action(self) -> bool {
        matches!(self, Algorithm::SColts | Algorithm::SafeLts)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key || a.name().replace('-', "") == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

/// How many perturbed programs R-COLTS solves in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    /// `I_t = 1 + ⌈r log(t(t+1)/δ)⌉`; `r = 0` gives a single draw.
    Order(u32),
    /// A fixed count every round.
    Fixed(usize),
}

impl Resampling {
    pub fn samples(self, t: usize, delta: f64) -> usize {
        match self {
            Resampling::Order(0) => 1,
            Resampling::Order(r) => {
                let t = t.max(1) as f64;
                1 + (r as f64 * (t * (t + 1.0) / delta).ln()).ceil().max(0.0) as usize
            }
            Resampling::Fixed(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub delta: f64,
    pub design: NoiseDesign,
    pub base: BaseMeasure,
    /// Used by R-COLTS only.
    pub resampling: Resampling,
    /// Cutting-plane rounds per SAFE-LTS solve.
    pub cut_cap: usize,
    /// A known margin `Γ₀` for S-COLTS; `None` estimates it by playing
    /// `a_safe` first.
    pub gamma0: Option<f64>,
}

impl AgentConfig {
    /// Coupled `Unif(0.5·𝕊)` noise, `δ = 0.1`, one sample per round.
    pub fn practical(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            delta: 0.1,
            design: NoiseDesign::Coupled,
            base: BaseMeasure::Sphere { radius: 0.5 },
            resampling: Resampling::Fixed(1),
            cut_cap: DEFAULT_CUT_CAP,
            gamma0: None,
        }
    }

    /// Radius `√(3d)` with the confidence budget split as in the guarantees:
    /// `δ/3` for S-COLTS and E-COLTS, `δ/2` with `r = 4` for R-COLTS.
    pub fn theory(algorithm: Algorithm, delta: f64, d: usize) -> Self {
        let split = match algorithm {
            Algorithm::SColts | Algorithm::EColts => 3.0,
            Algorithm::RColts => 2.0,
            Algorithm::SafeLts => 1.0,
        };
        let resampling = if algorithm == Algorithm::RColts {
            Resampling::Order(4)
        } else {
            Resampling::Fixed(1)
        };
        Self {
            algorithm,
            delta: delta / split,
            design: NoiseDesign::Coupled,
            base: BaseMeasure::Sphere {
                radius: (3.0 * d as f64).sqrt(),
            },
            resampling,
            cut_cap: DEFAULT_CUT_CAP,
            gamma0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if let BaseMeasure::Sphere { radius } = self.base {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gamma must be positive, got {radius}"
                )));
            }
        }
        if self.resampling == Resampling::Fixed(0) {
            return Err(Error::InvalidParameter(
                "samples_fixed must be at least 1".into(),
            ));
        }
        if self.cut_cap == 0 {
            return Err(Error::InvalidParameter("cut_cap must be at least 1".into()));
        }
        if let Some(g) = self.gamma0 {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gamma0 must be positive, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// `LIL(t, δ) = sqrt(4t log(max(1, log t)/δ))`.
pub fn lil_bound(t: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    if !(t >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "t must be at least 1, got {t}"
        )));
    }
    Ok((4.0 * t * (t.ln().max(1.0) / delta).ln()).sqrt())
}

/// Upper and lower bands `Av ± width` around the running average slack.
pub fn gamma0_bands(av: &DVector<f64>, width: f64) -> (DVector<f64>, DVector<f64>) {
    (av.add_scalar(width), av.add_scalar(-width))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma0State {
    Running,
    Done(f64),
}

/// Estimates `Γ₀ ∈ [Γ(a_safe)/2, Γ(a_safe)]` from repeated plays of `a_safe`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamma0Estimator {
    sums: DVector<f64>,
    t: usize,
    delta: f64,
    state: Gamma0State,
}

impl Gamma0Estimator {
    pub fn new(m: usize, delta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "need at least one constraint".into(),
            ));
        }
        lil_bound(1.0, delta / m as f64)?;
        Ok(Self {
            sums: DVector::zeros(m),
            t: 0,
            delta,
            state: Gamma0State::Running,
        })
    }

    /// An estimator that starts finished at a supplied `Γ₀`.
    pub fn known(m: usize, delta: f64, gamma0: f64) -> Result<Self> {
        let mut g = Self::new(m, delta)?;
        g.state = Gamma0State::Done(gamma0);
        Ok(g)
    }

    pub fn state(&self) -> Gamma0State {
        self.state
    }
    pub fn pulls(&self) -> usize {
        self.t
    }
    pub fn gamma0(&self) -> Option<f64> {
        match self.state {
            Gamma0State::Done(g) => Some(g),
            Gamma0State::Running => None,
        }
    }

    pub fn running_average(&self) -> DVector<f64> {
        &self.sums / self.t.max(1) as f64
    }

    /// Band half-width `LIL(t, δ/m)/t` after `t` pulls.
    pub fn width(&self, t: usize) -> Result<f64> {
        Ok(lil_bound(t as f64, self.delta / self.sums.len() as f64)? / t as f64)
    }

    /// Folds in the constraint feedback of one play of `a_safe`.
    pub fn step(&mut self, s: &DVector<f64>, alpha: &DVector<f64>) -> Result<Gamma0State> {
        if self.state != Gamma0State::Running {
            return Err(Error::Precondition("Γ₀ estimation already finished".into()));
        }
        check_dim(self.sums.len(), s.len())?;
        check_dim(self.sums.len(), alpha.len())?;
        self.sums += alpha - s;
        self.t += 1;
        let (u, l) = gamma0_bands(&self.running_average(), self.width(self.t)?);
        if l.iter().zip(u.iter()).all(|(l, u)| *l >= u / 2.0) {
            self.state = Gamma0State::Done(l.min());
        }
        Ok(self.state)
    }
}

/// Round-robin exploration set for box domains: the scaled coordinate
/// vertices, or two orthogonal corners for a symmetric square.
pub fn exploration_spanner(domain: &Polytope) -> Result<Vec<DVector<f64>>> {
    if !domain.is_box() {
        return Err(Error::InvalidParameter(
            "exploration needs a box domain".into(),
        ));
    }
    let (lo, hi) = (domain.lower(), domain.upper());
    let d = domain.dim();
    let symmetric = (0..d).all(|j| lo[j] == -hi[j] && hi[j] > 0.0);
    if d == 2 && symmetric && hi[0] == hi[1] {
        let h = hi[0];
        return Ok(vec![
            DVector::from_vec(vec![h, h]),
            DVector::from_vec(vec![h, -h]),
        ]);
    }
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        if lo[j] > 0.0 || hi[j] < 0.0 {
            return Err(Error::InvalidParameter(
                "exploration needs a box containing the origin".into(),
            ));
        }
        let v = if hi[j] >= -lo[j] { hi[j] } else { lo[j] };
        if v == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "box is flat in coordinate {j}"
            )));
        }
        let mut e = DVector::zeros(d);
        e[j] = v;
        out.push(e);
    }
    Ok(out)
}

/// Lowest index attaining the largest finite value.
pub fn best_candidate(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// `B_t ω_t √(dt)`, the E-step budget of E-COLTS.
pub fn ecolts_threshold(b: f64, omega: f64, d: usize, t: usize) -> f64 {
    b * omega * ((d * t) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// S-COLTS plays `a_safe` while estimating Γ₀.
    Gamma0,
    /// E-COLTS exploration step.
    Explore,
    /// Hard-enforcement methods fall back to `a_safe`.
    Fallback,
    /// R-COLTS repeats the previous action when no draw is feasible.
    Repeat,
    /// The action comes from the perturbed (or pessimistic) program.
    Learn,
}

/// Everything a rule needs about the current round.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub t: usize,
    pub est: &'a Estimates,
    pub v_inv: &'a SymMatrix,
    pub v_inv_sqrt: &'a SymMatrix,
    /// `B_t = 1 + max(1, B(δ_t))`.
    pub b_t: f64,
    pub domain: &'a Polytope,
    pub alpha: &'a DVector<f64>,
    pub tol: f64,
}

impl RoundContext<'_> {
    /// `M_t(a) = B_t ω_t ‖a‖_{V^{-1}}`.
    pub fn width(&self, a: &DVector<f64>) -> Result<f64> {
        Ok(self.b_t * self.est.omega * mahalanobis(a, self.v_inv)?)
    }

    /// `a(η, H, t)`: the perturbed program.
    pub fn perturbed_program(&self, pp: &PerturbedParams) -> Result<LpResult> {
        solve_lp(
            &pp.theta_tilde,
            self.domain,
            &pp.phi_tilde,
            self.alpha,
            self.tol,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub action: DVector<f64>,
    pub kind: StepKind,
    /// The perturbed program of the round, when it was solved.
    pub candidate: Option<LpResult>,
    pub rho: Option<f64>,
    pub degraded: bool,
}

impl Step {
    fn new(action: DVector<f64>, kind: StepKind, candidate: Option<LpResult>) -> Self {
        Self {
            action,
            kind,
            candidate,
            rho: None,
            degraded: false,
        }
    }
}

/// S-COLTS after the Γ₀ phase: gate on `M_t(a_safe)`, solve the perturbed
/// program, then scale its optimiser towards `a_safe` until the pessimistic
/// constraints certify it.
pub fn scolts_step(
    ctx: &RoundContext<'_>,
    gamma0: f64,
    a_safe: &DVector<f64>,
    pp: &PerturbedParams,
) -> Result<Step> {
    if ctx.width(a_safe)? > gamma0 / 3.0 {
        return Ok(Step::new(a_safe.clone(), StepKind::Fallback, None));
    }
    let cand = ctx.perturbed_program(pp)?;
    let b = match &cand {
        LpResult::Infeasible => {
            return Ok(Step::new(a_safe.clone(), StepKind::Fallback, Some(cand)))
        }
        LpResult::Optimal { x, .. } => x.clone(),
    };
    let sp = ScalingProblem::new(
        &ctx.est.phi_hat,
        ctx.alpha,
        ctx.est.omega,
        ctx.v_inv,
        a_safe,
        &b,
    )?;
    if sp.gap(0.0) > 0.0 {
        return Ok(Step::new(a_safe.clone(), StepKind::Fallback, Some(cand)));
    }
    let rho = sp.max_rho(SCALING_TOL)?;
    let gap = sp.gap(rho);
    if gap > SCALING_TOL {
        return Err(Error::Precondition(format!(
            "scaled action is not certified (gap {gap:e})"
        )));
    }
    let action = a_safe * (1.0 - rho) + b * rho;
    Ok(Step {
        action,
        kind: StepKind::Learn,
        candidate: Some(cand),
        rho: Some(rho),
        degraded: false,
    })
}

/// R-COLTS: the optimiser of the draw with the largest perturbed value, or
/// the previous action when every draw is infeasible. Returns the index of
/// the winning draw (0 when none is feasible).
pub fn rcolts_step(
    ctx: &RoundContext<'_>,
    draws: &[PerturbedParams],
    last_action: &DVector<f64>,
) -> Result<(Step, usize)> {
    let mut results = Vec::with_capacity(draws.len());
    for pp in draws {
        results.push(ctx.perturbed_program(pp)?);
    }
    let values: Vec<f64> = results.iter().map(LpResult::value).collect();
    Ok(match best_candidate(&values) {
        None => (
            Step::new(
                last_action.clone(),
                StepKind::Repeat,
                results.into_iter().next(),
            ),
            0,
        ),
        Some(i) => {
            let cand = results.swap_remove(i);
            (
                Step::new(
                    cand.x().cloned().unwrap_or_else(|| last_action.clone()),
                    StepKind::Learn,
                    Some(cand),
                ),
                i,
            )
        }
    })
}

/// E-COLTS: explore while the E-step count `u_prev` is within `threshold` or
/// the perturbed program is infeasible.
pub fn ecolts_step(
    ctx: &RoundContext<'_>,
    pp: &PerturbedParams,
    u_prev: usize,
    threshold: f64,
    explore: &DVector<f64>,
) -> Result<Step> {
    let cand = ctx.perturbed_program(pp)?;
    if (u_prev as f64) <= threshold {
        return Ok(Step::new(explore.clone(), StepKind::Explore, Some(cand)));
    }
    match cand.x().cloned() {
        Some(x) => Ok(Step::new(x, StepKind::Learn, Some(cand))),
        None => Ok(Step::new(explore.clone(), StepKind::Explore, Some(cand))),
    }
}

/// SAFE-LTS: perturbed objective over the pessimistic cone constraints.
/// Only `pp.theta_tilde` is read.
pub fn safelts_step(
    ctx: &RoundContext<'_>,
    pp: &PerturbedParams,
    a_safe: &DVector<f64>,
    cut_cap: usize,
) -> Result<Step> {
    let prob = SocProblem {
        c: &pp.theta_tilde,
        dom: ctx.domain,
        phi_hat: &ctx.est.phi_hat,
        alpha: ctx.alpha,
        omega: ctx.est.omega,
        v_inv_sqrt: ctx.v_inv_sqrt,
        anchor: a_safe,
        tol: ctx.tol,
        cut_cap,
    };
    if prob.max_violation(a_safe) > 0.0 {
        return Ok(Step::new(a_safe.clone(), StepKind::Fallback, None));
    }
    let sol = solve_soc(&prob)?;
    Ok(match sol.result {
        LpResult::Infeasible => Step::new(a_safe.clone(), StepKind::Fallback, None),
        LpResult::Optimal { x, .. } => Step {
            action: x,
            kind: StepKind::Learn,
            candidate: None,
            rho: None,
            degraded: sol.degraded,
        },
    })
}

/// The agent's choice for one round with the quantities the simulator needs
/// for instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub t: usize,
    pub action: DVector<f64>,
    pub kind: StepKind,
    pub estimates: Estimates,
    pub b_t: f64,
    /// The perturbed parameters behind the action (the winning draw for
    /// R-COLTS); `None` in the Γ₀ phase.
    pub perturbed: Option<PerturbedParams>,
    /// The perturbed program for `perturbed`, when the rule solved it.
    pub candidate: Option<LpResult>,
    pub samples: usize,
    pub rho: Option<f64>,
    pub degraded: bool,
}

/// Runtime state of one learner. The agent only sees the domain, the
/// constraint levels and `a_safe`, never the true parameters.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    law: PerturbationLaw,
    domain: Polytope,
    alpha: DVector<f64>,
    a_safe: Option<DVector<f64>>,
    stats: SufficientStats,
    gamma0: Option<Gamma0Estimator>,
    gamma0_pending: bool,
    u_explore: usize,
    last_action: DVector<f64>,
    spanner: Vec<DVector<f64>>,
    spanner_index: usize,
}

impl Agent {
    pub fn new(
        domain: Polytope,
        alpha: DVector<f64>,
        a_safe: Option<DVector<f64>>,
        config: AgentConfig,
    ) -> Result<Self> {
        config.validate()?;
        let (d, m) = (domain.dim(), alpha.len());
        let law = PerturbationLaw::new(config.design, config.base, d, m)?;
        if config.algorithm.needs_safe_action() && a_safe.is_none() {
            return Err(Error::InvalidParameter(format!(
                "{} needs a_safe",
                config.algorithm
            )));
        }
        if let Some(a) = &a_safe {
            check_dim(d, a.len())?;
        }
        let gamma0 = match config.algorithm {
            Algorithm::SColts => Some(match config.gamma0 {
                Some(g) => Gamma0Estimator::known(m, config.delta, g)?,
                None => Gamma0Estimator::new(m, config.delta)?,
            }),
            _ => None,
        };
        let spanner = match config.algorithm {
            Algorithm::EColts => exploration_spanner(&domain)?,
            _ => Vec::new(),
        };
        let last_action = domain.feasible_point()?;
        Ok(Self {
            config,
            law,
            stats: SufficientStats::new(d, m),
            domain,
            alpha,
            a_safe,
            gamma0,
            gamma0_pending: false,
            u_explore: 0,
            last_action,
            spanner,
            spanner_index: 0,
        })
    }

    /// Builds an agent from the public parts of an instance.
    pub fn for_instance(inst: &SlbInstance, config: AgentConfig) -> Result<Self> {
        Self::new(
            inst.domain.clone(),
            inst.alpha.clone(),
            inst.a_safe.clone(),
            config,
        )
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }
    pub fn law(&self) -> &PerturbationLaw {
        &self.law
    }
    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }
    pub fn gamma0(&self) -> Option<&Gamma0Estimator> {
        self.gamma0.as_ref()
    }
    pub fn explore_count(&self) -> usize {
        self.u_explore
    }
    pub fn last_action(&self) -> &DVector<f64> {
        &self.last_action
    }
    /// The round about to be decided.
    pub fn round(&self) -> usize {
        self.stats.updates() + 1
    }

    pub fn decide<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Decision> {
        let law = self.law;
        self.decide_with(&mut || law.sample_noise(rng))
    }

    /// As [`Agent::decide`] with noise drawn from `source`.
    pub fn decide_with(&mut self, source: &mut dyn FnMut() -> NoiseDraw) -> Result<Decision> {
        let t = self.round();
        let delta = self.config.delta;
        let est = self.stats.estimates(delta)?;
        let b_t = self.law.width_scale(delta_t(delta, t))?;
        let ctx = RoundContext {
            t,
            est: &est,
            v_inv: self.stats.v_inv(),
            v_inv_sqrt: self.stats.v_inv_sqrt(),
            b_t,
            domain: &self.domain,
            alpha: &self.alpha,
            tol: round_tolerance(t),
        };
        let mut samples = 1;
        let (step, perturbed) = match self.config.algorithm {
            Algorithm::SColts => {
                let a_safe = self.a_safe.as_ref().expect("checked in Agent::new");
                let g = self.gamma0.as_ref().expect("checked in Agent::new");
                match g.gamma0() {
                    None => {
                        self.gamma0_pending = true;
                        samples = 0;
                        (Step::new(a_safe.clone(), StepKind::Gamma0, None), None)
                    }
                    Some(g0) => {
                        let pp = perturb(&est, &self.stats, &source())?;
                        (scolts_step(&ctx, g0, a_safe, &pp)?, Some(pp))
                    }
                }
            }
            Algorithm::RColts => {
                samples = self.config.resampling.samples(t, delta);
                let mut draws = Vec::with_capacity(samples);
                for _ in 0..samples {
                    draws.push(perturb(&est, &self.stats, &source())?);
                }
                let (step, i) = rcolts_step(&ctx, &draws, &self.last_action)?;
                (step, Some(draws.swap_remove(i)))
            }
            Algorithm::EColts => {
                let pp = perturb(&est, &self.stats, &source())?;
                let b_alg = 1.0 + self.law.concentration_B(delta_t(delta, t))?;
                let threshold = ecolts_threshold(b_alg, est.omega, self.domain.dim(), t);
                let explore = &self.spanner[self.spanner_index % self.spanner.len()];
                let step = ecolts_step(&ctx, &pp, self.u_explore, threshold, explore)?;
                if step.kind == StepKind::Explore {
                    self.u_explore += 1;
                    self.spanner_index = (self.spanner_index + 1) % self.spanner.len();
                }
                (step, Some(pp))
            }
            Algorithm::SafeLts => {
                let a_safe = self.a_safe.as_ref().expect("checked in Agent::new");
                let draw = source();
                let objective_only = NoiseDraw {
                    eta: draw.eta,
                    h: DMatrix::zeros(self.alpha.len(), self.domain.dim()),
                };
                let pp = perturb(&est, &self.stats, &objective_only)?;
                (
                    safelts_step(&ctx, &pp, a_safe, self.config.cut_cap)?,
                    Some(pp),
                )
            }
        };
        self.last_action = step.action.clone();
        Ok(Decision {
            t,
            action: step.action,
            kind: step.kind,
            estimates: est,
            b_t,
            perturbed,
            candidate: step.candidate,
            samples,
            rho: step.rho,
            degraded: step.degraded,
        })
    }

    /// Feedback for the action just played.
    pub fn observe(&mut self, a: &DVector<f64>, reward: f64, s: &DVector<f64>) -> Result<()> {
        self.stats.update(a, reward, s)?;
        if self.gamma0_pending {
            self.gamma0_pending = false;
            if let Some(g) = self.gamma0.as_mut() {
                g.step(s, &self.alpha)?;
            }
        }
        Ok(())
    }
}
