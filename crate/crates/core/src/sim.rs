//! The environment loop: feedback, regret and risk accounting, event
//! instrumentation and decision timing.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algorithms::{Agent, AgentConfig, Algorithm, Decision, StepKind};
use crate::error::{Error, Result};
use crate::estimator::{consistency_holds, Estimates, PotentialTracker, SufficientStats};
use crate::events::{evaluate, EventFlags};
use crate::instance::{optimal_action, reward_gap, SlbInstance};
use crate::optim::{round_tolerance, solve_lp};

/// Slack for domain membership and for true safety of certified actions.
pub const CONTRACT_TOL: f64 = 1e-6;

/// Constraint excess at or below this counts as zero risk (round-off on
/// boundary actions).
pub const RISK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub horizon: usize,
    /// Evaluate the event flags every round (one extra LP for some rules).
    pub instrument: bool,
    /// Keep every `thin`-th round record plus the last; 0 keeps none.
    pub thin: usize,
}

impl RunConfig {
    pub fn new(agent: AgentConfig, horizon: usize) -> Self {
        Self {
            agent,
            horizon,
            instrument: false,
            thin: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub action: DVector<f64>,
    pub regret: f64,
    pub risk: f64,
    pub cum_regret: f64,
    pub cum_risk: f64,
    pub flags: Option<EventFlags>,
    pub wall_ns: u64,
    pub kind: StepKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub gamma0: usize,
    pub explore: usize,
    pub fallback: usize,
    pub repeat: usize,
    pub learn: usize,
}

impl StepCounts {
    fn add(&mut self, kind: StepKind) {
        match kind {
            StepKind::Gamma0 => self.gamma0 += 1,
            StepKind::Explore => self.explore += 1,
            StepKind::Fallback => self.fallback += 1,
            StepKind::Repeat => self.repeat += 1,
            StepKind::Learn => self.learn += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub algorithm: String,
    pub instance: String,
    pub horizon: usize,
    pub regret: f64,
    pub risk: f64,
    pub wall_ns_total: u64,
    pub wall_ns_per_round: f64,
    /// Event rates over the instrumented rounds.
    pub rate_local: Option<f64>,
    pub rate_global: Option<f64>,
    pub rate_unsat: Option<f64>,
    pub rate_consistent: Option<f64>,
    pub instrumented_rounds: usize,
    /// Rounds breaking `local ⟹ global` or `(local ∧ consistent) ⟹ unsaturated`.
    pub containment_violations: usize,
    pub steps: StepCounts,
    pub degraded_rounds: usize,
    pub gamma0: Option<f64>,
    pub gamma0_pulls: Option<usize>,
    pub potential: PotentialTracker,
}

/// Something that picks actions and learns from feedback.
pub trait Policy {
    fn label(&self) -> String;
    fn stats(&self) -> &SufficientStats;
    fn decide(&mut self, rng: &mut ChaCha8Rng) -> Result<Decision>;
    fn observe(&mut self, a: &DVector<f64>, reward: f64, s: &DVector<f64>) -> Result<()>;
    /// Whether certified actions must be truly safe under consistency.
    fn hard_enforcement(&self) -> bool {
        false
    }
    fn gamma0(&self) -> Option<(f64, usize)> {
        None
    }
}

impl Policy for Agent {
    fn label(&self) -> String {
        self.config().algorithm.name().to_string()
    }
    fn stats(&self) -> &SufficientStats {
        Agent::stats(self)
    }
    fn decide(&mut self, rng: &mut ChaCha8Rng) -> Result<Decision> {
        Agent::decide(self, rng)
    }
    fn observe(&mut self, a: &DVector<f64>, reward: f64, s: &DVector<f64>) -> Result<()> {
        Agent::observe(self, a, reward, s)
    }
    fn hard_enforcement(&self) -> bool {
        self.config().algorithm.needs_safe_action()
    }
    fn gamma0(&self) -> Option<(f64, usize)> {
        let g = Agent::gamma0(self)?;
        Some((g.gamma0()?, g.pulls()))
    }
}

/// Plays the same action every round.
#[derive(Debug, Clone)]
pub struct FixedAction {
    action: DVector<f64>,
    stats: SufficientStats,
}

impl FixedAction {
    pub fn new(action: DVector<f64>, m: usize) -> Self {
        let d = action.len();
        Self {
            action,
            stats: SufficientStats::new(d, m),
        }
    }
}

impl Policy for FixedAction {
    fn label(&self) -> String {
        "fixed".into()
    }
    fn stats(&self) -> &SufficientStats {
        &self.stats
    }
    fn decide(&mut self, _rng: &mut ChaCha8Rng) -> Result<Decision> {
        Ok(Decision {
            t: self.stats.updates() + 1,
            action: self.action.clone(),
            kind: StepKind::Learn,
            estimates: Estimates {
                theta_hat: self.stats.theta_hat(),
                phi_hat: self.stats.phi_hat(),
                omega: 0.0,
            },
            b_t: 0.0,
            perturbed: None,
            candidate: None,
            samples: 0,
            rho: None,
            degraded: false,
        })
    }
    fn observe(&mut self, a: &DVector<f64>, reward: f64, s: &DVector<f64>) -> Result<()> {
        self.stats.update(a, reward, s)
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_nanos() as u64)
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, u64) {
    (f(), 0)
}

/// Environment and agent randomness come from independent streams of the
/// same seed.
pub fn episode_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let env = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = ChaCha8Rng::seed_from_u64(seed);
    agent.set_stream(1);
    (env, agent)
}

/// Runs one episode of `cfg.agent` on `inst`.
pub fn run_episode(
    inst: &SlbInstance,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(RunSummary, Vec<RoundRecord>)> {
    let mut agent = Agent::for_instance(inst, cfg.agent.clone())?;
    run_policy(
        inst,
        &mut agent,
        cfg.horizon,
        cfg.instrument,
        cfg.thin,
        seed,
    )
}

/// Runs any policy for `horizon` rounds.
pub fn run_policy(
    inst: &SlbInstance,
    policy: &mut dyn Policy,
    horizon: usize,
    instrument: bool,
    thin: usize,
    seed: u64,
) -> Result<(RunSummary, Vec<RoundRecord>)> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let sol = optimal_action(inst)?;
    let (d, m) = (inst.dim(), inst.num_constraints());
    let (mut env_rng, mut agent_rng) = episode_rngs(seed);
    let sigma = inst.obs_sigma;

    let mut records = Vec::new();
    let mut potential = PotentialTracker::default();
    let mut steps = StepCounts::default();
    let (mut cum_regret, mut cum_risk) = (0.0, 0.0);
    let mut wall_total = 0u64;
    let mut degraded = 0usize;
    let mut counts = [0usize; 4];
    let mut instrumented = 0usize;
    let mut containment_violations = 0usize;

    for t in 1..=horizon {
        let (dec, wall) = timed(|| policy.decide(&mut agent_rng));
        let dec = dec?;
        wall_total += wall;
        let a = &dec.action;

        let outside = inst.domain.max_violation(a);
        if outside > CONTRACT_TOL || a.len() != d {
            return Err(Error::ActionOutsideDomain {
                round: t,
                excess: outside,
            });
        }

        let excess = inst.constraint_excess(a);
        let check_safety = policy.hard_enforcement() && dec.kind != StepKind::Gamma0;
        let consistent = if instrument || check_safety {
            Some(consistency_holds(&dec.estimates, policy.stats(), inst))
        } else {
            None
        };
        if check_safety && consistent == Some(true) && excess > CONTRACT_TOL {
            return Err(Error::SafetyViolation { round: t, excess });
        }

        let flags = match (&dec.perturbed, instrument) {
            (Some(pp), true) => {
                let program = match &dec.candidate {
                    Some(p) => p.clone(),
                    None => solve_lp(
                        &pp.theta_tilde,
                        &inst.domain,
                        &pp.phi_tilde,
                        &inst.alpha,
                        round_tolerance(t),
                    )?,
                };
                let stats = policy.stats();
                let scale = dec.b_t * dec.estimates.omega;
                let f = evaluate(inst, &sol, pp, &program, consistent.unwrap_or(false), |x| {
                    Ok(scale * stats.inv_norm(x)?)
                })?;
                instrumented += 1;
                for (c, flag) in counts.iter_mut().zip([
                    f.local_optimism,
                    f.global_optimism,
                    f.unsaturated,
                    f.consistent,
                ]) {
                    *c += flag as usize;
                }
                if !f.local_implies_global() || !f.local_consistent_implies_unsaturated() {
                    containment_violations += 1;
                }
                Some(f)
            }
            _ => None,
        };

        potential.record(policy.stats().inv_norm(a)?);
        let regret = reward_gap(inst, &sol, a).max(0.0);
        let risk = if excess > RISK_FLOOR { excess } else { 0.0 };
        cum_regret += regret;
        cum_risk += risk;
        steps.add(dec.kind);
        degraded += dec.degraded as usize;

        let reward = inst.theta_star.dot(a) + sigma * env_rng.sample::<f64, _>(StandardNormal);
        let noise = DVector::from_fn(m, |_, _| sigma * env_rng.sample::<f64, _>(StandardNormal));
        let s = &inst.phi_star * a + noise;
        policy.observe(a, reward, &s)?;

        if thin > 0 && (t % thin == 0 || t == horizon) {
            records.push(RoundRecord {
                t,
                action: a.clone(),
                regret,
                risk,
                cum_regret,
                cum_risk,
                flags,
                wall_ns: wall,
                kind: dec.kind,
            });
        }
    }
    potential.check(d)?;

    let rate = |c: usize| (instrumented > 0).then(|| c as f64 / instrumented as f64);
    let g0 = policy.gamma0();
    let summary = RunSummary {
        seed,
        algorithm: policy.label(),
        instance: inst.name.clone(),
        horizon,
        regret: cum_regret,
        risk: cum_risk,
        wall_ns_total: wall_total,
        wall_ns_per_round: wall_total as f64 / horizon as f64,
        rate_local: rate(counts[0]),
        rate_global: rate(counts[1]),
        rate_unsat: rate(counts[2]),
        rate_consistent: rate(counts[3]),
        instrumented_rounds: instrumented,
        containment_violations,
        steps,
        degraded_rounds: degraded,
        gamma0: g0.map(|g| g.0),
        gamma0_pulls: g0.map(|g| g.1),
        potential,
    };
    Ok((summary, records))
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("seeds must be distinct".into()));
    }
    Ok(())
}

fn wrap(
    seed: u64,
    r: Result<(RunSummary, Vec<RoundRecord>)>,
) -> Result<(RunSummary, Vec<RoundRecord>)> {
    r.map_err(|e| Error::Episode {
        seed,
        source: Box::new(e),
    })
}

/// Independent episodes, one per seed, in seed order. Runs in parallel when
/// `parallel` is set and the crate was built with the `parallel` feature.
pub fn run_batch_with(
    inst: &SlbInstance,
    cfg: &RunConfig,
    seeds: &[u64],
    parallel: bool,
) -> Result<Vec<(RunSummary, Vec<RoundRecord>)>> {
    check_seeds(seeds)?;
    let one = |&seed: &u64| wrap(seed, run_episode(inst, cfg, seed));
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return seeds.par_iter().map(one).collect();
    }
    let _ = parallel;
    seeds.iter().map(one).collect()
}

/// Summaries of independent episodes, in seed order.
pub fn run_batch(inst: &SlbInstance, cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<RunSummary>> {
    let cfg = RunConfig {
        thin: 0,
        ..cfg.clone()
    };
    Ok(run_batch_with(inst, &cfg, seeds, true)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> MeanStd {
    let n = xs.len();
    if n == 0 {
        return MeanStd {
            mean: f64::NAN,
            std: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    MeanStd { mean, std }
}

/// Mean and std of an optional per-run field over the runs that have it.
pub fn mean_std_of(runs: &[RunSummary], f: impl Fn(&RunSummary) -> Option<f64>) -> MeanStd {
    let xs: Vec<f64> = runs.iter().filter_map(f).collect();
    mean_std(&xs)
}

/// Convenience for a practical-preset run.
pub fn quick_config(algorithm: Algorithm, horizon: usize) -> RunConfig {
    RunConfig::new(AgentConfig::practical(algorithm), horizon)
}
