//! WebAssembly bindings for the browser demo in `www/`. Each operation takes
//! plain numbers and strings and returns JSON text; the `*_json` functions
//! are the native versions the bindings wrap.

use colts_core::algorithms::{Agent, AgentConfig, Algorithm};
use colts_core::events::detect_local;
use colts_core::instance::{builtin, optimal_action, safety_margin, SlbInstance};
use colts_core::noise::{perturb, BaseMeasure, NoiseDesign};
use colts_core::optim::solve_lp;
use colts_core::sim::{run_policy, RunConfig, StepCounts};
use colts_core::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Longest episode the page may request.
pub const MAX_HORIZON: usize = 20_000;
/// Points kept per trace.
const TRACE_POINTS: usize = 200;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn design(name: &str) -> Result<NoiseDesign> {
    match name {
        "coupled" => Ok(NoiseDesign::Coupled),
        "decoupled" => Ok(NoiseDesign::Decoupled),
        other => Err(Error::InvalidParameter(format!(
            "unknown noise design '{other}'"
        ))),
    }
}

fn agent_config(algorithm: Algorithm, gamma: f64, design: NoiseDesign) -> AgentConfig {
    let mut cfg = AgentConfig::practical(algorithm);
    cfg.base = BaseMeasure::Sphere { radius: gamma };
    cfg.design = design;
    cfg
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize)]
struct InstanceView {
    name: String,
    d: usize,
    m: usize,
    theta: Vec<f64>,
    phi: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    a_star: Vec<f64>,
    value_star: f64,
    a_safe: Option<Vec<f64>>,
    safe_margin: Option<f64>,
}

/// Parameters and solution of a builtin instance (`box9` or `polygon`).
pub fn describe_instance_json(name: &str, m: usize, seed: u64) -> Result<String> {
    let inst = builtin(name, seed, m)?;
    let sol = optimal_action(&inst)?;
    json(&InstanceView {
        name: inst.name.clone(),
        d: inst.dim(),
        m: inst.num_constraints(),
        theta: vec(&inst.theta_star),
        phi: rows(&inst.phi_star),
        alpha: vec(&inst.alpha),
        lower: vec(inst.domain.lower()),
        upper: vec(inst.domain.upper()),
        a_star: vec(&sol.a_star),
        value_star: sol.value_star,
        a_safe: inst.a_safe.as_ref().map(vec),
        safe_margin: inst.a_safe.as_ref().map(|a| safety_margin(&inst, a)),
    })
}

#[derive(Serialize)]
struct TraceView {
    instance: String,
    algorithm: String,
    horizon: usize,
    regret: f64,
    risk: f64,
    steps: StepCounts,
    t: Vec<usize>,
    cum_regret: Vec<f64>,
    cum_risk: Vec<f64>,
}

/// One episode with a thinned regret/risk trace. `known_margin` hands
/// S-COLTS the true margin of `a_safe` instead of estimating it.
pub fn simulate_json(
    instance: &str,
    m: usize,
    algorithm: &str,
    gamma: f64,
    noise_design: &str,
    horizon: usize,
    seed: u64,
    known_margin: bool,
) -> Result<String> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(Error::InvalidParameter(format!(
            "horizon must lie in 1..={MAX_HORIZON}"
        )));
    }
    let inst = builtin(instance, seed, m)?;
    let alg: Algorithm = algorithm.parse()?;
    let mut cfg = RunConfig::new(agent_config(alg, gamma, design(noise_design)?), horizon);
    if known_margin {
        cfg.agent.gamma0 = inst.a_safe.as_ref().map(|a| safety_margin(&inst, a));
    }
    cfg.thin = horizon.div_ceil(TRACE_POINTS).max(1);
    let mut agent = Agent::for_instance(&inst, cfg.agent.clone())?;
    let (summary, records) = run_policy(&inst, &mut agent, horizon, false, cfg.thin, seed)?;
    json(&TraceView {
        instance: summary.instance,
        algorithm: summary.algorithm,
        horizon,
        regret: summary.regret,
        risk: summary.risk,
        steps: summary.steps,
        t: records.iter().map(|r| r.t).collect(),
        cum_regret: records.iter().map(|r| r.cum_regret).collect(),
        cum_risk: records.iter().map(|r| r.cum_risk).collect(),
    })
}

#[derive(Serialize)]
struct DrawView {
    theta_tilde: Vec<f64>,
    phi_tilde: Vec<Vec<f64>>,
    /// Optimiser of the perturbed program, if it is feasible.
    b: Option<Vec<f64>>,
    local_optimism: bool,
}

#[derive(Serialize)]
struct PerturbationView {
    instance: String,
    warmup: usize,
    phi_star: Vec<Vec<f64>>,
    phi_hat: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    a_star: Vec<f64>,
    omega: f64,
    draws: Vec<DrawView>,
}

/// Runs R-COLTS for `warmup` rounds on the `m`-gon, then draws `draws`
/// perturbed constraint sets from the resulting estimates.
pub fn perturbations_json(
    m: usize,
    gamma: f64,
    noise_design: &str,
    warmup: usize,
    draws: usize,
    seed: u64,
) -> Result<String> {
    if warmup == 0 || warmup > MAX_HORIZON || draws == 0 || draws > 200 {
        return Err(Error::InvalidParameter(
            "need 1 <= warmup <= 20000 and 1 <= draws <= 200".into(),
        ));
    }
    let inst: SlbInstance = builtin("polygon", seed, m)?;
    let sol = optimal_action(&inst)?;
    let cfg = agent_config(Algorithm::RColts, gamma, design(noise_design)?);
    let mut agent = Agent::for_instance(&inst, cfg)?;
    run_policy(&inst, &mut agent, warmup, false, 0, seed)?;
    let stats = agent.stats();
    let est = stats.estimates(agent.config().delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let law = *agent.law();
    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let pp = perturb(&est, stats, &law.sample_noise(&mut rng))?;
        let b = solve_lp(
            &pp.theta_tilde,
            &inst.domain,
            &pp.phi_tilde,
            &inst.alpha,
            1e-9,
        )?;
        out.push(DrawView {
            theta_tilde: vec(&pp.theta_tilde),
            phi_tilde: rows(&pp.phi_tilde),
            b: b.x().map(vec),
            local_optimism: detect_local(&pp, &sol, &inst),
        });
    }
    json(&PerturbationView {
        instance: inst.name.clone(),
        warmup,
        phi_star: rows(&inst.phi_star),
        phi_hat: rows(&est.phi_hat),
        alpha: vec(&inst.alpha),
        a_star: vec(&sol.a_star),
        omega: est.omega,
        draws: out,
    })
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js(r: colts_core::Result<String>) -> Result<String, JsError> {
        r.map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen]
    pub fn describe_instance(name: &str, m: usize, seed: u64) -> Result<String, JsError> {
        js(super::describe_instance_json(name, m, seed))
    }

    #[wasm_bindgen]
    #[allow(clippy::too_many_arguments)]
    pub fn simulate(
        instance: &str,
        m: usize,
        algorithm: &str,
        gamma: f64,
        noise_design: &str,
        horizon: usize,
        seed: u64,
        known_margin: bool,
    ) -> Result<String, JsError> {
        js(super::simulate_json(
            instance,
            m,
            algorithm,
            gamma,
            noise_design,
            horizon,
            seed,
            known_margin,
        ))
    }

    #[wasm_bindgen]
    pub fn perturbations(
        m: usize,
        gamma: f64,
        noise_design: &str,
        warmup: usize,
        draws: usize,
        seed: u64,
    ) -> Result<String, JsError> {
        js(super::perturbations_json(
            m,
            gamma,
            noise_design,
            warmup,
            draws,
            seed,
        ))
    }
}
