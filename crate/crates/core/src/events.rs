//! Detectors for local optimism, global optimism, unsaturation and
//! consistency. They read the true parameters, so only the simulator uses
//! them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{reward_gap, InstanceSolution, Polytope, SlbInstance};
use crate::noise::PerturbedParams;
use crate::optim::{solve_lp, LpResult};

/// Slack shared by the local-optimism and unsaturation tests.
pub const EVENT_TOL: f64 = 1e-10;

/// Slack on the value comparison of global optimism.
pub const GLOBAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub consistent: bool,
    pub local_optimism: bool,
    pub global_optimism: bool,
    pub unsaturated: bool,
    pub perturbed_feasible: bool,
}

impl EventFlags {
    /// Bit 0 consistent, 1 local, 2 global, 3 unsaturated, 4 feasible.
    pub fn bits(&self) -> u8 {
        [
            self.consistent,
            self.local_optimism,
            self.global_optimism,
            self.unsaturated,
            self.perturbed_feasible,
        ]
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | ((b as u8) << i))
    }

    pub fn from_bits(bits: u8) -> Self {
        Self {
            consistent: bits & 1 != 0,
            local_optimism: bits & 2 != 0,
            global_optimism: bits & 4 != 0,
            unsaturated: bits & 8 != 0,
            perturbed_feasible: bits & 16 != 0,
        }
    }

    /// `local ⟹ global`.
    pub fn local_implies_global(&self) -> bool {
        !self.local_optimism || self.global_optimism
    }

    /// `(local ∧ consistent) ⟹ unsaturated`.
    pub fn local_consistent_implies_unsaturated(&self) -> bool {
        !(self.local_optimism && self.consistent) || self.unsaturated
    }
}

/// `θ̃ᵀa* ≥ θ*ᵀa*` and `Φ̃a* ≤ α`.
pub fn detect_local(pp: &PerturbedParams, sol: &InstanceSolution, inst: &SlbInstance) -> bool {
    let a = &sol.a_star;
    pp.theta_tilde.dot(a) >= inst.theta_star.dot(a) - EVENT_TOL
        && (&pp.phi_tilde * a - &inst.alpha)
            .iter()
            .all(|&v| v <= EVENT_TOL)
}

/// Global optimism from an already solved perturbed program.
pub fn global_from_program(program: &LpResult, value_star: f64, tol: f64) -> bool {
    match program {
        LpResult::Optimal { value, .. } => *value >= value_star - tol,
        LpResult::Infeasible => false,
    }
}

/// `K(θ̃, Φ̃) ≥ θ*ᵀa*`, solving the perturbed program.
pub fn detect_global(
    pp: &PerturbedParams,
    domain: &Polytope,
    alpha: &DVector<f64>,
    value_star: f64,
    tol: f64,
    lp_tol: f64,
) -> Result<bool> {
    let program = solve_lp(&pp.theta_tilde, domain, &pp.phi_tilde, alpha, lp_tol)?;
    Ok(global_from_program(&program, value_star, tol))
}

/// `Δ(a) ≤ M_t(a)`.
pub fn detect_unsaturated(gap: f64, width: f64) -> bool {
    gap <= width + EVENT_TOL
}

/// All flags for one round. `program` is the perturbed program for `pp`;
/// `width` maps an action to `M_t(a)`.
pub fn evaluate(
    inst: &SlbInstance,
    sol: &InstanceSolution,
    pp: &PerturbedParams,
    program: &LpResult,
    consistent: bool,
    width: impl Fn(&DVector<f64>) -> Result<f64>,
) -> Result<EventFlags> {
    let unsaturated = match program.x() {
        Some(x) => detect_unsaturated(reward_gap(inst, sol, x), width(x)?),
        None => false,
    };
    Ok(EventFlags {
        consistent,
        local_optimism: detect_local(pp, sol, inst),
        global_optimism: global_from_program(program, sol.value_star, GLOBAL_TOL),
        unsaturated,
        perturbed_feasible: program.is_optimal(),
    })
}

/// Perturbed parameters equal to the truth.
pub fn identity_perturbation(inst: &SlbInstance) -> PerturbedParams {
    PerturbedParams {
        theta_tilde: inst.theta_star.clone(),
        phi_tilde: inst.phi_star.clone(),
    }
}
