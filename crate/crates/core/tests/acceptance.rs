//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test -p colts-core --test acceptance` runs everything; trailing
//! arguments select criteria, e.g. `-- 4 5 11`.

use std::process::ExitCode;
use std::time::Instant;

use colts_core::algorithms::{
    lil_bound, AgentConfig, Algorithm, Gamma0Estimator, Gamma0State, Resampling,
};
use colts_core::instance::{
    builtin_box_instance, builtin_polygon_instance, safety_margin, Polytope, SlbInstance,
};
use colts_core::linalg::SymMatrix;
use colts_core::noise::{BaseMeasure, NoiseDesign};
use colts_core::optim::{solve_lp, solve_soc, LpResult, ScalingProblem, SocProblem};
use colts_core::sim::{mean_std_of, run_batch_with, RoundRecord, RunConfig, RunSummary};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Runs shared between criteria.
#[derive(Default)]
struct Ledger {
    potential_runs: Vec<(usize, RunSummary)>,
    instrumented: Vec<RunSummary>,
}

impl Ledger {
    fn keep(&mut self, d: usize, runs: &[RunSummary]) {
        self.potential_runs
            .extend(runs.iter().map(|r| (d, r.clone())));
    }
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

fn practical(algorithm: Algorithm, horizon: usize) -> RunConfig {
    RunConfig::new(AgentConfig::practical(algorithm), horizon)
}

fn batch(
    inst: &SlbInstance,
    cfg: &RunConfig,
    seeds: &[u64],
) -> Vec<(RunSummary, Vec<RoundRecord>)> {
    run_batch_with(inst, cfg, seeds, true).expect("batch runs")
}

fn summaries(inst: &SlbInstance, cfg: &RunConfig, seeds: &[u64]) -> Vec<RunSummary> {
    batch(inst, cfg, seeds)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

fn mean(runs: &[RunSummary], f: impl Fn(&RunSummary) -> Option<f64>) -> f64 {
    mean_std_of(runs, f).mean
}

fn box9() -> SlbInstance {
    builtin_box_instance(0).unwrap()
}

fn c1_zero_risk(ledger: &mut Ledger) -> Outcome {
    let inst = box9();
    let runs = summaries(&inst, &practical(Algorithm::SColts, 10_000), &seeds(20));
    ledger.keep(inst.dim(), &runs);
    let worst = runs.iter().map(|r| r.risk).fold(0.0, f64::max);
    Outcome {
        pass: runs.iter().all(|r| r.risk == 0.0),
        detail: format!(
            "S-COLTS box9 T=1e4, 20 seeds: max S_T = {worst}, mean R_T = {:.2}",
            mean(&runs, |r| Some(r.regret))
        ),
    }
}

/// R-COLTS with `n` samples per round on box9, T = 2e4, 30 seeds; returns
/// summaries and cumulative regret at t = 5000.
fn resampled(n: usize, ledger: &mut Ledger) -> (Vec<RunSummary>, Vec<f64>) {
    let inst = box9();
    let mut cfg = practical(Algorithm::RColts, 20_000);
    cfg.agent.resampling = Resampling::Fixed(n);
    cfg.thin = 5_000;
    let out = batch(&inst, &cfg, &seeds(30));
    let at_5k = out
        .iter()
        .map(|(_, rec)| {
            rec.iter()
                .find(|r| r.t == 5_000)
                .expect("thinned record at 5000")
                .cum_regret
        })
        .collect();
    let runs: Vec<RunSummary> = out.into_iter().map(|(s, _)| s).collect();
    ledger.keep(inst.dim(), &runs);
    (runs, at_5k)
}

fn c2_c3_resampling(ledger: &mut Ledger) -> (Outcome, Outcome) {
    let mut r = Vec::new();
    let mut s = Vec::new();
    let mut one_sample = None;
    for n in 1..=3 {
        let (runs, at_5k) = resampled(n, ledger);
        r.push(mean(&runs, |x| Some(x.regret)));
        s.push(mean(&runs, |x| Some(x.risk)));
        if n == 1 {
            one_sample = Some((runs, at_5k));
        }
    }
    let decreasing = r[1] < r[0] && r[2] < r[1];
    let c2 = Outcome {
        pass: decreasing && r[2] <= 0.75 * r[0] && s[2] <= 1.3 * s[0],
        detail: format!(
            "mean R_T (1,2,3 samples) = {:.2}, {:.2}, {:.2}; R(3)/R(1) = {:.3}; mean S_T = {:.3}, {:.3}, {:.3}; S(3)/S(1) = {:.3}",
            r[0],
            r[1],
            r[2],
            r[2] / r[0],
            s[0],
            s[1],
            s[2],
            s[2] / s[0]
        ),
    };
    let (runs, at_5k) = one_sample.unwrap();
    let norm = |t: f64| (t * t.ln()).sqrt();
    let early = at_5k.iter().sum::<f64>() / at_5k.len() as f64 / norm(5_000.0);
    let late = mean(&runs, |x| Some(x.regret)) / norm(20_000.0);
    let c3 = Outcome {
        pass: late <= 1.25 * early,
        detail: format!(
            "R_T/sqrt(T ln T): {early:.4} at T=5e3, {late:.4} at T=2e4, ratio {:.3}",
            late / early
        ),
    };
    (c2, c3)
}

fn instrumented(
    algorithm: Algorithm,
    design: NoiseDesign,
    radius: f64,
    horizon: usize,
) -> RunConfig {
    let mut cfg = practical(algorithm, horizon);
    cfg.agent.design = design;
    cfg.agent.base = BaseMeasure::Sphere { radius };
    cfg.instrument = true;
    cfg
}

fn c4_rates(ledger: &mut Ledger) -> Outcome {
    let inst = box9();
    let runs = summaries(
        &inst,
        &instrumented(Algorithm::RColts, NoiseDesign::Coupled, 0.5, 1_000),
        &seeds(20),
    );
    ledger.keep(inst.dim(), &runs);
    ledger.instrumented.extend(runs.iter().cloned());
    let unsat = mean(&runs, |r| r.rate_unsat);
    let global = mean(&runs, |r| r.rate_global);
    Outcome {
        pass: unsat >= 0.90 && global >= 0.85,
        detail: format!(
            "box9 coupled gamma=0.5: unsaturation {unsat:.3}, global {global:.3}, local {:.3}",
            mean(&runs, |r| r.rate_local)
        ),
    }
}

/// E-COLTS driven by the unit sphere, the setting of the rate-versus-m study.
fn c5_decoupled(ledger: &mut Ledger) -> Outcome {
    let mut rate = |m: usize, design: NoiseDesign| {
        let inst = builtin_polygon_instance(m).unwrap();
        let runs = summaries(
            &inst,
            &instrumented(Algorithm::EColts, design, 1.0, 1_000),
            &seeds(20),
        );
        ledger.keep(inst.dim(), &runs);
        ledger.instrumented.extend(runs.iter().cloned());
        [
            mean(&runs, |r| r.rate_local),
            mean(&runs, |r| r.rate_global),
            mean(&runs, |r| r.rate_unsat),
        ]
    };
    let d10 = rate(10, NoiseDesign::Decoupled);
    let d100 = rate(100, NoiseDesign::Decoupled);
    let c10 = rate(10, NoiseDesign::Coupled);
    let c100 = rate(100, NoiseDesign::Coupled);
    let stable = c10.iter().zip(&c100).all(|(a, b)| (a - b).abs() <= 0.1);
    Outcome {
        pass: d100[0] <= 0.5 * d10[0] && stable,
        detail: format!(
            "decoupled local m=10 {:.3} -> m=100 {:.3}; coupled (local, global, unsat) m=10 {:.3?} -> m=100 {:.3?}",
            d10[0], d100[0], c10, c100
        ),
    }
}

/// S-COLTS gets `Γ₀ = Γ(a_safe)`: at T = 1e3 the estimation phase would
/// otherwise fill the whole horizon on the polygons.
fn c6_compute(ledger: &mut Ledger) -> Outcome {
    let mut ratio = |m: usize| {
        let inst = builtin_polygon_instance(m).unwrap();
        let gamma = safety_margin(&inst, inst.a_safe.as_ref().unwrap());
        let mut per_round = Vec::new();
        for algorithm in [Algorithm::SColts, Algorithm::SafeLts] {
            let mut cfg = practical(algorithm, 1_000);
            cfg.agent.gamma0 = Some(gamma);
            let mut best = f64::INFINITY;
            for _ in 0..3 {
                let runs: Vec<RunSummary> = run_batch_with(&inst, &cfg, &seeds(5), false)
                    .expect("timing runs")
                    .into_iter()
                    .map(|(s, _)| s)
                    .collect();
                best = best.min(mean(&runs, |r| Some(r.wall_ns_per_round)));
                ledger.keep(inst.dim(), &runs);
            }
            per_round.push(best);
        }
        (per_round[1] / per_round[0], per_round)
    };
    let (r10, t10) = ratio(10);
    let (r100, t100) = ratio(100);
    Outcome {
        pass: r100 >= 3.0 && r100 > r10,
        detail: format!(
            "SAFE-LTS/S-COLTS per-round time: m=10 {r10:.2}x ({:.0} vs {:.0} ns), m=100 {r100:.2}x ({:.0} vs {:.0} ns)",
            t10[1], t10[0], t100[1], t100[0]
        ),
    }
}

fn c7_potential(ledger: &Ledger) -> Outcome {
    let violations = ledger
        .potential_runs
        .iter()
        .filter(|(d, r)| r.potential.check(*d).is_err())
        .count();
    Outcome {
        pass: violations == 0 && !ledger.potential_runs.is_empty(),
        detail: format!(
            "{violations} violations over {} runs",
            ledger.potential_runs.len()
        ),
    }
}

fn c8_lil() -> Outcome {
    let (trials, horizon, delta) = (500, 10_000, 0.1);
    let bounds: Vec<f64> = (1..=horizon)
        .map(|t| lil_bound(t as f64, delta).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut crossed = 0;
    for _ in 0..trials {
        let mut z = 0.0;
        for b in &bounds {
            z += rng.sample::<f64, _>(StandardNormal);
            if z.abs() > *b {
                crossed += 1;
                break;
            }
        }
    }
    let freq = crossed as f64 / trials as f64;
    Outcome {
        pass: freq <= 0.12,
        detail: format!("{crossed}/{trials} walks crossed, frequency {freq:.3}"),
    }
}

fn c9_gamma0() -> Outcome {
    let inst = box9();
    let a_safe = inst.a_safe.clone().unwrap();
    let gamma = safety_margin(&inst, &a_safe);
    let bound = 8.0 / gamma.powi(2) * (8.0 / (0.1 * gamma.powi(2))).ln();
    let mean_s = &inst.phi_star * &a_safe;
    let (mut failures, mut slow, mut times) = (0, 0, Vec::new());
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut est = Gamma0Estimator::new(inst.num_constraints(), 0.1).unwrap();
        let g0 = loop {
            let s = mean_s.map(|v| v + rng.sample::<f64, _>(StandardNormal));
            if let Gamma0State::Done(g) = est.step(&s, &inst.alpha).unwrap() {
                break g;
            }
            assert!(est.pulls() < 10_000_000, "estimator did not stop");
        };
        if !(g0 >= gamma / 2.0 && g0 <= gamma) {
            failures += 1;
        }
        if est.pulls() as f64 > bound {
            slow += 1;
        }
        times.push(est.pulls());
    }
    times.sort_unstable();
    Outcome {
        pass: failures <= 5 && slow <= 5,
        detail: format!(
            "Gamma(a_safe) = {gamma:.4}: {failures}/50 outside [Gamma/2, Gamma]; stop-time bound {bound:.0}, exceeded in {slow}/50 (median T0 = {})",
            times[25]
        ),
    }
}

/// Best vertex of `{x : rows x <= rhs}` by enumerating all `d`-subsets of
/// rows; `None` when no vertex is feasible.
fn vertex_oracle(c: &DVector<f64>, rows: &[(DVector<f64>, f64)]) -> Option<f64> {
    let d = c.len();
    let n = rows.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a = DMatrix::from_fn(d, d, |i, j| rows[idx[i]].0[j]);
        let b = DVector::from_fn(d, |i, _| rows[idx[i]].1);
        if let Some(x) = a.lu().solve(&b) {
            if rows.iter().all(|(r, h)| r.dot(&x) <= h + 1e-9) {
                let v = c.dot(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        let mut k = d;
        while k > 0 && idx[k - 1] == n - d + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return best;
        }
        idx[k - 1] += 1;
        for j in k..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn c10_solvers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let mut lp_gap: f64 = 0.0;
    let mut lp_mismatch = 0;
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let m = rng.random_range(0..=4);
        let lower = DVector::from_fn(d, |_, _| rng.random_range(-1.0..0.0));
        let upper = DVector::from_fn(d, |_, _| rng.random_range(0.0..1.0));
        let c = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let lhs = DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0));
        let rhs = DVector::from_fn(m, |_, _| rng.random_range(-0.3..1.0));
        let mut rows = Vec::new();
        for i in 0..d {
            let e = DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 });
            rows.push((e.clone(), upper[i]));
            rows.push((-e, -lower[i]));
        }
        for i in 0..m {
            rows.push((lhs.row(i).transpose(), rhs[i]));
        }
        let dom = Polytope::boxed(lower, upper).unwrap();
        let got = solve_lp(&c, &dom, &lhs, &rhs, 1e-9).unwrap();
        match (got, vertex_oracle(&c, &rows)) {
            (LpResult::Optimal { value, .. }, Some(v)) => lp_gap = lp_gap.max((value - v).abs()),
            (LpResult::Infeasible, None) => {}
            _ => lp_mismatch += 1,
        }
    }

    let mut soc_gap: f64 = 0.0;
    let mut soc_infeasible_point = 0;
    let n = 801;
    for _ in 0..50 {
        let m = rng.random_range(1..=3);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let dom =
            Polytope::boxed(DVector::from_element(2, -h), DVector::from_element(2, h)).unwrap();
        let c = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let phi = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..1.0));
        let alpha = DVector::from_fn(m, |_, _| rng.random_range(0.1..0.6));
        let b = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.6..0.6));
        let w = SymMatrix::symmetrize(&b * b.transpose() + DMatrix::identity(2, 2) * 0.05).unwrap();
        let omega = rng.random_range(0.1..1.0);
        let anchor = DVector::zeros(2);
        let p = SocProblem {
            c: &c,
            dom: &dom,
            phi_hat: &phi,
            alpha: &alpha,
            omega,
            v_inv_sqrt: &w,
            anchor: &anchor,
            tol: 1e-9,
            cut_cap: 200,
        };
        let sol = solve_soc(&p).unwrap();
        let Some(x) = sol.result.x() else {
            soc_infeasible_point += 1;
            continue;
        };
        if p.max_violation(x) > 1e-9 || !dom.contains(x, 1e-9) {
            soc_infeasible_point += 1;
        }
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let a = DVector::from_vec(vec![
                    -h + 2.0 * h * i as f64 / (n - 1) as f64,
                    -h + 2.0 * h * j as f64 / (n - 1) as f64,
                ]);
                if p.max_violation(&a) <= 0.0 {
                    grid_best = grid_best.max(c.dot(&a));
                }
            }
        }
        soc_gap = soc_gap.max((c.dot(x) - grid_best).abs());
    }

    let mut scaling_bad = 0;
    for _ in 0..100 {
        let d = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let phi = DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0));
        let alpha = DVector::from_fn(m, |_, _| rng.random_range(0.2..1.0));
        let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        let v_inv =
            SymMatrix::symmetrize(&b * b.transpose() + DMatrix::identity(d, d) * 0.05).unwrap();
        let omega = rng.random_range(0.05..1.0);
        let a_safe = DVector::zeros(d);
        let cand = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let sp = ScalingProblem::new(&phi, &alpha, omega, &v_inv, &a_safe, &cand).unwrap();
        let rho = sp.max_rho(1e-9).unwrap();
        // direct evaluation of the pessimistic constraint, independent of the
        // precomputed coefficients
        let g = |r: f64| {
            let a = &cand * r;
            let lin = (&phi * &a - &alpha).max();
            lin + omega * v_inv.as_matrix().dot(&(&a * a.transpose())).max(0.0).sqrt()
        };
        let inside = g(rho) <= 1e-12;
        let tight = rho == 1.0 || g((rho + 2e-9).min(1.0)) > 0.0;
        let below = (0..=50).all(|k| g(rho * k as f64 / 50.0) <= 1e-12);
        if !(inside && tight && below) {
            scaling_bad += 1;
        }
    }

    Outcome {
        pass: lp_mismatch == 0 && lp_gap <= 1e-7 && soc_infeasible_point == 0 && soc_gap <= 5e-3 && scaling_bad == 0,
        detail: format!(
            "LP: max gap {lp_gap:.1e}, {lp_mismatch} status mismatches; SOC: max gap {soc_gap:.1e}, {soc_infeasible_point} bad points; scaling: {scaling_bad}/100 off the boundary"
        ),
    }
}

fn c11_containment(ledger: &Ledger) -> Outcome {
    let violations: usize = ledger
        .instrumented
        .iter()
        .map(|r| r.containment_violations)
        .sum();
    let rounds: usize = ledger
        .instrumented
        .iter()
        .map(|r| r.instrumented_rounds)
        .sum();
    Outcome {
        pass: violations == 0 && rounds > 0,
        detail: format!("{violations} violations over {rounds} instrumented rounds"),
    }
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |k: usize| selected.is_empty() || selected.contains(&k);
    let mut ledger = Ledger::default();
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut record = |k: usize, f: &mut dyn FnMut(&mut Ledger) -> Outcome, ledger: &mut Ledger| {
        let start = Instant::now();
        let out = f(ledger);
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {k:>2} [{}] {} ({secs:.1}s)",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        results.push((k, out, secs));
    };

    if want(1) {
        record(1, &mut c1_zero_risk, &mut ledger);
    }
    if want(2) || want(3) {
        let (c2, c3) = c2_c3_resampling(&mut ledger);
        let mut c2 = Some(c2);
        let mut c3 = Some(c3);
        if want(2) {
            record(2, &mut |_| c2.take().unwrap(), &mut ledger);
        }
        if want(3) {
            record(3, &mut |_| c3.take().unwrap(), &mut ledger);
        }
    }
    if want(4) {
        record(4, &mut c4_rates, &mut ledger);
    }
    if want(5) {
        record(5, &mut c5_decoupled, &mut ledger);
    }
    if want(6) {
        record(6, &mut c6_compute, &mut ledger);
    }
    if want(7) {
        record(7, &mut |l| c7_potential(l), &mut ledger);
    }
    if want(8) {
        record(8, &mut |_| c8_lil(), &mut ledger);
    }
    if want(9) {
        record(9, &mut |_| c9_gamma0(), &mut ledger);
    }
    if want(10) {
        record(10, &mut |_| c10_solvers(), &mut ledger);
    }
    if want(11) {
        record(11, &mut |l| c11_containment(l), &mut ledger);
    }

    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, o, _)| !o.pass)
        .map(|(k, _, _)| *k)
        .collect();
    println!(
        "acceptance: {} passed, {} failed {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
