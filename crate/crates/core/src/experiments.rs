//! The named experiments. Each produces CSV-ready tables with fixed headers
//! and rows in deterministic order, plus a few summary lines for the console.

use crate::algorithms::Algorithm;
use crate::config::{BaseKind, Experiment, ExperimentConfig, Preset};
use crate::error::{Error, Result};
use crate::noise::NoiseDesign;
use crate::sim::{mean_std, mean_std_of, run_batch_with, MeanStd, RoundRecord, RunSummary};

pub const SUMMARY_HEADER: [&str; 11] = [
    "seed",
    "algo",
    "instance",
    "T",
    "R_T",
    "S_T",
    "wall_ns_total",
    "wall_ns_per_round",
    "rate_local",
    "rate_global",
    "rate_unsat",
];
pub const ROUNDS_HEADER: [&str; 5] = ["seed", "t", "cum_regret", "cum_risk", "flags"];
/// `mean` and `std` are over the final regret `R_T` of the runs.
pub const SWEEP_GAMMA_HEADER: [&str; 6] = [
    "gamma",
    "rate_local",
    "rate_global",
    "rate_unsat",
    "mean",
    "std",
];
pub const SWEEP_M_HEADER: [&str; 7] = [
    "m",
    "R_T_scolts",
    "R_T_safelts",
    "regret_ratio",
    "ns_per_round_scolts",
    "ns_per_round_safelts",
    "time_ratio",
];
pub const RESAMPLING_HEADER: [&str; 5] = ["samples", "R_T_mean", "R_T_std", "S_T_mean", "S_T_std"];
pub const RATES_HEADER: [&str; 10] = [
    "instance",
    "m",
    "design",
    "rate_local_mean",
    "rate_local_std",
    "rate_global_mean",
    "rate_global_std",
    "rate_unsat_mean",
    "rate_unsat_std",
    "containment_violations",
];
pub const COMPARE_HEADER: [&str; 7] = [
    "algo",
    "R_T_mean",
    "R_T_std",
    "S_T_mean",
    "S_T_std",
    "ns_per_round_mean",
    "ns_per_round_std",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name, e.g. `summary.csv`.
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// A column parsed as floats; empty cells become NaN.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[j].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub lines: Vec<String>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn ratio(num_: f64, den: f64) -> f64 {
    if den > 0.0 {
        num_ / den
    } else {
        f64::NAN
    }
}

fn summary_row(s: &RunSummary, timing: bool) -> Vec<String> {
    let (total, per_round) = if timing {
        (s.wall_ns_total, s.wall_ns_per_round)
    } else {
        (0, 0.0)
    };
    vec![
        s.seed.to_string(),
        s.algorithm.clone(),
        s.instance.clone(),
        s.horizon.to_string(),
        num(s.regret),
        num(s.risk),
        total.to_string(),
        num(per_round),
        opt(s.rate_local),
        opt(s.rate_global),
        opt(s.rate_unsat),
    ]
}

fn rounds_rows(seed: u64, records: &[RoundRecord]) -> impl Iterator<Item = Vec<String>> + '_ {
    records.iter().map(move |r| {
        vec![
            seed.to_string(),
            r.t.to_string(),
            num(r.cum_regret),
            num(r.cum_risk),
            r.flags.map(|f| f.bits().to_string()).unwrap_or_default(),
        ]
    })
}

fn pm(label: &str, ms: MeanStd) -> String {
    format!("{label} = {:.4} ± {:.4}", ms.mean, ms.std)
}

/// `n` log-equispaced points from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "bad grid [{lo}, {hi}] with {n} points"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| lo * (step * i as f64).exp()).collect();
    grid[n - 1] = hi;
    Ok(grid)
}

/// Outcome of one batch.
pub struct Batch {
    pub runs: Vec<RunSummary>,
    pub records: Vec<Vec<RoundRecord>>,
}

/// Runs the configured algorithm on `cfg`'s instance (polygon edge count
/// `m` when given) over all configured seeds.
pub fn batch(cfg: &ExperimentConfig, m: Option<usize>) -> Result<Batch> {
    let inst = cfg.instance_with_m(m.unwrap_or(cfg.instance.m))?;
    let rc = cfg.run_config(inst.dim())?;
    let out = run_batch_with(&inst, &rc, &cfg.run.seeds, true)?;
    let (runs, records) = out.into_iter().unzip();
    Ok(Batch { runs, records })
}

fn with_algorithm(cfg: &ExperimentConfig, algorithm: Algorithm) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.algorithm.name = algorithm;
    c
}

fn with_gamma(cfg: &ExperimentConfig, gamma: f64, design: NoiseDesign) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.algorithm.preset = Preset::Practical;
    c.algorithm.base = BaseKind::Sphere;
    c.algorithm.gamma = Some(gamma);
    c.algorithm.design = design;
    c.run.instrument = true;
    c.run.thin = 0;
    c
}

fn polygon_sizes(cfg: &ExperimentConfig) -> Result<&[usize]> {
    if cfg.instance.builtin.as_deref() != Some("polygon") {
        return Err(Error::InvalidParameter(
            "this experiment needs builtin = \"polygon\"".into(),
        ));
    }
    if cfg.sweep.m_values.is_empty() {
        return Err(Error::InvalidParameter("[sweep] m_values is empty".into()));
    }
    Ok(&cfg.sweep.m_values)
}

/// Checks that `experiment` can run on `cfg` without starting any episode:
/// instances build, agent settings validate and required lists are present.
pub fn preflight(experiment: Experiment, cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let sizes: Vec<usize> = match experiment {
        Experiment::SweepM => polygon_sizes(cfg)?.to_vec(),
        Experiment::Rates if !cfg.sweep.m_values.is_empty() => polygon_sizes(cfg)?.to_vec(),
        _ => vec![cfg.instance.m],
    };
    let algorithms: &[Algorithm] = match experiment {
        Experiment::SweepM | Experiment::HardCompare => &[Algorithm::SColts, Algorithm::SafeLts],
        Experiment::ResamplingTable => &[Algorithm::RColts],
        _ => std::slice::from_ref(&cfg.algorithm.name),
    };
    for &m in &sizes {
        let inst = cfg.instance_with_m(m)?;
        for &a in algorithms {
            let c = with_algorithm(cfg, a);
            crate::algorithms::Agent::for_instance(&inst, c.agent_config(inst.dim())?)?;
        }
    }
    if matches!(
        experiment,
        Experiment::SweepGamma | Experiment::DecoupledStudy
    ) {
        let d = cfg.instance()?.dim();
        let (lo, hi) = cfg.gamma_range(d);
        log_grid(lo, hi, cfg.sweep.gamma_points)?;
    }
    Ok(())
}

pub fn execute(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Report> {
    match experiment {
        Experiment::Run => run(cfg),
        Experiment::SweepGamma => Ok(Report {
            tables: vec![sweep_gamma(cfg, cfg.algorithm.design)?],
            lines: vec![],
        }),
        Experiment::SweepM => sweep_m(cfg),
        Experiment::ResamplingTable => resampling_table(cfg),
        Experiment::Rates => rates(cfg),
        Experiment::HardCompare => hard_compare(cfg),
        Experiment::DecoupledStudy => decoupled_study(cfg),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let b = batch(cfg, None)?;
    let mut summary = Table::new("summary.csv", &SUMMARY_HEADER);
    summary.rows = b
        .runs
        .iter()
        .map(|s| summary_row(s, cfg.run.timing))
        .collect();
    let mut report = Report {
        tables: vec![summary],
        lines: totals(&b.runs),
    };
    if cfg.run.thin > 0 {
        let mut rounds = Table::new("rounds.csv", &ROUNDS_HEADER);
        for (s, r) in b.runs.iter().zip(&b.records) {
            rounds.rows.extend(rounds_rows(s.seed, r));
        }
        report.tables.push(rounds);
    }
    Ok(report)
}

fn totals(runs: &[RunSummary]) -> Vec<String> {
    vec![
        pm("R_T", mean_std_of(runs, |s| Some(s.regret))),
        pm("S_T", mean_std_of(runs, |s| Some(s.risk))),
    ]
}

pub fn sweep_gamma(cfg: &ExperimentConfig, design: NoiseDesign) -> Result<Table> {
    let d = cfg.instance()?.dim();
    let (lo, hi) = cfg.gamma_range(d);
    let name = match design {
        NoiseDesign::Coupled => "sweep_gamma.csv",
        NoiseDesign::Decoupled => "sweep_gamma_decoupled.csv",
    };
    let mut table = Table::new(name, &SWEEP_GAMMA_HEADER);
    for gamma in log_grid(lo, hi, cfg.sweep.gamma_points)? {
        let runs = batch(&with_gamma(cfg, gamma, design), None)?.runs;
        let regret = mean_std_of(&runs, |s| Some(s.regret));
        table.rows.push(vec![
            num(gamma),
            num(mean_std_of(&runs, |s| s.rate_local).mean),
            num(mean_std_of(&runs, |s| s.rate_global).mean),
            num(mean_std_of(&runs, |s| s.rate_unsat).mean),
            num(regret.mean),
            num(regret.std),
        ]);
    }
    Ok(table)
}

pub fn sweep_m(cfg: &ExperimentConfig) -> Result<Report> {
    let mut table = Table::new("sweep_m.csv", &SWEEP_M_HEADER);
    let mut lines = Vec::new();
    for &m in polygon_sizes(cfg)? {
        let s = batch(&with_algorithm(cfg, Algorithm::SColts), Some(m))?.runs;
        let b = batch(&with_algorithm(cfg, Algorithm::SafeLts), Some(m))?.runs;
        let (rs, rb) = (
            mean_std_of(&s, |x| Some(x.regret)).mean,
            mean_std_of(&b, |x| Some(x.regret)).mean,
        );
        let (ts, tb) = (
            mean_std_of(&s, |x| Some(x.wall_ns_per_round)).mean,
            mean_std_of(&b, |x| Some(x.wall_ns_per_round)).mean,
        );
        let time_cells = if cfg.run.timing {
            [num(ts), num(tb), num(ratio(tb, ts))]
        } else {
            Default::default()
        };
        let [a, c, e] = time_cells;
        table.rows.push(vec![
            m.to_string(),
            num(rs),
            num(rb),
            num(ratio(rb, rs)),
            a,
            c,
            e,
        ]);
        if cfg.run.timing {
            lines.push(format!(
                "m = {m}: time ratio safe-lts/s-colts = {:.2}",
                ratio(tb, ts)
            ));
        }
    }
    Ok(Report {
        tables: vec![table],
        lines,
    })
}

pub fn resampling_table(cfg: &ExperimentConfig) -> Result<Report> {
    let mut table = Table::new("resampling_table.csv", &RESAMPLING_HEADER);
    let mut means = Vec::new();
    for &n in &cfg.sweep.samples {
        let mut c = with_algorithm(cfg, Algorithm::RColts);
        c.algorithm.samples_fixed = Some(n);
        c.algorithm.resampling_order = None;
        c.run.thin = 0;
        let runs = batch(&c, None)?.runs;
        let r = mean_std_of(&runs, |s| Some(s.regret));
        let s = mean_std_of(&runs, |s| Some(s.risk));
        means.push(r.mean);
        table.rows.push(vec![
            n.to_string(),
            num(r.mean),
            num(r.std),
            num(s.mean),
            num(s.std),
        ]);
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let line = format!(
        "trend: mean R_T strictly decreasing in samples: {}",
        if decreasing { "yes" } else { "no" }
    );
    Ok(Report {
        tables: vec![table],
        lines: vec![line],
    })
}

pub fn rates(cfg: &ExperimentConfig) -> Result<Report> {
    let mut table = Table::new("rates.csv", &RATES_HEADER);
    let sizes: Vec<Option<usize>> = if cfg.sweep.m_values.is_empty() {
        vec![None]
    } else {
        polygon_sizes(cfg)?.iter().map(|&m| Some(m)).collect()
    };
    for m in sizes {
        for design in [NoiseDesign::Coupled, NoiseDesign::Decoupled] {
            let mut c = cfg.clone();
            c.algorithm.design = design;
            c.run.instrument = true;
            c.run.thin = 0;
            let runs = batch(&c, m)?.runs;
            let inst = cfg.instance_with_m(m.unwrap_or(cfg.instance.m))?;
            let local = mean_std_of(&runs, |s| s.rate_local);
            let global = mean_std_of(&runs, |s| s.rate_global);
            let unsat = mean_std_of(&runs, |s| s.rate_unsat);
            let violations: usize = runs.iter().map(|s| s.containment_violations).sum();
            table.rows.push(vec![
                inst.name.clone(),
                inst.num_constraints().to_string(),
                design_name(design).into(),
                num(local.mean),
                num(local.std),
                num(global.mean),
                num(global.std),
                num(unsat.mean),
                num(unsat.std),
                violations.to_string(),
            ]);
        }
    }
    Ok(Report {
        tables: vec![table],
        lines: vec![],
    })
}

fn design_name(design: NoiseDesign) -> &'static str {
    match design {
        NoiseDesign::Coupled => "coupled",
        NoiseDesign::Decoupled => "decoupled",
    }
}

pub fn hard_compare(cfg: &ExperimentConfig) -> Result<Report> {
    let mut summary = Table::new("summary.csv", &SUMMARY_HEADER);
    let mut compare = Table::new("compare.csv", &COMPARE_HEADER);
    let mut report = Report::default();
    let mut per_round = Vec::new();
    for algorithm in [Algorithm::SColts, Algorithm::SafeLts] {
        let b = batch(&with_algorithm(cfg, algorithm), None)?;
        summary
            .rows
            .extend(b.runs.iter().map(|s| summary_row(s, cfg.run.timing)));
        let r = mean_std_of(&b.runs, |s| Some(s.regret));
        let s = mean_std_of(&b.runs, |s| Some(s.risk));
        let t = if cfg.run.timing {
            mean_std_of(&b.runs, |s| Some(s.wall_ns_per_round))
        } else {
            mean_std(&vec![0.0; b.runs.len()])
        };
        per_round.push(t.mean);
        compare.rows.push(vec![
            algorithm.name().into(),
            num(r.mean),
            num(r.std),
            num(s.mean),
            num(s.std),
            num(t.mean),
            num(t.std),
        ]);
        if cfg.run.thin > 0 {
            let mut rounds = Table::new(format!("rounds_{}.csv", algorithm.name()), &ROUNDS_HEADER);
            for (s, rec) in b.runs.iter().zip(&b.records) {
                rounds.rows.extend(rounds_rows(s.seed, rec));
            }
            report.tables.push(rounds);
        }
    }
    if cfg.run.timing {
        report.lines.push(format!(
            "time ratio safe-lts/s-colts = {:.2}",
            ratio(per_round[1], per_round[0])
        ));
    }
    report.tables.splice(0..0, [summary, compare]);
    Ok(report)
}

pub fn decoupled_study(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report {
        tables: vec![sweep_gamma(cfg, NoiseDesign::Decoupled)?],
        lines: vec![],
    };
    let mut summary = Table::new("summary.csv", &SUMMARY_HEADER);
    for design in [NoiseDesign::Coupled, NoiseDesign::Decoupled] {
        let mut c = cfg.clone();
        c.algorithm.design = design;
        let b = batch(&c, None)?;
        for s in &b.runs {
            let mut s = s.clone();
            s.algorithm = format!("{}:{}", s.algorithm, design_name(design));
            summary.rows.push(summary_row(&s, cfg.run.timing));
        }
        report.lines.push(pm(
            &format!("R_T ({})", design_name(design)),
            mean_std_of(&b.runs, |s| Some(s.regret)),
        ));
        if cfg.run.thin > 0 {
            let mut rounds = Table::new(
                format!("rounds_{}.csv", design_name(design)),
                &ROUNDS_HEADER,
            );
            for (s, rec) in b.runs.iter().zip(&b.records) {
                rounds.rows.extend(rounds_rows(s.seed, rec));
            }
            report.tables.push(rounds);
        }
    }
    report.tables.insert(1, summary);
    Ok(report)
}
