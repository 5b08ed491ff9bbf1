//! Experiment configuration: a TOML file with `[instance]`, `[algorithm]`,
//! `[run]` and `[sweep]` sections, all keys flat.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AgentConfig, Algorithm, Resampling};
use crate::error::{Error, Result};
use crate::instance::{builtin, SlbInstance};
use crate::noise::{BaseMeasure, NoiseDesign};
use crate::optim::DEFAULT_CUT_CAP;
use crate::sim::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Run,
    SweepGamma,
    SweepM,
    ResamplingTable,
    Rates,
    HardCompare,
    DecoupledStudy,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Run,
        Experiment::SweepGamma,
        Experiment::SweepM,
        Experiment::ResamplingTable,
        Experiment::Rates,
        Experiment::HardCompare,
        Experiment::DecoupledStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::SweepGamma => "sweep_gamma",
            Experiment::SweepM => "sweep_m",
            Experiment::ResamplingTable => "resampling_table",
            Experiment::Rates => "rates",
            Experiment::HardCompare => "hard_compare",
            Experiment::DecoupledStudy => "decoupled_study",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Radius `γ` (default 0.5), the user δ as given.
    #[default]
    Practical,
    /// Radius `√(3d)` and the δ splits of the guarantees.
    Theory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    #[default]
    Sphere,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    /// `box9` or `polygon`.
    pub builtin: Option<String>,
    /// Path to an instance file, instead of a builtin.
    pub file: Option<PathBuf>,
    /// Seed of the box9 constraint matrix.
    #[serde(default)]
    pub seed: u64,
    /// Polygon edge count.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Observation noise scale; overrides the instance value.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    #[serde(default = "default_algorithm")]
    pub name: Algorithm,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub gamma: Option<f64>,
    #[serde(default)]
    pub base: BaseKind,
    #[serde(default = "default_design")]
    pub design: NoiseDesign,
    pub resampling_order: Option<u32>,
    pub samples_fixed: Option<usize>,
    #[serde(default = "default_cut_cap")]
    pub cut_cap: usize,
    /// Known S-COLTS margin; estimated from plays of `a_safe` when absent.
    pub gamma0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Round CSV keeps every `thin`-th round; 0 disables it.
    #[serde(default)]
    pub thin: usize,
    #[serde(default)]
    pub instrument: bool,
    /// When false, wall-time columns are written as 0 so CSVs are
    /// byte-reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Worker threads; 0 lets the runtime decide.
    #[serde(default)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    #[serde(default = "default_gamma_points")]
    pub gamma_points: usize,
    #[serde(default)]
    pub m_values: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gamma_min: None,
            gamma_max: None,
            gamma_points: default_gamma_points(),
            m_values: Vec::new(),
            samples: default_samples(),
        }
    }
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        Self {
            name: default_algorithm(),
            preset: Preset::Practical,
            delta: default_delta(),
            gamma: None,
            base: BaseKind::Sphere,
            design: default_design(),
            resampling_order: None,
            samples_fixed: None,
            cut_cap: DEFAULT_CUT_CAP,
            gamma0: None,
        }
    }
}

fn default_m() -> usize {
    4
}
fn default_algorithm() -> Algorithm {
    Algorithm::RColts
}
fn default_delta() -> f64 {
    0.1
}
fn default_design() -> NoiseDesign {
    NoiseDesign::Coupled
}
fn default_cut_cap() -> usize {
    DEFAULT_CUT_CAP
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}
fn default_gamma_points() -> usize {
    41
}
fn default_samples() -> Vec<usize> {
    vec![1, 2, 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; the command line names the experiment when absent.
    pub experiment: Option<Experiment>,
    pub instance: InstanceSection,
    #[serde(default)]
    pub algorithm: AlgorithmSection,
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative instance `file` is resolved against
    /// the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(file), Some(dir)) = (&cfg.instance.file, path.parent()) {
            if file.is_relative() {
                cfg.instance.file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let inst = &self.instance;
        match (&inst.builtin, &inst.file) {
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "[instance] needs `builtin` or `file`".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "[instance] takes `builtin` or `file`, not both".into(),
                ))
            }
            (Some(name), None) if !matches!(name.as_str(), "box9" | "box" | "polygon") => {
                return Err(Error::InvalidParameter(format!(
                    "unknown builtin instance '{name}'"
                )))
            }
            _ => {}
        }
        if let Some(s) = inst.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "sigma must be nonnegative, got {s}"
                )));
            }
        }
        let alg = &self.algorithm;
        if !(alg.delta > 0.0 && alg.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                alg.delta
            )));
        }
        if alg.preset == Preset::Theory && (alg.gamma.is_some() || alg.base == BaseKind::Gaussian) {
            return Err(Error::InvalidParameter(
                "the theory preset fixes the noise law; drop `gamma`/`base`".into(),
            ));
        }
        if alg.resampling_order.is_some() && alg.samples_fixed.is_some() {
            return Err(Error::InvalidParameter(
                "set `resampling_order` or `samples_fixed`, not both".into(),
            ));
        }
        if self.run.horizon == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(Error::InvalidParameter("need at least one seed".into()));
        }
        let sw = &self.sweep;
        if let (Some(lo), Some(hi)) = (sw.gamma_min, sw.gamma_max) {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::InvalidParameter(format!(
                    "bad gamma range [{lo}, {hi}]"
                )));
            }
        }
        if sw.gamma_points == 0 {
            return Err(Error::InvalidParameter(
                "gamma_points must be positive".into(),
            ));
        }
        if sw.samples.contains(&0) {
            return Err(Error::InvalidParameter(
                "sample counts must be positive".into(),
            ));
        }
        self.agent_config(1)?.validate()
    }

    /// The configured instance, with `m` overriding the polygon edge count.
    pub fn instance_with_m(&self, m: usize) -> Result<SlbInstance> {
        let mut inst = match (&self.instance.builtin, &self.instance.file) {
            (Some(name), _) => builtin(name, self.instance.seed, m)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                SlbInstance::from_text(&text)?
            }
            (None, None) => return Err(Error::InvalidParameter("no instance configured".into())),
        };
        if let Some(s) = self.instance.sigma {
            inst.obs_sigma = s;
        }
        Ok(inst)
    }

    pub fn instance(&self) -> Result<SlbInstance> {
        self.instance_with_m(self.instance.m)
    }

    /// Agent settings for dimension `d`.
    pub fn agent_config(&self, d: usize) -> Result<AgentConfig> {
        let alg = &self.algorithm;
        let mut cfg = match alg.preset {
            Preset::Theory => AgentConfig::theory(alg.name, alg.delta, d),
            Preset::Practical => {
                let mut c = AgentConfig::practical(alg.name);
                c.delta = alg.delta;
                c.base = match alg.base {
                    BaseKind::Sphere => BaseMeasure::Sphere {
                        radius: alg.gamma.unwrap_or(0.5),
                    },
                    BaseKind::Gaussian => BaseMeasure::Gaussian,
                };
                c
            }
        };
        cfg.design = alg.design;
        cfg.cut_cap = alg.cut_cap;
        cfg.gamma0 = alg.gamma0;
        if let Some(r) = alg.resampling_order {
            cfg.resampling = Resampling::Order(r);
        }
        if let Some(n) = alg.samples_fixed {
            cfg.resampling = Resampling::Fixed(n);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run_config(&self, d: usize) -> Result<RunConfig> {
        Ok(RunConfig {
            agent: self.agent_config(d)?,
            horizon: self.run.horizon,
            instrument: self.run.instrument,
            thin: self.run.thin,
        })
    }

    /// Endpoints of the γ grid; defaults `[(3d)^{-3/2}, (3d)^{1/2}]`.
    pub fn gamma_range(&self, d: usize) -> (f64, f64) {
        let s = (3.0 * d as f64).sqrt();
        (
            self.sweep.gamma_min.unwrap_or(s.powi(-3)),
            self.sweep.gamma_max.unwrap_or(s),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "run"

[instance]
builtin = "polygon"
m = 4

[run]
T = 100
seeds = [1, 2]
"#;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::Run));
        assert_eq!(cfg.run.horizon, 100);
        assert_eq!(cfg.algorithm.name, Algorithm::RColts);
        let inst = cfg.instance().unwrap();
        assert_eq!(inst.num_constraints(), 4);
        let agent = cfg.agent_config(2).unwrap();
        assert_eq!(agent.base, BaseMeasure::Sphere { radius: 0.5 });
        assert_eq!(agent.resampling, Resampling::Fixed(1));
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let no_instance = MINIMAL.replace("builtin = \"polygon\"", "");
        assert!(ExperimentConfig::from_toml(&no_instance).is_err());
        let unknown = MINIMAL.replace("polygon", "hexagon");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let zero_t = MINIMAL.replace("T = 100", "T = 0");
        assert!(ExperimentConfig::from_toml(&zero_t).is_err());
        let bad_delta = format!("{MINIMAL}\n[algorithm]\ndelta = 1.0\n");
        assert!(ExperimentConfig::from_toml(&bad_delta).is_err());
        let typo = MINIMAL.replace("seeds", "seedz");
        assert!(ExperimentConfig::from_toml(&typo).is_err());
        let both = format!("{MINIMAL}\n[algorithm]\nresampling_order = 4\nsamples_fixed = 2\n");
        assert!(ExperimentConfig::from_toml(&both).is_err());
    }

    #[test]
    fn theory_preset() {
        let text = format!(
            "{MINIMAL}\n[algorithm]\nname = \"s-colts\"\npreset = \"theory\"\ndelta = 0.3\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let a = cfg.agent_config(2).unwrap();
        assert_eq!(
            a.base,
            BaseMeasure::Sphere {
                radius: 6f64.sqrt()
            }
        );
        assert!((a.delta - 0.1).abs() < 1e-15);
        let clash = format!("{MINIMAL}\n[algorithm]\npreset = \"theory\"\ngamma = 0.5\n");
        assert!(ExperimentConfig::from_toml(&clash).is_err());
    }

    #[test]
    fn gamma_range_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let (lo, hi) = cfg.gamma_range(9);
        assert!((hi - 27f64.sqrt()).abs() < 1e-12);
        assert!((lo - 27f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn experiment_names() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::parse(e.name()).unwrap(), e);
        }
        assert_eq!(
            Experiment::parse("sweep-gamma").unwrap(),
            Experiment::SweepGamma
        );
        assert!(Experiment::parse("plot").is_err());
    }
}
