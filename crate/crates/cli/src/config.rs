//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparsebayes::analysis::{LandscapeParams, Method};
use sparsebayes::radar::{BinScaling, DEFAULT_A0};
use sparsebayes::solvers::CondMode;
use sparsebayes::{SolverConfig, SolverKind};

use crate::error::{config_err, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Synth,
    Solve,
    SweepNoise,
    SweepK,
    SweepM,
    Landscape,
    Resolution,
    Radar,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Synth => "synth",
            Experiment::Solve => "solve",
            Experiment::SweepNoise => "sweep_noise",
            Experiment::SweepK => "sweep_k",
            Experiment::SweepM => "sweep_m",
            Experiment::Landscape => "landscape",
            Experiment::Resolution => "resolution",
            Experiment::Radar => "radar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub landscape: LandscapeSection,
    #[serde(default)]
    pub resolution: ResolutionSection,
    #[serde(default)]
    pub radar: RadarSection,
}

fn one() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Pgm]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayChoice {
    Spa,
    Coprime,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaySource {
    SixRays,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_grid: usize,
    pub array: ArrayChoice,
    /// Element count of a sparse array.
    pub m: usize,
    pub coprime: [usize; 2],
    /// Seed of the sparse array layout; the experiment seed when absent.
    pub array_seed: Option<u64>,
    pub noise_sigma: f64,
    pub rays: RaySource,
    pub k_rays: usize,
    /// Smallest circular distance between random ray bins.
    pub min_separation: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_grid: 256,
            array: ArrayChoice::Spa,
            m: 80,
            coprime: [8, 9],
            array_seed: None,
            noise_sigma: 0.1,
            rays: RaySource::SixRays,
            k_rays: 6,
            min_separation: 3,
        }
    }
}

/// Solver list plus any [`SolverConfig`] fields to override.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    #[serde(default = "all_methods")]
    pub methods: Vec<SolverKind>,
    #[serde(flatten)]
    pub overrides: toml::Table,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { methods: all_methods(), overrides: toml::Table::new() }
    }
}

fn all_methods() -> Vec<SolverKind> {
    SolverKind::ALL.to_vec()
}

impl SolverSection {
    /// Applies the overrides on top of `base`. Unknown keys are rejected.
    pub fn apply(&self, base: SolverConfig) -> CliResult<SolverConfig> {
        let mut value = serde_json::to_value(&base).map_err(config_err)?;
        let fields = value.as_object_mut().expect("solver config serializes to an object");
        for (key, v) in &self.overrides {
            if !fields.contains_key(key) {
                return Err(CliError::Config(format!("unknown field `solver.{key}`")));
            }
            fields.insert(key.clone(), serde_json::to_value(v).map_err(config_err)?);
        }
        let cfg: SolverConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("solver: {e}")))?;
        cfg.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Grid of the swept quantity; a per-axis default when absent.
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeSection {
    pub methods: Vec<Method>,
    pub params: LandscapeParams,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        Self {
            methods: vec![
                Method::Lp(0.01),
                Method::Lp(0.1),
                Method::Lp(0.5),
                Method::Cg(0.2),
                Method::Cg(1.0),
                Method::Sbl,
                Method::Blrc,
            ],
            params: LandscapeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionCase {
    /// Unit rays at bins 500 and 505.
    Equal,
    /// Rays of amplitude 1 and 0.2 at bins 500 and 510.
    Unequal,
}

impl ResolutionCase {
    /// `(bin, amplitude, phase)` of both rays on a 1000-point grid.
    pub fn rays(self) -> [(usize, f64, f64); 2] {
        match self {
            ResolutionCase::Equal => [(500, 1.0, 0.3), (505, 1.0, 2.1)],
            ResolutionCase::Unequal => [(500, 1.0, 0.3), (510, 0.2, 2.1)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResolutionCase::Equal => "equal",
            ResolutionCase::Unequal => "unequal",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionSection {
    pub n_grid: usize,
    pub coprime: [usize; 2],
    pub noise_sigma: f64,
    pub cases: Vec<ResolutionCase>,
}

impl Default for ResolutionSection {
    fn default() -> Self {
        Self {
            n_grid: 1000,
            coprime: [8, 9],
            noise_sigma: 0.01,
            cases: vec![ResolutionCase::Equal, ResolutionCase::Unequal],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneChoice {
    CornerReflectors,
    Street,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub coprime: [usize; 2],
    pub noise_sigma: f64,
    pub scene: SceneChoice,
    /// Reflector amplitude law `a0 / r`.
    pub a0: f64,
    /// Range bins within this many dB of the strongest one are processed.
    pub range_threshold_db: f64,
    /// Pixels above this level (dB relative to the image peak) count as
    /// detections when scoring.
    pub detect_floor_db: f64,
    /// Scoring tolerance in range bins and image columns.
    pub tol_cells: usize,
    pub scaling: BinScaling,
    /// Atom budget for OMP rows.
    pub omp_max_atoms: usize,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            coprime: [8, 9],
            noise_sigma: 0.03,
            scene: SceneChoice::CornerReflectors,
            a0: DEFAULT_A0,
            range_threshold_db: 15.0,
            detect_floor_db: -30.0,
            tol_cells: 1,
            scaling: BinScaling::UnitRms,
            omp_max_atoms: 8,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let single = matches!(
            self.experiment,
            Experiment::Synth | Experiment::Solve | Experiment::Landscape | Experiment::Resolution
        );
        if single && self.trials != 1 {
            return bad(format!("trials must be 1 for experiment `{}`", self.experiment.name()));
        }
        if self.formats.is_empty() {
            return bad("formats must name at least one of csv, json, pgm".into());
        }
        if self.solver.methods.is_empty() {
            return bad("solver.methods is empty".into());
        }
        let m = &self.model;
        if m.n_grid < 2 {
            return bad("model.n_grid must be at least 2".into());
        }
        if !(m.noise_sigma >= 0.0) {
            return bad(format!("model.noise_sigma must be nonnegative, got {}", m.noise_sigma));
        }
        if m.k_rays == 0 {
            return bad("model.k_rays must be at least 1".into());
        }
        if let Some(values) = &self.sweep.values {
            if values.is_empty() {
                return bad("sweep.values is empty".into());
            }
            let integral = matches!(self.experiment, Experiment::SweepK | Experiment::SweepM);
            for &v in values {
                let ok = if integral { v >= 1.0 && v.fract() == 0.0 } else { v >= 0.0 && v.is_finite() };
                if !ok {
                    return bad(format!("sweep.values entry {v} is not valid for `{}`", self.experiment.name()));
                }
            }
        }
        if self.experiment == Experiment::SweepM && m.array != ArrayChoice::Spa {
            return bad("sweep_m needs model.array = \"spa\"".into());
        }
        let r = &self.radar;
        if !(r.noise_sigma >= 0.0 && r.a0 > 0.0 && r.range_threshold_db >= 0.0 && r.detect_floor_db < 0.0) {
            return bad("radar: noise_sigma >= 0, a0 > 0, range_threshold_db >= 0 and detect_floor_db < 0 required".into());
        }
        if r.omp_max_atoms == 0 {
            return bad("radar.omp_max_atoms must be at least 1".into());
        }
        if !(self.resolution.noise_sigma >= 0.0) || self.resolution.cases.is_empty() {
            return bad("resolution: noise_sigma >= 0 and at least one case required".into());
        }
        if self.resolution.n_grid < 511 {
            return bad("resolution.n_grid must be at least 511 so both rays fit on the grid".into());
        }
        // solver overrides are checked here so a typo fails before any work
        self.solver_config()?;
        Ok(())
    }

    /// Solver settings for this experiment: per-array defaults, a fast
    /// posterior path for the Monte Carlo and imaging runs, then the
    /// overrides from the file.
    pub fn solver_config(&self) -> CliResult<SolverConfig> {
        let fast = |c: SolverConfig| SolverConfig { use_woodbury: true, cond_mode: CondMode::Estimate, ..c };
        let base = match self.experiment {
            Experiment::Synth | Experiment::Landscape | Experiment::Solve => match self.model.array {
                ArrayChoice::Coprime => SolverConfig::cpa(),
                _ => SolverConfig::spa(),
            },
            Experiment::SweepNoise | Experiment::SweepK | Experiment::SweepM => fast(SolverConfig::spa()),
            Experiment::Resolution | Experiment::Radar => {
                fast(SolverConfig { init_sigma_n: 0.01, ..SolverConfig::cpa() })
            }
        };
        self.solver.apply(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::parse("experiment = \"solve\"").unwrap();
        assert_eq!(c.trials, 1);
        assert_eq!(c.model.m, 80);
        assert_eq!(c.solver.methods.len(), 4);
        assert_eq!(c.solver_config().unwrap(), SolverConfig::spa());
    }

    #[test]
    fn missing_experiment_names_field() {
        let e = ExperimentConfig::parse("seed = 3").unwrap_err();
        assert!(e.to_string().contains("experiment"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_experiment_rejected() {
        let e = ExperimentConfig::parse("experiment = \"nope\"").unwrap_err();
        assert!(e.to_string().contains("nope"), "{e}");
    }

    #[test]
    fn solver_overrides_apply_and_typos_fail() {
        let c = ExperimentConfig::parse(
            "experiment = \"solve\"\n[model]\narray = \"coprime\"\n[solver]\nmethods = [\"blrc\"]\nmax_iters = 40\nprune_threshold = 1e-4\n",
        )
        .unwrap();
        let s = c.solver_config().unwrap();
        assert_eq!(s.max_iters, 40);
        assert_eq!(s.prune_threshold, Some(1e-4));
        assert_eq!(s.init_gamma, SolverConfig::cpa().init_gamma);
        let e = ExperimentConfig::parse("experiment = \"solve\"\n[solver]\nmax_iter = 40\n").unwrap_err();
        assert!(e.to_string().contains("solver.max_iter"), "{e}");
        let e = ExperimentConfig::parse("experiment = \"solve\"\n[solver]\nmax_iters = 0\n").unwrap_err();
        assert!(e.to_string().contains("max_iters"), "{e}");
    }

    #[test]
    fn trials_rules() {
        assert!(ExperimentConfig::parse("experiment = \"sweep_noise\"\ntrials = 0").is_err());
        assert!(ExperimentConfig::parse("experiment = \"solve\"\ntrials = 2").is_err());
        assert!(ExperimentConfig::parse("experiment = \"radar\"\ntrials = 5").is_ok());
    }

    #[test]
    fn sweep_values_checked_per_axis() {
        assert!(ExperimentConfig::parse("experiment = \"sweep_k\"\n[sweep]\nvalues = [1, 2.5]").is_err());
        assert!(ExperimentConfig::parse("experiment = \"sweep_k\"\n[sweep]\nvalues = [1, 2]").is_ok());
        assert!(ExperimentConfig::parse("experiment = \"sweep_noise\"\n[sweep]\nvalues = [-0.1]").is_err());
    }

    #[test]
    fn landscape_methods_parse() {
        let c = ExperimentConfig::parse(
            "experiment = \"landscape\"\n[landscape]\nmethods = [{ kind = \"lp\", param = 0.01 }, { kind = \"blrc\" }]\n",
        )
        .unwrap();
        assert_eq!(c.landscape.methods, vec![Method::Lp(0.01), Method::Blrc]);
    }
}
