//! Experiment configuration: one TOML file with dotted sections.
//!
//! Every section and every key is optional except `seed`; omitted values take
//! the full-scale model defaults. Unknown keys are rejected so that typos
//! surface as configuration errors instead of silently running defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mec_core::baselines::{LinUcbConfig, SaConfig};
use mec_core::checks::CheckPlan;
use mec_core::gmorl::{Problem, TrainerConfig};
use mec_core::momdp::{preference_grid, Context, ContextSpace, EncodingConfig, MomdpConfig, Preference};
use mec_core::sim::SimConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
    Front,
    Baseline,
    Check,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Eval => "eval",
            Mode::Front => "front",
            Mode::Baseline => "baseline",
            Mode::Check => "check",
        }
    }
}

macro_rules! space_config {
    ($(#[$doc:meta])* $name:ident, $default:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            /// Size of the evenly spaced preference grid.
            pub preferences: usize,
            pub edge_counts: Vec<usize>,
            pub cloud_freq_hz: [f64; 2],
            pub edge_freq_hz: [f64; 2],
        }

        impl Default for $name {
            fn default() -> Self {
                let s: ContextSpace = $default;
                Self {
                    preferences: s.preferences.len(),
                    edge_counts: s.edge_counts,
                    cloud_freq_hz: s.cloud_freq_hz,
                    edge_freq_hz: s.edge_freq_hz,
                }
            }
        }

        impl $name {
            pub fn to_space(&self) -> mec_core::Result<ContextSpace> {
                let space = ContextSpace {
                    preferences: preference_grid(self.preferences)?,
                    edge_counts: self.edge_counts.clone(),
                    cloud_freq_hz: self.cloud_freq_hz,
                    edge_freq_hz: self.edge_freq_hz,
                };
                space.validate()?;
                Ok(space)
            }
        }
    };
}

space_config!(
    /// Context space sampled during training, described by its grid size.
    TrainSpaceConfig,
    ContextSpace::training()
);
space_config!(
    /// Wider context space for generalisation tests.
    TestSpaceConfig,
    ContextSpace::testing()
);

/// Fixed system on which fronts are measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Size of the test preference grid (101 gives steps of 0.01).
    pub preferences: usize,
    pub num_edges: usize,
    pub cloud_freq_hz: f64,
    pub edge_freq_hz: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            preferences: 101,
            num_edges: 6,
            cloud_freq_hz: 4e9,
            edge_freq_hz: 2e9,
        }
    }
}

impl EvalConfig {
    pub fn grid(&self) -> mec_core::Result<Vec<Preference>> {
        preference_grid(self.preferences)
    }

    pub fn context(&self, preference: Preference) -> mec_core::Result<Context> {
        Context::uniform(preference, self.num_edges, self.cloud_freq_hz, self.edge_freq_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Number of cloud probabilities `p` in the random-p sweep.
    pub random_points: usize,
    pub sa: SaConfig,
    pub linucb: LinUcbConfig,
    /// Preference grid size of the multi-policy baseline (one model each).
    pub multipolicy_preferences: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            random_points: 11,
            sa: SaConfig::default(),
            linucb: LinUcbConfig::default(),
            multipolicy_preferences: 11,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_threads() -> usize {
    1
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// When present, must match the subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Relative paths resolve against `MEC_OUTPUT_ROOT` when it is set.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub momdp: MomdpConfig,
    #[serde(default)]
    pub train_space: TrainSpaceConfig,
    #[serde(default)]
    pub test_space: TestSpaceConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default)]
    pub check: CheckPlan,
}

impl ExperimentConfig {
    /// Defaults everywhere except the seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            mode: None,
            output_dir: default_output_dir(),
            threads: 1,
            sim: SimConfig::default(),
            momdp: MomdpConfig::default(),
            train_space: TrainSpaceConfig::default(),
            test_space: TestSpaceConfig::default(),
            trainer: TrainerConfig::default(),
            eval: EvalConfig::default(),
            baselines: BaselineConfig::default(),
            check: CheckPlan::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config, or the resolved config stored in a run manifest
    /// (any `.json` path).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::manifest::RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: not a run manifest: {e}", path.display())))?;
            manifest.config.validate()?;
            return Ok(manifest.config);
        }
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialise config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str, e: mec_core::Error| CliError::Config(format!("{what}: {e}"));
        if self.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("seed must be at most {}", i64::MAX)));
        }
        if self.threads == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        self.sim.validate().map_err(|e| bad("sim", e))?;
        EncodingConfig::new(self.momdp.encoding.max_edges, self.momdp.encoding.hist_bins)
            .map_err(|e| bad("momdp.encoding", e))?;
        if !(self.momdp.scale.time > 0.0 && self.momdp.scale.energy > 0.0) {
            return Err(CliError::Config("momdp.scale coefficients must be positive".into()));
        }
        let train = self.train_space.to_space().map_err(|e| bad("train_space", e))?;
        self.test_space.to_space().map_err(|e| bad("test_space", e))?;
        if train.max_edges() > self.momdp.encoding.max_edges {
            return Err(CliError::Config(format!(
                "train_space allows {} edges but momdp.encoding.max_edges is {}",
                train.max_edges(),
                self.momdp.encoding.max_edges
            )));
        }
        self.trainer.validate().map_err(|e| bad("trainer", e))?;
        if self.eval.episodes == 0 {
            return Err(CliError::Config("eval.episodes must be positive".into()));
        }
        self.eval.grid().map_err(|e| bad("eval.preferences", e))?;
        self.eval
            .context(Preference::from_time_weight(1.0).expect("valid"))
            .map_err(|e| bad("eval", e))?;
        if self.eval.num_edges > self.momdp.encoding.max_edges {
            return Err(CliError::Config(format!(
                "eval.num_edges = {} exceeds momdp.encoding.max_edges = {}",
                self.eval.num_edges, self.momdp.encoding.max_edges
            )));
        }
        if self.baselines.random_points < 2 || self.baselines.multipolicy_preferences < 2 {
            return Err(CliError::Config("baseline grids need at least 2 points".into()));
        }
        if self.baselines.sa.budget == 0 {
            return Err(CliError::Config("baselines.sa.budget must be positive".into()));
        }
        Ok(())
    }

    /// Rejects a config whose `mode` names a different subcommand.
    pub fn check_mode(&self, mode: Mode) -> Result<(), CliError> {
        match self.mode {
            Some(m) if m != mode => Err(CliError::Config(format!(
                "config declares mode = \"{}\" but the {} subcommand was run",
                m.as_str(),
                mode.as_str()
            ))),
            _ => Ok(()),
        }
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        Ok(Problem {
            sim: self.sim.clone(),
            momdp: self.momdp,
            space: self
                .train_space
                .to_space()
                .map_err(|e| CliError::Config(format!("train_space: {e}")))?,
        })
    }

    /// `output_dir`, placed under `root` when relative.
    pub fn resolve_output_dir(&self, root: Option<&Path>) -> PathBuf {
        match root {
            Some(r) if self.output_dir.is_relative() => r.join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_required_and_named() {
        let err = ExperimentConfig::from_toml_str("[sim]\nsteps = 10\n").unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn defaults_fill_everything_else() {
        let cfg = ExperimentConfig::from_toml_str("seed = 3\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::with_seed(3));
        assert_eq!(cfg.sim.steps, 100);
        assert_eq!(cfg.sim.num_users, 10);
        assert_eq!(cfg.sim.channel.bandwidth_hz, 16.6e6);
        assert_eq!(cfg.trainer.epochs, 4000);
        assert_eq!(cfg.trainer.envs_per_epoch, 64);
        assert_eq!(cfg.trainer.batch_size, 4096);
        assert_eq!(cfg.trainer.gamma, 0.95);
        assert_eq!(cfg.train_space.preferences, 64);
        assert_eq!(cfg.test_space.edge_counts, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn dotted_keys_override_single_fields() {
        let cfg = ExperimentConfig::from_toml_str(
            "seed = 1\nsim.steps = 50\ntrainer.epochs = 7\nsim.channel.pathloss_exponent = 3.5\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.steps, 50);
        assert_eq!(cfg.sim.lambda_p, 0.1);
        assert_eq!(cfg.trainer.epochs, 7);
        assert_eq!(cfg.trainer.gamma, 0.95);
        assert_eq!(cfg.sim.channel.pathloss_exponent, 3.5);
        assert_eq!(cfg.sim.channel.bandwidth_hz, 16.6e6);
    }

    #[test]
    fn round_trips_losslessly() {
        let mut cfg = ExperimentConfig::with_seed(99);
        cfg.sim.mean_task_bits = Some(1.25e6);
        cfg.momdp.scale.energy = 0.123456789012345;
        cfg.baselines.sa.initial_temperature = Some(0.5);
        cfg.mode = Some(Mode::Front);
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn rejects_typos_and_bad_values() {
        for text in [
            "seed = 1\nsim.stepz = 3\n",
            "seed = 1\nsim.steps = 0\n",
            "seed = 1\ntrain_space.edge_counts = [1, 9]\n",
            "seed = 1\neval.preferences = 1\n",
            "seed = -4\n",
        ] {
            let err = ExperimentConfig::from_toml_str(text).unwrap_err();
            assert!(matches!(err, CliError::Config(_)), "{text}: {err}");
        }
    }

    #[test]
    fn mode_must_match_the_subcommand() {
        let cfg = ExperimentConfig::from_toml_str("seed = 1\nmode = \"train\"\n").unwrap();
        assert!(cfg.check_mode(Mode::Train).is_ok());
        assert!(cfg.check_mode(Mode::Front).is_err());
    }

    #[test]
    fn relative_output_dirs_follow_the_root() {
        let cfg = ExperimentConfig::with_seed(1);
        assert_eq!(
            cfg.resolve_output_dir(Some(Path::new("/tmp/x"))),
            PathBuf::from("/tmp/x/runs")
        );
        assert_eq!(cfg.resolve_output_dir(None), PathBuf::from("runs"));
    }
}
