//! Run configuration and its TOML file format.
//!
//! ```toml
//! [env]
//! name = "experiment_3_3_2"      # maze name or path to a .maze file
//! success_radius = 0.5
//!
//! [strategy]
//! ratios = "1_4_3_1_1_5"         # real_future_actual_achieved_behavioral_backstep
//!
//! [agent]                        # see HyperParams
//! gamma = 0.98
//!
//! [train]
//! total_timesteps = 100000
//! horizon = 50
//! eval_every = 5000
//! eval_episodes = 10
//! seed = 0
//! buffer_capacity = 200000
//! # early_stop_success = 0.9
//!
//! [mega]
//! enabled = false
//!
//! [output]
//! dir = "runs"
//! ```
//!
//! Only `env.name` and `strategy.ratios` are required. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::HyperParams;
use crate::maze::{self, MazeSpec};
use crate::mega::MegaConfig;
use crate::replay::{StrategyRatios, DEFAULT_CAPACITY};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config key `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: String,
    #[serde(default = "default_radius")]
    pub success_radius: f64,
}

fn default_radius() -> f64 {
    maze::DEFAULT_SUCCESS_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub ratios: StrategyRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_timesteps: u64,
    pub horizon: usize,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Stop after the first evaluation whose success rate reaches this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop_success: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_timesteps: 100_000,
            horizon: 50,
            eval_every: 5_000,
            eval_episodes: 10,
            seed: 0,
            buffer_capacity: DEFAULT_CAPACITY,
            early_stop_success: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("runs") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub agent: HyperParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub mega: MegaConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Defaults everywhere except the two required keys.
    pub fn new(env_name: &str, ratios: StrategyRatios) -> Self {
        RunConfig {
            env: EnvConfig { name: env_name.to_string(), success_radius: default_radius() },
            strategy: StrategyConfig { ratios },
            agent: HyperParams::default(),
            train: TrainConfig::default(),
            mega: MegaConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse { key, message: inner.message().trim().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    pub fn run_id(&self) -> String {
        format!("{}-{}-s{}", self.env.name_stem(), self.strategy.ratios, self.train.seed)
    }

    pub fn maze(&self) -> Result<MazeSpec, ConfigError> {
        self.env.load().map_err(|e| invalid("env.name", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.maze()?;
        let t = &self.train;
        if t.horizon == 0 {
            return Err(invalid("train.horizon", "must be at least 1"));
        }
        if t.eval_every == 0 {
            return Err(invalid("train.eval_every", "must be at least 1"));
        }
        if t.total_timesteps < t.eval_every {
            return Err(invalid("train.total_timesteps", "must be at least train.eval_every"));
        }
        if t.eval_episodes == 0 {
            return Err(invalid("train.eval_episodes", "must be at least 1"));
        }
        if t.buffer_capacity == 0 {
            return Err(invalid("train.buffer_capacity", "must be at least 1"));
        }
        if let Some(s) = t.early_stop_success {
            if !(0.0..=1.0).contains(&s) {
                return Err(invalid("train.early_stop_success", "must be in [0, 1]"));
            }
        }
        self.agent.validate().map_err(|e| match e {
            crate::agent::AgentError::BadHyperParam { key, reason } => invalid(&format!("agent.{key}"), reason),
            other => invalid("agent", other.to_string()),
        })?;
        let m = &self.mega;
        if !(0.0..=1.0).contains(&m.fraction) {
            return Err(invalid("mega.fraction", "must be in [0, 1]"));
        }
        if !(m.bandwidth > 0.0 && m.bandwidth.is_finite()) {
            return Err(invalid("mega.bandwidth", "must be positive"));
        }
        if m.candidates == 0 {
            return Err(invalid("mega.candidates", "must be at least 1"));
        }
        if m.kde_support == 0 {
            return Err(invalid("mega.kde_support", "must be at least 1"));
        }
        Ok(())
    }
}

impl EnvConfig {
    /// A name ending in `.maze` is read from disk, anything else is a
    /// parametric maze name.
    pub fn load(&self) -> Result<MazeSpec, String> {
        if self.name.ends_with(".maze") {
            let text = fs::read_to_string(&self.name).map_err(|e| format!("cannot read {}: {e}", self.name))?;
            MazeSpec::parse_ascii(&self.name_stem(), &text, self.success_radius).map_err(|e| e.to_string())
        } else {
            MazeSpec::from_name(&self.name, self.success_radius).map_err(|e| e.to_string())
        }
    }

    fn name_stem(&self) -> String {
        Path::new(&self.name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.name.clone())
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    RunConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "[env]\nname = \"experiment_3_3_2\"\n[strategy]\nratios = \"1_4_3_1_1_5\"\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c, RunConfig::new("experiment_3_3_2", "1_4_3_1_1_5".parse().unwrap()));
        assert_eq!(c.agent.batch_size, 256);
        assert_eq!(c.train.horizon, 50);
        assert_eq!(c.train.eval_every, 5_000);
        assert_eq!(c.env.success_radius, 0.5);
    }

    #[test]
    fn five_slot_ratios() {
        let c = RunConfig::from_toml_str("[env]\nname = \"square_d\"\n[strategy]\nratios = \"1_4_3_1_1\"\n").unwrap();
        assert_eq!(c.strategy.ratios.as_array(), [1, 4, 3, 1, 1, 0]);
    }

    #[test]
    fn errors_name_the_key() {
        let err = RunConfig::from_toml_str(&format!("{MINIMAL}[train]\neval_every = 0\n")).unwrap_err();
        assert!(err.to_string().contains("train.eval_every"), "{err}");
        let err = RunConfig::from_toml_str(&format!("{MINIMAL}[train]\nhorizon = \"long\"\n")).unwrap_err();
        assert!(err.to_string().contains("train.horizon"), "{err}");
        let err = RunConfig::from_toml_str(&format!("{MINIMAL}[agent]\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = RunConfig::from_toml_str(&format!("{MINIMAL}[agent]\ngamma = 1.5\n")).unwrap_err();
        assert!(err.to_string().contains("agent.gamma"), "{err}");
        let err = RunConfig::from_toml_str("[env]\nname = \"square_d\"\n[strategy]\nratios = \"1_x\"\n").unwrap_err();
        assert!(err.to_string().contains("strategy.ratios"), "{err}");
        let err = RunConfig::from_toml_str("[env]\nname = \"nowhere\"\n[strategy]\nratios = \"1_4_0_0_0_0\"\n").unwrap_err();
        assert!(err.to_string().contains("env.name"), "{err}");
        assert!(matches!(parse_config("/nonexistent/config.toml"), Err(ConfigError::Io { .. })));
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            gamma in 0.5f64..0.999,
            lr in 1e-5f64..1e-2,
            seed in any::<u32>(),
            total in 1u64..10,
            ratios in prop::array::uniform6(0u32..9),
            mega in any::<bool>(),
            stop in prop::option::of(0.0f64..1.0),
        ) {
            prop_assume!(ratios.iter().any(|&r| r > 0));
            let mut c = RunConfig::new("square_d_4", StrategyRatios::new(ratios).unwrap());
            c.agent.gamma = gamma;
            c.agent.actor_lr = lr;
            c.train.seed = seed as u64;
            c.train.total_timesteps = total * c.train.eval_every;
            c.train.early_stop_success = stop;
            c.mega.enabled = mega;
            let text = c.to_toml_string();
            prop_assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
        }
    }
}
