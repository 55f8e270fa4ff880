//! Versioned JSON checkpoints.
//!
//! Floats are written in shortest round-trip decimal form and parsed with
//! correct rounding, so saving and loading reproduces every weight bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, ACTOR_OUTPUT, CRITIC_OUTPUT};
use crate::config::RunConfig;
use crate::nn::{Mlp, NnError, OutputActivation};

pub const FORMAT: &str = "gber-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint format {format:?} version {version}")]
    Unsupported { format: String, version: u32 },
    #[error("checkpoint network {name} has the wrong output activation")]
    WrongActivation { name: &'static str },
    #[error("checkpoint network {name}: {source}")]
    Network { name: &'static str, source: NnError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub layer_sizes: Vec<usize>,
    pub output: OutputActivation,
    pub layers: Vec<LayerRecord>,
}

impl NetworkRecord {
    pub fn from_mlp(net: &Mlp) -> Self {
        NetworkRecord {
            layer_sizes: net.sizes().to_vec(),
            output: net.output_activation(),
            layers: net.layers().into_iter().map(|(weights, biases)| LayerRecord { weights, biases }).collect(),
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp, NnError> {
        let layers: Vec<(Vec<f64>, Vec<f64>)> =
            self.layers.iter().map(|l| (l.weights.clone(), l.biases.clone())).collect();
        Mlp::from_layers(&self.layer_sizes, self.output, &layers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Networks {
    pub actor: NetworkRecord,
    pub critic: NetworkRecord,
    pub target_actor: NetworkRecord,
    pub target_critic: NetworkRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Master seed every random stream of the run was derived from.
    pub seed: u64,
    pub timesteps: u64,
    pub config: RunConfig,
    pub networks: Networks,
}

impl Checkpoint {
    pub fn from_agent(agent: &Agent, config: &RunConfig, timesteps: u64) -> Self {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            seed: config.train.seed,
            timesteps,
            config: config.clone(),
            networks: Networks {
                actor: NetworkRecord::from_mlp(&agent.actor),
                critic: NetworkRecord::from_mlp(&agent.critic),
                target_actor: NetworkRecord::from_mlp(&agent.target_actor),
                target_critic: NetworkRecord::from_mlp(&agent.target_critic),
            },
        }
    }

    /// Rebuilds the agent; optimizer moments start fresh.
    pub fn to_agent(&self) -> Result<Agent, CheckpointError> {
        let net = |name: &'static str, rec: &NetworkRecord, expected: OutputActivation| {
            if rec.output != expected {
                return Err(CheckpointError::WrongActivation { name });
            }
            rec.to_mlp().map_err(|source| CheckpointError::Network { name, source })
        };
        Ok(Agent::from_networks(
            net("actor", &self.networks.actor, ACTOR_OUTPUT)?,
            net("critic", &self.networks.critic, CRITIC_OUTPUT)?,
            net("target_actor", &self.networks.target_actor, ACTOR_OUTPUT)?,
            net("target_critic", &self.networks.target_critic, CRITIC_OUTPUT)?,
            self.config.agent.clone(),
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(CheckpointError::Unsupported { format: ck.format, version: ck.version });
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Checkpoint::from_json(&fs::read_to_string(path)?)
    }
}
