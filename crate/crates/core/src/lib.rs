//! Goal-conditioned DDPG with relabeled replay for 2D point mazes.
//!
//! The replay buffer can mix six goal-relabeling categories per minibatch,
//! including back-stepped transitions that reverse an observed move and
//! relabel it with a goal achieved earlier in the same episode.

pub mod agent;
pub mod checkpoint;
pub mod config;
pub mod geom;
pub mod maze;
pub mod mega;
pub mod nn;
pub mod plot;
pub mod replay;
pub mod report;
pub mod trainer;

pub use agent::{Agent, HyperParams};
pub use checkpoint::Checkpoint;
pub use config::{parse_config, RunConfig};
pub use geom::Vec2;
pub use maze::{load_maze, MazeSpec};
pub use replay::{apportion, BufferSet, Category, StrategyRatios};
pub use trainer::{evaluate, train, train_in_memory};
