//! Learned navigation policies: networks, the DDPG learner, replay memory,
//! checkpoints and the staged training driver.

pub mod adam;
pub mod checkpoint;
pub mod ddpg;
pub mod network;
pub mod nn;
pub mod replay;
pub mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rewards::RewardMode;
use crate::world::{Command, Observation, WorldError};

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use ddpg::{Agent, DdpgParams, LossStats};
pub use network::{FeatureBatch, NetKind, Network, NetworkSpec};
pub use replay::{ReplayBuffer, TrainBatch, Transition};
pub use train::{train, CurveRecord, TrainConfig, TrainOutcome, TrainSink};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("{what} shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("invalid network architecture: {0}")]
    InvalidArchitecture(String),
    #[error("batch of {batch} requested from a replay buffer holding {occupancy}")]
    BatchTooLarge { batch: usize, occupancy: usize },
    #[error("critic diverged at update {update} (env step {env_step}): loss {loss:e}; {diagnostics}")]
    Diverged {
        update: u64,
        env_step: u64,
        loss: f64,
        diagnostics: String,
    },
    #[error("social stage needs a warm start from an ego checkpoint (or an explicit override)")]
    MissingWarmStart,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("external policy unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Training stage; also selects the reward mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ego,
    Social,
}

impl Stage {
    pub fn reward_mode(self) -> RewardMode {
        match self {
            Stage::Ego => RewardMode::Ego,
            Stage::Social => RewardMode::Social,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ego => "ego",
            Stage::Social => "social",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ego" => Ok(Stage::Ego),
            "social" => Ok(Stage::Social),
            other => Err(format!("unknown stage '{other}' (expected ego or social)")),
        }
    }
}

/// Anything that maps an observation to a robot command.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;
    fn act(&self, obs: &Observation) -> Result<Command, PolicyError>;
}

/// A trained actor, acting deterministically.
#[derive(Debug, Clone)]
pub struct ActorPolicy {
    pub name: String,
    pub actor: Network,
}

impl ActorPolicy {
    pub fn from_checkpoint(name: impl Into<String>, ckpt: &Checkpoint) -> Result<ActorPolicy, PolicyError> {
        Ok(ActorPolicy {
            name: name.into(),
            actor: ckpt.actor()?,
        })
    }
}

impl Policy for ActorPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&self, obs: &Observation) -> Result<Command, PolicyError> {
        Ok(Command::Action(self.actor.act(&obs.feature)?))
    }
}
