//! TOML configuration file.
//!
//! Every table is optional and every key falls back to its default:
//!
//! ```toml
//! [env]            # EnvConfig: start, goal, max_steps, goal_tolerance, ...
//! [env.map]        # arena, obstacle_count_range, obstacle_size_range, ...
//! [env.crowd]      # count, scenario, walk_in_probability, speed_range, ...
//! [env.lidar]      # beams, fov_deg, min_range, max_range, history, noise_std
//! [env.rewards]    # ego_margin, headway_time, goal_bonus, ...
//! [env.rates]      # scan_hz, control_hz, policy_hz
//! [train]          # seed, budget, envs, warmup, update_ratio, noise_*, ...
//! [train.network]  # conv = [{ kernel, stride, channels, pool }], dense
//! [train.ddpg]     # gamma, tau, lr_actor, lr_critic, batch_size, buffer_capacity
//! [greedy]         # window_at_180, lambda, k_p, ...
//! ```
//!
//! Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::GreedyParams;
use crate::lidar::LidarConfig;
use crate::policy::train::desk_env;
use crate::policy::TrainConfig;
use crate::world::EnvConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub greedy: GreedyParams,
}

impl FileConfig {
    /// 180-beam scans, the reduced network and a short budget.
    pub fn desk() -> Self {
        FileConfig {
            env: desk_env(),
            train: TrainConfig::desk(),
            greedy: GreedyParams::default(),
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<FileConfig, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        FileConfig::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises to TOML")
    }

    pub fn lidar(&self) -> &LidarConfig {
        &self.env.lidar
    }
}
