//! Scenario suites, per-episode logs and the success / arrival / Ego Score
//! / Social Score metrics.

pub mod export;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crowd::ScenarioKind;
use crate::geometry::Pose;
use crate::policy::{Policy, PolicyError};
use crate::rewards::{RewardMode, RewardParts};
use crate::world::{Command, Done, Env, EnvConfig, MapConfig, Twist, WorldError};

pub use export::{export, ExportFormat};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown suite '{0}'; valid suites: mapless, crowd:<kind>:<count>, combined:<kind>:<count> with kind in crossing|towards|ahead|random")]
    UnknownSuite(String),
    #[error("unknown export format '{0}'; valid formats: trajectory-table, metrics-table, curve-series")]
    UnknownFormat(String),
    #[error("metrics need at least one episode log")]
    EmptyLogs,
    #[error("malformed table {file}: {message}")]
    Parse { file: String, message: String },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Walk-in chance per crowd tick used by crowd suites (about one new
/// pedestrian every 5 s).
pub const SUITE_WALK_IN: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "snake_case")]
pub enum Suite {
    /// Static random maps, no pedestrians.
    Mapless,
    /// Open arena with a crowd scenario.
    Crowd { kind: ScenarioKind, count: usize },
    /// Static random maps plus a crowd scenario.
    Combined { kind: ScenarioKind, count: usize },
}

impl Suite {
    /// Episode configuration template for this suite.
    pub fn env_config(&self, base: &EnvConfig) -> EnvConfig {
        let mut c = base.clone();
        c.reward_mode = RewardMode::Social;
        c.goal_jitter = 0.0;
        c.start_heading_jitter = 0.0;
        let crowd = |c: &mut EnvConfig, kind, count| {
            c.crowd.scenario = Some(kind);
            c.crowd.count = count;
            c.crowd.walk_in_probability = SUITE_WALK_IN;
        };
        match *self {
            Suite::Mapless => {
                c.crowd.count = 0;
                c.crowd.scenario = None;
                c.crowd.walk_in_probability = 0.0;
            }
            Suite::Crowd { kind, count } => {
                c.map = MapConfig {
                    obstacle_count_range: [0, 0],
                    ..c.map
                };
                crowd(&mut c, kind, count);
            }
            Suite::Combined { kind, count } => crowd(&mut c, kind, count),
        }
        c
    }

    /// Name safe for file names.
    pub fn slug(&self) -> String {
        self.to_string().replace(':', "-")
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Suite::Mapless => f.write_str("mapless"),
            Suite::Crowd { kind, count } => write!(f, "crowd:{kind}:{count}"),
            Suite::Combined { kind, count } => write!(f, "combined:{kind}:{count}"),
        }
    }
}

impl FromStr for Suite {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || EvalError::UnknownSuite(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["mapless"] => Ok(Suite::Mapless),
            [family @ ("crowd" | "combined"), kind, count] => {
                let kind: ScenarioKind = kind.parse().map_err(|_| unknown())?;
                let count: usize = count.parse().map_err(|_| unknown())?;
                Ok(if *family == "crowd" {
                    Suite::Crowd { kind, count }
                } else {
                    Suite::Combined { kind, count }
                })
            }
            _ => Err(unknown()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianPose {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// One record per policy step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub pose: Pose,
    pub twist: Twist,
    pub command: Command,
    pub reward: RewardParts,
    pub ego_violation: bool,
    pub social_violations: usize,
    pub pedestrians: Vec<PedestrianPose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub suite: String,
    pub policy: String,
    pub root_seed: u64,
    pub episode: u64,
    pub config: EnvConfig,
    pub records: Vec<StepRecord>,
    pub outcome: Done,
    /// Simulated seconds to the goal; `None` unless the goal was reached.
    pub arriving_time: Option<f64>,
}

impl EpisodeLog {
    /// Steps inside the ego-safety zone.
    pub fn ego_violation_steps(&self) -> usize {
        self.records.iter().filter(|r| r.ego_violation).count()
    }

    /// Steps whose social zone intersected any pedestrian's zone.
    pub fn social_violation_steps(&self) -> usize {
        self.records.iter().filter(|r| r.social_violations > 0).count()
    }
}

/// Runs one episode of `config` under `policy` until it terminates.
pub fn run_episode(
    policy: &dyn Policy,
    config: EnvConfig,
    suite: &str,
    root_seed: u64,
    episode: u64,
) -> Result<EpisodeLog, EvalError> {
    let mut env = Env::new(config.clone())?;
    let mut records = Vec::new();
    loop {
        let command = policy.act(&env.observation())?;
        let out = env.step_command(command)?;
        let a = &out.info.assessment;
        records.push(StepRecord {
            step: out.info.step,
            time: out.info.time,
            pose: out.info.robot.pose,
            twist: out.info.robot.twist,
            command,
            reward: out.reward_parts,
            ego_violation: a.ego_violation,
            social_violations: a.violations,
            pedestrians: env
                .pedestrians()
                .iter()
                .map(|p| PedestrianPose {
                    id: p.id,
                    x: p.position.x,
                    y: p.position.y,
                    heading: p.heading,
                })
                .collect(),
        });
        if out.done.is_terminal() {
            return Ok(EpisodeLog {
                suite: suite.to_string(),
                policy: policy.name().to_string(),
                root_seed,
                episode,
                config,
                records,
                outcome: out.done,
                arriving_time: (out.done == Done::Reached).then_some(out.info.time),
            });
        }
    }
}

/// Runs `runs` seeded episodes of `suite`. Episode `i` derives its map and
/// crowd seeds from `(seed, i)`, so results do not depend on `parallel`.
pub fn run_suite(
    policy: &dyn Policy,
    suite: &Suite,
    base: &EnvConfig,
    runs: usize,
    seed: u64,
    parallel: bool,
) -> Result<Vec<EpisodeLog>, EvalError> {
    let template = suite.env_config(base);
    let name = suite.to_string();
    let one = |i: usize| run_episode(policy, template.for_episode(seed, i as u64), &name, seed, i as u64);
    if parallel {
        (0..runs).into_par_iter().map(one).collect()
    } else {
        (0..runs).map(one).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivingTime {
    /// `None` when no run succeeded.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Suite-level table row: exactly the four reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    /// Percent of runs that reached the goal.
    pub success_rate: f64,
    pub arriving_time: ArrivingTime,
    /// Mean over episodes of `(1 − k/N)·100`.
    pub ego_score: f64,
    /// Mean over episodes of `(1 − m/N)·100`.
    pub social_score: f64,
}

/// Per-episode summary used by [`metrics_from_summaries`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub steps: usize,
    pub ego_violation_steps: usize,
    pub social_violation_steps: usize,
    pub arriving_time: Option<f64>,
}

pub fn score(violations: usize, steps: usize) -> f64 {
    if steps == 0 {
        100.0
    } else {
        (1.0 - violations as f64 / steps as f64) * 100.0
    }
}

pub fn metrics_from_summaries(eps: &[EpisodeSummary]) -> Result<Metrics, EvalError> {
    if eps.is_empty() {
        return Err(EvalError::EmptyLogs);
    }
    let n = eps.len() as f64;
    let times: Vec<f64> = eps.iter().filter_map(|e| e.arriving_time).collect();
    let (mean, std) = if times.is_empty() {
        (None, None)
    } else {
        let m = times.iter().sum::<f64>() / times.len() as f64;
        let var = times.iter().map(|t| (t - m).powi(2)).sum::<f64>() / times.len() as f64;
        (Some(m), Some(var.sqrt()))
    };
    Ok(Metrics {
        success_rate: times.len() as f64 / n * 100.0,
        arriving_time: ArrivingTime { mean, std },
        ego_score: eps.iter().map(|e| score(e.ego_violation_steps, e.steps)).sum::<f64>() / n,
        social_score: eps.iter().map(|e| score(e.social_violation_steps, e.steps)).sum::<f64>() / n,
    })
}

pub fn summarize(log: &EpisodeLog) -> EpisodeSummary {
    EpisodeSummary {
        steps: log.records.len(),
        ego_violation_steps: log.ego_violation_steps(),
        social_violation_steps: log.social_violation_steps(),
        arriving_time: log.arriving_time,
    }
}

pub fn compute_metrics(logs: &[EpisodeLog]) -> Result<Metrics, EvalError> {
    metrics_from_summaries(&logs.iter().map(summarize).collect::<Vec<_>>())
}
