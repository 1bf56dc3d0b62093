//! Staged training driver.
//!
//! Several environments are stepped in lockstep; every transition goes to
//! one replay memory and a single learner updates after each lockstep. The
//! environments share nothing, so stepping them on worker threads yields
//! exactly the same trajectories as stepping them in order.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::checkpoint::{Checkpoint, CheckpointMeta};
use super::ddpg::{Agent, DdpgParams, LossStats};
use super::network::{FeatureBatch, NetworkSpec};
use super::replay::{CompactObs, ReplayBuffer, TrainBatch, Transition};
use super::{PolicyError, Stage};
use crate::crowd::ScenarioKind;
use crate::lidar::{LidarConfig, MotionFeature};
use crate::world::{Action, Done, Env, EnvConfig, MapConfig, ACTION_LIMIT};
use crate::seed::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    /// Environment steps (policy periods summed over all environments).
    pub budget: u64,
    /// Environments stepped in lockstep.
    pub envs: usize,
    /// Steps with uniformly random actions before the actor takes over
    /// (skipped when warm-starting).
    pub warmup: u64,
    /// Learner updates per environment step.
    pub update_ratio: f64,
    pub noise_start: f64,
    pub noise_end: f64,
    /// Env steps between checkpoints handed to the sink; 0 disables.
    pub checkpoint_interval: u64,
    /// Episodes in the trailing success-rate window of the curve.
    pub success_window: usize,
    pub divergence_threshold: f64,
    /// Allows the social stage to start from fresh weights.
    pub allow_cold_social: bool,
    pub network: NetworkSpec,
    pub ddpg: DdpgParams,
    /// Episode `i` uses `curriculum[i % len]`, reseeded per episode. Empty
    /// selects the stage's built-in curriculum.
    pub curriculum: Vec<EnvConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            budget: 300_000,
            envs: 4,
            warmup: 2_000,
            update_ratio: 1.0,
            noise_start: 0.5,
            noise_end: 0.05,
            checkpoint_interval: 10_000,
            success_window: 20,
            divergence_threshold: 1e6,
            allow_cold_social: false,
            network: NetworkSpec::default(),
            ddpg: DdpgParams::default(),
            curriculum: Vec::new(),
        }
    }
}

impl TrainConfig {
    /// Reduced setting for 180-beam scans on one CPU core.
    pub fn desk() -> Self {
        TrainConfig {
            budget: 100_000,
            network: NetworkSpec::desk(),
            ddpg: DdpgParams {
                batch_size: 64,
                buffer_capacity: 50_000,
                ..DdpgParams::default()
            },
            update_ratio: 0.5,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::Config(m.to_string()));
        if self.envs == 0 {
            return bad("envs must be positive");
        }
        if !(self.update_ratio >= 0.0 && self.update_ratio.is_finite()) {
            return bad("update_ratio must be a non-negative number");
        }
        if !(self.noise_start >= 0.0 && self.noise_end >= 0.0) {
            return bad("noise levels must be non-negative");
        }
        if self.ddpg.batch_size == 0 || self.ddpg.buffer_capacity < self.ddpg.batch_size {
            return bad("buffer_capacity must be at least batch_size > 0");
        }
        if !(0.0..=1.0).contains(&self.ddpg.tau) || !(0.0..=1.0).contains(&self.ddpg.gamma) {
            return bad("tau and gamma must lie in [0, 1]");
        }
        Ok(())
    }
}

/// SHA-256 (hex) over the canonical JSON of the training and environment
/// configuration, ignoring the seed.
pub fn config_hash(cfg: &TrainConfig, env: &EnvConfig) -> String {
    let unseeded = TrainConfig { seed: 0, ..cfg.clone() };
    let json = serde_json::to_vec(&(unseeded, env)).expect("config serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Episode mix for `stage` around `base`: the ego stage sees static maps
/// with sparse crowds, the social stage dense crowds with and without
/// obstacles.
pub fn stage_curriculum(stage: Stage, base: &EnvConfig) -> Vec<EnvConfig> {
    let with = |map: MapConfig, kind: Option<ScenarioKind>, count: usize, walk_in: f64| {
        let mut c = base.clone();
        c.map = map;
        c.crowd.scenario = kind;
        c.crowd.count = count;
        c.crowd.walk_in_probability = walk_in;
        c.reward_mode = stage.reward_mode();
        c
    };
    let obstacles = base.map.clone();
    let open = MapConfig {
        obstacle_count_range: [0, 0],
        ..base.map.clone()
    };
    match stage {
        Stage::Ego => vec![
            with(obstacles.clone(), None, 0, 0.0),
            with(obstacles.clone(), None, 0, 0.0),
            with(obstacles, Some(ScenarioKind::Random), 2, 0.0),
        ],
        Stage::Social => vec![
            with(open.clone(), Some(ScenarioKind::Crossing), 8, 0.01),
            with(open.clone(), Some(ScenarioKind::Towards), 6, 0.01),
            with(open, Some(ScenarioKind::Random), 8, 0.01),
            with(obstacles, Some(ScenarioKind::Crossing), 4, 0.0),
        ],
    }
}

/// Training environment defaults: 180-beam scans and a jittered goal.
pub fn desk_env() -> EnvConfig {
    EnvConfig {
        lidar: LidarConfig::desk(),
        goal_jitter: 0.5,
        start_heading_jitter: std::f64::consts::FRAC_PI_4,
        ..EnvConfig::default()
    }
}

/// One line of the training curve, written when an episode ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub episode: u64,
    pub env_steps: u64,
    pub updates: u64,
    pub episode_return: f64,
    pub episode_steps: usize,
    pub outcome: Done,
    /// Fraction of the trailing window of episodes that reached the goal.
    pub success_rate: f64,
    pub critic_loss: f64,
    pub actor_objective: f64,
    pub noise: f64,
}

/// Receives curve records and periodic checkpoints as training runs.
pub trait TrainSink {
    fn record(&mut self, _record: &CurveRecord) -> Result<(), PolicyError> {
        Ok(())
    }
    fn checkpoint(&mut self, _ckpt: &Checkpoint) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl TrainSink for NullSink {}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub curve: Vec<CurveRecord>,
}

struct Slot {
    env: Env,
    obs: Arc<CompactObs>,
    feature: MotionFeature,
    episode: u64,
    ret: f64,
    steps: usize,
}

struct Episodes<'a> {
    curriculum: &'a [EnvConfig],
    seed: u64,
    next: u64,
}

impl Episodes<'_> {
    fn start(&mut self) -> Result<Slot, PolicyError> {
        let i = self.next;
        self.next += 1;
        let base = &self.curriculum[(i % self.curriculum.len() as u64) as usize];
        let env = Env::new(base.for_episode(seed::derive(self.seed, Stream::Episode, 0), i))?;
        let feature = env.feature();
        Ok(Slot {
            obs: Arc::new(CompactObs::from_feature(&feature)),
            feature,
            env,
            episode: i,
            ret: 0.0,
            steps: 0,
        })
    }
}

/// Runs one training stage.
///
/// With `budget == 0` the returned checkpoint holds the warm start (or the
/// fresh initialisation) unchanged.
pub fn train(
    cfg: &TrainConfig,
    stage: Stage,
    base_env: &EnvConfig,
    warm_start: Option<&Checkpoint>,
    parallel: bool,
    sink: &mut dyn TrainSink,
) -> Result<TrainOutcome, PolicyError> {
    cfg.validate()?;
    if stage == Stage::Social && warm_start.is_none() && !cfg.allow_cold_social {
        return Err(PolicyError::MissingWarmStart);
    }
    let rows = base_env.lidar.history;
    let beams = base_env.lidar.beams;
    let mut agent = match warm_start {
        Some(ckpt) => {
            if ckpt.meta.input != [rows, beams] {
                return Err(PolicyError::ShapeMismatch {
                    what: "warm-start input",
                    expected: format!("{rows}x{beams}"),
                    got: format!("{}x{}", ckpt.meta.input[0], ckpt.meta.input[1]),
                });
            }
            let mut a = ckpt.agent()?;
            a.params = cfg.ddpg.clone();
            a.actor_opt.params.lr = cfg.ddpg.lr_actor;
            a.critic_opt.params.lr = cfg.ddpg.lr_critic;
            a
        }
        None => Agent::new(
            &cfg.network,
            rows,
            beams,
            cfg.ddpg.clone(),
            &mut seed::rng_for(cfg.seed, Stream::Network, 0),
        )?,
    };
    let network = agent.actor.spec.clone();
    let mut meta = CheckpointMeta {
        stage,
        network,
        input: [rows, beams],
        ddpg: cfg.ddpg.clone(),
        env_steps: 0,
        updates: agent.updates,
        episodes: 0,
        config_hash: config_hash(cfg, base_env),
    };
    let mut curve = Vec::new();
    if cfg.budget == 0 {
        let checkpoint = match warm_start {
            Some(c) => c.clone(),
            None => Checkpoint::from_agent(&agent, meta),
        };
        return Ok(TrainOutcome { checkpoint, curve });
    }

    let curriculum = if cfg.curriculum.is_empty() {
        stage_curriculum(stage, base_env)
    } else {
        cfg.curriculum
            .iter()
            .cloned()
            .map(|mut c| {
                c.reward_mode = stage.reward_mode();
                c
            })
            .collect()
    };
    for c in &curriculum {
        c.validate()?;
        if [c.lidar.history, c.lidar.beams] != [rows, beams] {
            return Err(PolicyError::Config("all curriculum entries must share the scan shape".into()));
        }
    }
    let mut episodes = Episodes {
        curriculum: &curriculum,
        seed: cfg.seed,
        next: 0,
    };
    let mut slots = (0..cfg.envs).map(|_| episodes.start()).collect::<Result<Vec<_>, _>>()?;

    let mut noise_rng = seed::rng_for(cfg.seed, Stream::Exploration, 0);
    let mut replay_rng = seed::rng_for(cfg.seed, Stream::Replay, 0);
    let mut buffer = ReplayBuffer::new(cfg.ddpg.buffer_capacity);
    let warmup = if warm_start.is_some() { 0 } else { cfg.warmup };
    let mut env_steps = 0u64;
    let mut update_credit = 0.0;
    let mut last = LossStats::default();
    let mut window: VecDeque<bool> = VecDeque::new();
    let mut next_checkpoint = cfg.checkpoint_interval;

    while env_steps < cfg.budget {
        let progress = (env_steps as f64 / cfg.budget as f64).min(1.0);
        let sigma = cfg.noise_start + (cfg.noise_end - cfg.noise_start) * progress;
        let actions: Vec<Action> = if env_steps < warmup {
            slots
                .iter()
                .map(|_| {
                    Action::new(
                        noise_rng.random_range(-ACTION_LIMIT..=ACTION_LIMIT),
                        noise_rng.random_range(-ACTION_LIMIT..=ACTION_LIMIT),
                    )
                })
                .collect()
        } else {
            let batch = FeatureBatch::from_features(slots.iter().map(|s| &s.feature))?;
            let mu = agent.actor.forward(batch.scans.view(), batch.goals.view(), None)?;
            let normal = Normal::new(0.0, sigma.max(1e-12)).expect("positive sigma");
            mu.rows()
                .into_iter()
                .map(|r| {
                    let nx = if sigma > 0.0 { normal.sample(&mut noise_rng) } else { 0.0 };
                    let ny = if sigma > 0.0 { normal.sample(&mut noise_rng) } else { 0.0 };
                    Action::new(r[0] + nx, r[1] + ny)
                })
                .collect()
        };

        let step_one = |(slot, a): (&mut Slot, &Action)| slot.env.step(*a);
        let outcomes: Vec<_> = if parallel {
            slots.par_iter_mut().zip(actions.par_iter()).map(step_one).collect()
        } else {
            slots.iter_mut().zip(actions.iter()).map(step_one).collect()
        };

        for (i, out) in outcomes.into_iter().enumerate() {
            let out = out?;
            let next = Arc::new(CompactObs::from_feature(&out.observation));
            let slot = &mut slots[i];
            buffer.push(Transition {
                obs: Arc::clone(&slot.obs),
                action: [actions[i].a_x, actions[i].a_y],
                reward: out.reward,
                next: Arc::clone(&next),
                // time limits are not part of the task, so keep bootstrapping
                done: matches!(out.done, Done::Reached | Done::Collided),
            });
            slot.obs = next;
            slot.feature = out.observation;
            slot.ret += out.reward;
            slot.steps += 1;
            env_steps += 1;
            if out.done.is_terminal() {
                window.push_back(out.done == Done::Reached);
                if window.len() > cfg.success_window.max(1) {
                    window.pop_front();
                }
                let rec = CurveRecord {
                    episode: slot.episode,
                    env_steps,
                    updates: agent.updates,
                    episode_return: slot.ret,
                    episode_steps: slot.steps,
                    outcome: out.done,
                    success_rate: window.iter().filter(|s| **s).count() as f64 / window.len() as f64,
                    critic_loss: last.critic_loss,
                    actor_objective: last.actor_objective,
                    noise: sigma,
                };
                sink.record(&rec)?;
                curve.push(rec);
                meta.episodes += 1;
                *slot = episodes.start()?;
            }
        }

        if env_steps >= warmup && buffer.len() >= cfg.ddpg.batch_size {
            update_credit += cfg.update_ratio * slots.len() as f64;
            while update_credit >= 1.0 {
                update_credit -= 1.0;
                let sample = buffer.sample(cfg.ddpg.batch_size, &mut replay_rng)?;
                let batch = TrainBatch::from_transitions(&sample);
                last = agent.update(&batch)?;
                if !last.critic_loss.is_finite() || last.critic_loss > cfg.divergence_threshold {
                    let q = agent
                        .critic
                        .forward(batch.obs.scans.view(), batch.obs.goals.view(), Some(batch.actions.view()))?;
                    return Err(PolicyError::Diverged {
                        update: agent.updates,
                        env_step: env_steps,
                        loss: last.critic_loss,
                        diagnostics: format!(
                            "batch reward range [{:.3}, {:.3}], Q range [{:.3e}, {:.3e}], actor objective {:.3e}",
                            batch.rewards.iter().cloned().fold(f64::INFINITY, f64::min),
                            batch.rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                            q.iter().cloned().fold(f64::INFINITY, f64::min),
                            q.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                            last.actor_objective
                        ),
                    });
                }
            }
        }

        if cfg.checkpoint_interval > 0 && env_steps >= next_checkpoint {
            next_checkpoint += cfg.checkpoint_interval;
            meta.env_steps = env_steps;
            sink.checkpoint(&Checkpoint::from_agent(&agent, meta.clone()))?;
        }
    }
    meta.env_steps = env_steps;
    Ok(TrainOutcome {
        checkpoint: Checkpoint::from_agent(&agent, meta),
        curve,
    })
}
