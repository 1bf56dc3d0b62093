//! Episode engine: map, crowd, robot, scanner and the reward, clocked at
//! scan / controller / policy rates.

pub mod kinematics;
pub mod map;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crowd::{Crowd, CrowdConfig, CrowdError, Pedestrian, ScenarioFrame};
use crate::geometry::{normalize_angle, Circle, Pose, Shape, Vec2};
use crate::lidar::{build_motion_feature, simulate_scan, GoalVector, LidarConfig, LidarError, MotionFeature, Scan, ScanHistory};
use crate::rewards::{assess, RewardMode, RewardParams, RewardParts, SafetyAssessment, SceneState, SocialAgent};
use crate::seed::{self, SimRng, Stream};

pub use kinematics::{action_to_twist, integrate, Action, HeadingController, PolarCommand, RobotState, Twist, ACTION_LIMIT};
pub use map::{corridor_exists, randomize_map, MapConfig};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no start-goal corridor after {attempts} map samples; obstacle configuration is too dense")]
    OverDense { attempts: usize },
    #[error("episode already finished ({0})")]
    EpisodeFinished(Done),
    #[error(transparent)]
    Lidar(#[from] LidarError),
    #[error(transparent)]
    Crowd(#[from] CrowdError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub scan_hz: u32,
    pub control_hz: u32,
    pub policy_hz: u32,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            scan_hz: 40,
            control_hz: 20,
            policy_hz: 10,
        }
    }
}

impl Rates {
    fn validate(&self) -> Result<(), WorldError> {
        let Rates {
            scan_hz,
            control_hz,
            policy_hz,
        } = *self;
        if scan_hz == 0 || control_hz == 0 || policy_hz == 0 {
            return Err(WorldError::Config("rates must be positive".into()));
        }
        if scan_hz % control_hz != 0 || scan_hz % policy_hz != 0 || (scan_hz / policy_hz) % (scan_hz / control_hz) != 0 {
            return Err(WorldError::Config(format!(
                "rates must nest: scan {scan_hz} Hz, control {control_hz} Hz, policy {policy_hz} Hz"
            )));
        }
        Ok(())
    }

    pub fn policy_period(&self) -> f64 {
        1.0 / self.policy_hz as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub map_seed: u64,
    pub start: Vec2,
    pub start_heading: f64,
    pub goal: Vec2,
    /// Uniform jitter applied per episode to the start heading (radians) and
    /// to the goal position (metres, each axis). Zero keeps a fixed target.
    pub start_heading_jitter: f64,
    pub goal_jitter: f64,
    pub robot_radius: f64,
    pub max_steps: usize,
    pub goal_tolerance: f64,
    pub reward_mode: RewardMode,
    pub rates: Rates,
    pub controller: HeadingController,
    pub map: MapConfig,
    pub crowd: CrowdConfig,
    pub lidar: LidarConfig,
    pub rewards: RewardParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            map_seed: 0,
            start: Vec2::new(0.0, 0.0),
            start_heading: 0.0,
            goal: Vec2::new(5.0, 0.0),
            start_heading_jitter: 0.0,
            goal_jitter: 0.0,
            robot_radius: 0.3,
            max_steps: 400,
            goal_tolerance: 0.3,
            reward_mode: RewardMode::Social,
            rates: Rates::default(),
            controller: HeadingController::default(),
            map: MapConfig::default(),
            crowd: CrowdConfig::default(),
            lidar: LidarConfig::default(),
            rewards: RewardParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        self.rates.validate()?;
        self.map.validate()?;
        self.crowd.validate()?;
        self.lidar.validate()?;
        if !(self.robot_radius > 0.0) {
            return Err(WorldError::Config("robot_radius must be positive".into()));
        }
        if self.start.distance(self.goal) <= self.goal_tolerance + self.goal_jitter * std::f64::consts::SQRT_2 {
            return Err(WorldError::Config("goal must lie outside the goal tolerance of the start".into()));
        }
        if self.max_steps == 0 {
            return Err(WorldError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Same configuration with map and crowd seeds drawn for episode `index`
    /// of a run rooted at `root`.
    pub fn for_episode(&self, root: u64, index: u64) -> EnvConfig {
        let mut c = self.clone();
        c.map_seed = seed::derive(root, Stream::Map, index);
        c.crowd.seed = seed::derive(root, Stream::Crowd, index);
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Done {
    Running,
    Reached,
    Collided,
    Timeout,
}

impl Done {
    pub fn is_terminal(&self) -> bool {
        *self != Done::Running
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Done::Running => "running",
            Done::Reached => "reached",
            Done::Collided => "collided",
            Done::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Done {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a policy may act on. Laser-based policies use `feature` only;
/// full-state policies may also read the pedestrians.
#[derive(Debug, Clone)]
pub struct Observation {
    pub feature: MotionFeature,
    pub robot: RobotState,
    pub pedestrians: Vec<Pedestrian>,
}

/// Either a raw policy action, or a twist that bypasses the heading
/// controller (used by hand-written baselines that need to spin in place).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    Action(Action),
    Twist(Twist),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: usize,
    pub time: f64,
    pub robot: RobotState,
    pub assessment: SafetyAssessment,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: MotionFeature,
    pub reward: f64,
    pub reward_parts: RewardParts,
    pub done: Done,
    pub info: StepInfo,
}

/// One running episode. Construct a fresh `Env` (or call `reset`) per episode.
#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    walls: Vec<Shape>,
    obstacles: Vec<Shape>,
    crowd: Crowd,
    robot: RobotState,
    start: Vec2,
    goal: Vec2,
    history: ScanHistory,
    target_heading: f64,
    sensor_rng: SimRng,
    tick: u64,
    steps: usize,
    done: Done,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Env, WorldError> {
        config.validate()?;
        let mut map_rng = seed::rng_for(config.map_seed, Stream::Map, 0);
        let jitter = |rng: &mut SimRng, w: f64| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 };
        let heading = normalize_angle(config.start_heading + jitter(&mut map_rng, config.start_heading_jitter));
        let goal = config.goal + Vec2::new(jitter(&mut map_rng, config.goal_jitter), jitter(&mut map_rng, config.goal_jitter));
        let start = config.start;
        let obstacles = randomize_map(&mut map_rng, &config.map, start, goal, config.robot_radius)?;
        let walls = config.map.wall_shapes();

        let frame = ScenarioFrame {
            start,
            goal,
            keep_out: config.robot_radius + 0.7,
        };
        let crowd = Crowd::new(
            config.crowd.clone(),
            Some(frame),
            seed::rng_for(config.crowd.seed, Stream::Crowd, 0),
        );
        let robot = RobotState {
            pose: Pose {
                position: start,
                heading,
            },
            twist: Twist::default(),
            radius: config.robot_radius,
        };
        let mut sensor_rng = seed::rng_for(config.map_seed, Stream::Sensor, config.crowd.seed);
        let mut env_shapes = walls.clone();
        env_shapes.extend_from_slice(&obstacles);
        env_shapes.extend(crowd.bodies());
        let first = simulate_scan(&env_shapes, &robot.pose, &config.lidar, 0, Some(&mut sensor_rng));
        let history = ScanHistory::new(first, config.lidar.history);
        Ok(Env {
            walls,
            obstacles,
            crowd,
            robot,
            start,
            goal,
            history,
            target_heading: heading,
            sensor_rng,
            tick: 0,
            steps: 0,
            done: Done::Running,
            config,
        })
    }

    /// Restarts the episode from the configured seeds.
    pub fn reset(&mut self) -> Result<MotionFeature, WorldError> {
        *self = Env::new(self.config.clone())?;
        Ok(self.feature())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn goal(&self) -> Vec2 {
        self.goal
    }

    pub fn start(&self) -> Vec2 {
        self.start
    }

    pub fn done(&self) -> Done {
        self.done
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 / self.config.rates.scan_hz as f64
    }

    pub fn pedestrians(&self) -> &[Pedestrian] {
        &self.crowd.pedestrians
    }

    /// Randomised obstacles, without the arena walls.
    pub fn obstacles(&self) -> &[Shape] {
        &self.obstacles
    }

    /// Walls plus obstacles.
    pub fn static_shapes(&self) -> Vec<Shape> {
        let mut v = self.walls.clone();
        v.extend_from_slice(&self.obstacles);
        v
    }

    pub fn latest_scan(&self) -> &Scan {
        self.history.latest()
    }

    pub fn history(&self) -> &ScanHistory {
        &self.history
    }

    pub fn goal_vector(&self) -> GoalVector {
        let p = &self.robot.pose;
        GoalVector::new(p.position.distance(self.goal), p.bearing_to(self.goal), self.start.distance(self.goal))
    }

    pub fn feature(&self) -> MotionFeature {
        build_motion_feature(self.history.scans(), self.robot.pose.heading, self.goal_vector(), &self.config.lidar)
            .expect("history length and beam count fixed by configuration")
    }

    pub fn observation(&self) -> Observation {
        Observation {
            feature: self.feature(),
            robot: self.robot,
            pedestrians: self.crowd.pedestrians.clone(),
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, WorldError> {
        self.step_command(Command::Action(action))
    }

    /// Runs one policy period: controller ticks at `control_hz`, crowd and
    /// scanner at `scan_hz`. Stops early on collision or arrival.
    pub fn step_command(&mut self, command: Command) -> Result<StepOutcome, WorldError> {
        if self.done.is_terminal() {
            return Err(WorldError::EpisodeFinished(self.done));
        }
        let rates = self.config.rates.clone();
        let ticks_per_policy = rates.scan_hz / rates.policy_hz;
        let ticks_per_control = rates.scan_hz / rates.control_hz;
        let control_dt = 1.0 / rates.control_hz as f64;
        let scan_dt = 1.0 / rates.scan_hz as f64;
        let max_turn = self.config.controller.max_turn_rate;

        let linear = match command {
            Command::Action(a) => {
                let polar = action_to_twist(a);
                self.target_heading = normalize_angle(self.robot.pose.heading + polar.v_w);
                polar.v_l
            }
            Command::Twist(t) => t.linear.clamp(0.0, ACTION_LIMIT),
        };

        let mut statics = self.static_shapes();
        let n_static = statics.len();
        let mut terminal = Done::Running;
        for k in 0..ticks_per_policy {
            if k % ticks_per_control == 0 {
                let angular = match command {
                    Command::Action(_) => self.config.controller.turn_rate(self.robot.pose.heading, self.target_heading),
                    Command::Twist(t) => t.angular.clamp(-max_turn, max_turn),
                };
                self.robot = integrate(&self.robot, Twist::new(linear, angular), control_dt);
            }
            self.crowd.step(&statics[..n_static], scan_dt);
            self.tick += 1;

            statics.truncate(n_static);
            statics.extend(self.crowd.bodies());
            let scan = simulate_scan(&statics, &self.robot.pose, &self.config.lidar, self.tick, Some(&mut self.sensor_rng));
            self.history.push(scan);

            let body = Circle {
                center: self.robot.pose.position,
                radius: self.robot.radius,
            };
            if statics.iter().any(|s| s.surface_distance(&body) <= 0.0) {
                terminal = Done::Collided;
                break;
            }
            if self.robot.pose.position.distance(self.goal) < self.config.goal_tolerance {
                terminal = Done::Reached;
                break;
            }
        }
        self.steps += 1;
        if terminal == Done::Running && self.steps >= self.config.max_steps {
            terminal = Done::Timeout;
        }

        let assessment = self.assess(self.robot.pose.position.distance(self.goal) < self.config.goal_tolerance);
        self.done = terminal;
        let reward_parts = assessment.parts;
        Ok(StepOutcome {
            observation: self.feature(),
            reward: reward_parts.total(),
            reward_parts,
            done: terminal,
            info: StepInfo {
                step: self.steps,
                time: self.time(),
                robot: self.robot,
                assessment,
            },
        })
    }

    fn assess(&self, reached: bool) -> SafetyAssessment {
        let bodies = self.crowd.bodies();
        let agents = self.crowd.social_agents();
        let statics = self.static_shapes();
        let robot = SocialAgent {
            position: self.robot.pose.position,
            heading: self.robot.pose.heading,
            radius: self.robot.radius,
            speed: self.robot.twist.linear.abs(),
        };
        assess(
            &SceneState {
                robot,
                pedestrian_bodies: &bodies,
                pedestrians: &agents,
                obstacles: &statics,
                start: self.start,
                goal: self.goal,
                reached,
            },
            self.config.reward_mode,
            &self.config.rewards,
        )
    }

    /// Places the robot directly; for tests and scripted scenarios.
    pub fn set_robot_pose(&mut self, pose: Pose) {
        self.robot.pose = pose;
        self.target_heading = pose.heading;
    }
}
