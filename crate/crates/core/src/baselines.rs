//! Hand-written baselines and the hook for externally supplied planners.

use serde::{Deserialize, Serialize};

use crate::crowd::Pedestrian;
use crate::geometry::{normalize_angle, Vec2};
use crate::lidar::LidarConfig;
use crate::policy::{Policy, PolicyError};
use crate::world::{Command, Observation, RobotState, Twist, ACTION_LIMIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreedyParams {
    /// Box-window width in beams for a 180-beam scan; scaled with the beam
    /// count and forced odd.
    pub window_at_180: usize,
    /// Goal-bias weight in metres per radian.
    pub lambda: f64,
    pub k_p: f64,
    /// Forward speed per metre of clearance along the chosen window.
    pub speed_gain: f64,
    pub max_speed: f64,
    pub max_turn_rate: f64,
    pub stop_clearance: f64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        GreedyParams {
            window_at_180: 21,
            lambda: 2.0,
            k_p: 1.5,
            speed_gain: 0.5,
            max_speed: ACTION_LIMIT,
            max_turn_rate: 2.0,
            stop_clearance: 0.5,
        }
    }
}

impl GreedyParams {
    pub fn window(&self, beams: usize) -> usize {
        let w = ((self.window_at_180 as f64 * beams as f64 / 180.0).round() as usize).max(1);
        (w | 1).min(if beams % 2 == 1 { beams } else { beams.saturating_sub(1).max(1) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyDecision {
    pub index: usize,
    /// Box-window mean range per beam.
    pub clearance: Vec<f64>,
    pub scores: Vec<f64>,
    pub twist: Twist,
    pub stopped: bool,
}

/// Mean of `ranges` over a centred box window, truncated at the fan edges.
pub fn window_mean(ranges: &[f64], window: usize) -> Vec<f64> {
    let n = ranges.len();
    let half = window / 2;
    let mut prefix = vec![0.0; n + 1];
    for (i, r) in ranges.iter().enumerate() {
        prefix[i + 1] = prefix[i] + r;
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Scores every beam by its window clearance (rescaled so the clearest
/// window scores `max_range`) minus `λ·|beam angle − goal bearing|`, then
/// steers toward the best beam. Ties go to the beam nearest the goal
/// bearing, then the lowest index.
pub fn greedy_plan(
    ranges: &[f64],
    lidar: &LidarConfig,
    goal_bearing: f64,
    _goal_distance: f64,
    params: &GreedyParams,
) -> GreedyDecision {
    let n = ranges.len();
    assert!(n > 1, "greedy planner needs at least two beams");
    let clearance = window_mean(ranges, params.window(n));
    let peak = clearance.iter().cloned().fold(0.0, f64::max);
    let scale = if peak > 0.0 { lidar.max_range / peak } else { 0.0 };
    let bearing = normalize_angle(goal_bearing);
    let offset = |i: usize| -lidar.fov() / 2.0 + i as f64 * lidar.fov() / (n - 1) as f64;
    let scores: Vec<f64> = (0..n)
        .map(|i| clearance[i] * scale - params.lambda * (offset(i) - bearing).abs())
        .collect();
    let mut index = 0;
    for i in 1..n {
        let better = scores[i] > scores[index]
            || (scores[i] == scores[index] && (offset(i) - bearing).abs() < (offset(index) - bearing).abs());
        if better {
            index = i;
        }
    }
    let stopped = clearance.iter().all(|c| *c < params.stop_clearance);
    let turn = (params.k_p * offset(index)).clamp(-params.max_turn_rate, params.max_turn_rate);
    let twist = if stopped {
        let dir = if offset(index) >= 0.0 { 1.0 } else { -1.0 };
        Twist::new(0.0, dir * params.max_turn_rate)
    } else {
        let half = params.window(n) / 2;
        let window_min = ranges[index.saturating_sub(half)..(index + half + 1).min(n)]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        Twist::new((params.speed_gain * window_min).clamp(0.0, params.max_speed), turn)
    };
    GreedyDecision {
        index,
        clearance,
        scores,
        twist,
        stopped,
    }
}

/// The greedy planner behind the [`Policy`] interface; reads only the
/// newest scan and the goal vector.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub params: GreedyParams,
    pub lidar: LidarConfig,
}

impl Policy for GreedyPolicy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn act(&self, obs: &Observation) -> Result<Command, PolicyError> {
        let f = &obs.feature;
        if f.beams != self.lidar.beams {
            return Err(PolicyError::ShapeMismatch {
                what: "scan",
                expected: format!("{} beams", self.lidar.beams),
                got: format!("{} beams", f.beams),
            });
        }
        let d = greedy_plan(f.latest(), &self.lidar, f.goal.bearing, f.goal.distance, &self.params);
        Ok(Command::Twist(d.twist))
    }
}

/// Planner that consumes full simulator state (robot, goal, pedestrians)
/// instead of scans.
pub trait ExternalPolicy: Send + Sync {
    fn name(&self) -> &str;
    fn plan(&self, robot: &RobotState, goal: Vec2, pedestrians: &[Pedestrian]) -> Result<Twist, PolicyError>;
}

/// Adapts an [`ExternalPolicy`] to the [`Policy`] interface.
pub struct External<P: ExternalPolicy>(pub P);

impl<P: ExternalPolicy> Policy for External<P> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn act(&self, obs: &Observation) -> Result<Command, PolicyError> {
        let pose = obs.robot.pose;
        let g = obs.feature.goal;
        let goal = pose.position + Vec2::from_angle(pose.heading + g.bearing) * g.distance;
        Ok(Command::Twist(self.0.plan(&obs.robot, goal, &obs.pedestrians)?))
    }
}

/// Slot for a CADRL value network. No model ships with this crate, so
/// planning always fails with [`PolicyError::Unavailable`].
#[derive(Debug, Clone, Default)]
pub struct Cadrl;

impl ExternalPolicy for Cadrl {
    fn name(&self) -> &str {
        "cadrl"
    }

    fn plan(&self, _robot: &RobotState, _goal: Vec2, _pedestrians: &[Pedestrian]) -> Result<Twist, PolicyError> {
        Err(PolicyError::Unavailable(
            "no CADRL model is bundled; implement ExternalPolicy around third-party weights".into(),
        ))
    }
}
