//! Ego-safety, social-safety and goal terms of the step reward.
//!
//! The total is always the plain sum of the three parts.

use serde::{Deserialize, Serialize};

use crate::geometry::{closest_distance, rects_intersect, Circle, OrientedRect, Shape, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Ego-safety zone radius is `robot_radius + ego_margin`.
    pub ego_margin: f64,
    pub collision_penalty: f64,
    pub ego_scale: f64,
    pub social_scale: f64,
    /// Look-ahead time used to stretch social zones.
    pub headway_time: f64,
    pub min_safe_distance: f64,
    /// Only pedestrians closer than this are checked for zone overlap.
    pub social_radius: f64,
    pub goal_bonus: f64,
    pub goal_scale: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            ego_margin: 0.4,
            collision_penalty: -10.0,
            ego_scale: 0.25,
            social_scale: 0.1,
            headway_time: 0.77,
            min_safe_distance: 0.5,
            social_radius: 5.0,
            goal_bonus: 10.0,
            goal_scale: 0.01,
        }
    }
}

/// Which terms enter the training signal. The ego stage drops the social
/// term; violations are still measured for logging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Ego,
    #[default]
    Social,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardParts {
    pub ego: f64,
    pub social: f64,
    pub goal: f64,
}

impl RewardParts {
    pub fn total(&self) -> f64 {
        self.ego + self.social + self.goal
    }
}

/// Ego term from a precomputed clearance `d_t` (surface to surface).
/// Returns `(R_e, inside_ego_zone)`.
pub fn ego_reward_from_distance(d_t: f64, robot_radius: f64, params: &RewardParams) -> (f64, bool) {
    let zone = robot_radius + params.ego_margin;
    if d_t <= 0.0 {
        (params.collision_penalty, true)
    } else if d_t < zone {
        (-params.ego_scale * (1.0 - d_t / zone), true)
    } else {
        (0.0, false)
    }
}

/// Closest clearance between the robot and every pedestrian body and
/// obstacle; `None` when the scene is empty.
pub fn clearance(robot: &Circle, pedestrians: &[Shape], obstacles: &[Shape]) -> Option<f64> {
    let a = closest_distance(robot, pedestrians).ok();
    let b = closest_distance(robot, obstacles).ok();
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

pub fn ego_reward(robot: &Circle, pedestrians: &[Shape], obstacles: &[Shape], params: &RewardParams) -> (f64, bool) {
    match clearance(robot, pedestrians, obstacles) {
        Some(d) => ego_reward_from_distance(d, robot.radius, params),
        None => (0.0, false),
    }
}

/// Rectangle anchored at the agent centre stretching along its motion
/// direction: `length = r/2 + d_min + Δt·v`, half width `r`.
pub fn social_zone(
    position: Vec2,
    heading: f64,
    radius: f64,
    speed: f64,
    headway_time: f64,
    min_safe_distance: f64,
) -> OrientedRect {
    debug_assert!(speed >= 0.0);
    let length = radius / 2.0 + min_safe_distance + headway_time * speed;
    OrientedRect::new(position, heading, radius, length).expect("social zone extents are non-negative")
}

/// Motion state of an agent as the social term sees it. `heading` is the
/// last direction of motion, kept when the agent stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocialAgent {
    pub position: Vec2,
    pub heading: f64,
    pub radius: f64,
    pub speed: f64,
}

impl SocialAgent {
    pub fn zone(&self, params: &RewardParams) -> OrientedRect {
        social_zone(
            self.position,
            self.heading,
            self.radius,
            self.speed,
            params.headway_time,
            params.min_safe_distance,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SocialOutcome {
    pub reward: f64,
    pub violations: usize,
    pub considered: usize,
}

/// Counts pedestrians near the robot whose social zone overlaps the
/// robot's own zone. The penalty is normalised by the whole crowd size.
pub fn social_reward(robot: &SocialAgent, pedestrians: &[SocialAgent], params: &RewardParams) -> SocialOutcome {
    if pedestrians.is_empty() {
        return SocialOutcome::default();
    }
    let robot_zone = robot.zone(params);
    let mut considered = 0;
    let mut violations = 0;
    for p in pedestrians {
        if p.position.distance(robot.position) > params.social_radius {
            continue;
        }
        considered += 1;
        if rects_intersect(&robot_zone, &p.zone(params)) {
            violations += 1;
        }
    }
    SocialOutcome {
        reward: -params.social_scale * violations as f64 / pedestrians.len() as f64,
        violations,
        considered,
    }
}

/// `+bonus` on arrival, otherwise `-scale · |p_t − p*| / |p_0 − p*|`.
pub fn goal_reward(position: Vec2, goal: Vec2, start: Vec2, reached: bool, params: &RewardParams) -> f64 {
    if reached {
        return params.goal_bonus;
    }
    let initial = start.distance(goal);
    debug_assert!(initial > 0.0, "start coincides with goal");
    -params.goal_scale * position.distance(goal) / initial
}

/// Everything the reward needs to know about one instant of the episode.
#[derive(Debug, Clone, Copy)]
pub struct SceneState<'a> {
    pub robot: SocialAgent,
    pub pedestrian_bodies: &'a [Shape],
    pub pedestrians: &'a [SocialAgent],
    pub obstacles: &'a [Shape],
    pub start: Vec2,
    pub goal: Vec2,
    pub reached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyAssessment {
    /// Closest clearance; `None` with nothing in the scene.
    pub d_t: Option<f64>,
    pub collided: bool,
    pub ego_violation: bool,
    pub violations: usize,
    pub considered_pedestrians: usize,
    pub parts: RewardParts,
}

impl SafetyAssessment {
    pub fn total(&self) -> f64 {
        self.parts.total()
    }
}

pub fn assess(scene: &SceneState<'_>, mode: RewardMode, params: &RewardParams) -> SafetyAssessment {
    let body = Circle {
        center: scene.robot.position,
        radius: scene.robot.radius,
    };
    let d_t = clearance(&body, scene.pedestrian_bodies, scene.obstacles);
    let (ego, ego_violation) = match d_t {
        Some(d) => ego_reward_from_distance(d, body.radius, params),
        None => (0.0, false),
    };
    let social = social_reward(&scene.robot, scene.pedestrians, params);
    let goal = goal_reward(scene.robot.position, scene.goal, scene.start, scene.reached, params);
    SafetyAssessment {
        d_t,
        collided: d_t.is_some_and(|d| d <= 0.0),
        ego_violation,
        violations: social.violations,
        considered_pedestrians: social.considered,
        parts: RewardParts {
            ego,
            social: match mode {
                RewardMode::Ego => 0.0,
                RewardMode::Social => social.reward,
            },
            goal,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> RewardParams {
        RewardParams::default()
    }

    fn agent(x: f64, y: f64, heading: f64, speed: f64) -> SocialAgent {
        SocialAgent {
            position: Vec2::new(x, y),
            heading,
            radius: 0.3,
            speed,
        }
    }

    #[test]
    fn ego_collision_and_band() {
        assert_eq!(ego_reward_from_distance(0.0, 0.3, &p()), (-10.0, true));
        assert_eq!(ego_reward_from_distance(-0.2, 0.3, &p()).0, -10.0);
        assert_eq!(ego_reward_from_distance(0.7, 0.3, &p()), (0.0, false));
        let (r, v) = ego_reward_from_distance(0.35, 0.3, &p());
        assert_close!(r, -0.125, 1e-15);
        assert!(v);
    }

    #[test]
    fn ego_reward_from_shapes() {
        let robot = Circle::new(Vec2::ZERO, 0.3).unwrap();
        let ped: Shape = Circle::new(Vec2::new(0.95, 0.0), 0.3).unwrap().into();
        let (r, v) = ego_reward(&robot, &[ped], &[], &p());
        assert_close!(r, -0.125, 1e-12);
        assert!(v);
        assert_eq!(ego_reward(&robot, &[], &[], &p()), (0.0, false));
    }

    #[test]
    fn social_zone_length() {
        let z = social_zone(Vec2::ZERO, 0.0, 0.3, 1.0, 0.77, 0.5);
        assert_close!(z.length, 1.42, 1e-12);
        assert_eq!(z.half_width, 0.3);
        let z0 = social_zone(Vec2::ZERO, 0.0, 0.3, 0.0, 0.77, 0.5);
        assert_close!(z0.length, 0.65, 1e-12);
        let z2 = social_zone(Vec2::ZERO, 0.0, 0.3, 2.0, 0.77, 0.5);
        assert_close!(z2.length - z.length, 0.77, 1e-12);
    }

    #[test]
    fn social_reward_normalises_by_scene_size() {
        let robot = agent(0.0, 0.0, 0.0, 1.0);
        assert_eq!(social_reward(&robot, &[], &p()), SocialOutcome::default());
        // two heading straight at the robot, six far away
        let mut peds = vec![agent(1.5, 0.0, std::f64::consts::PI, 1.0), agent(1.2, 0.2, std::f64::consts::PI, 1.0)];
        for i in 0..6 {
            peds.push(agent(20.0 + i as f64, 20.0, 0.0, 1.0));
        }
        let out = social_reward(&robot, &peds, &p());
        assert_eq!(out.violations, 2);
        assert_eq!(out.considered, 2);
        assert_close!(out.reward, -0.025, 1e-15);
    }

    #[test]
    fn far_pedestrians_ignored() {
        let robot = agent(0.0, 0.0, 0.0, 0.0);
        let peds = [agent(7.5, 0.0, 0.0, 1.0), agent(0.0, -8.0, 1.0, 1.5)];
        let out = social_reward(&robot, &peds, &p());
        assert_eq!((out.violations, out.considered, out.reward), (0, 0, 0.0));
    }

    #[test]
    fn goal_reward_cases() {
        let start = Vec2::ZERO;
        let goal = Vec2::new(4.0, 0.0);
        assert_eq!(goal_reward(start, goal, start, true, &p()), 10.0);
        assert_close!(goal_reward(start, goal, start, false, &p()), -0.01, 1e-15);
        assert_close!(goal_reward(Vec2::new(2.0, 0.0), goal, start, false, &p()), -0.005, 1e-15);
    }

    #[test]
    fn ego_mode_zeroes_social_part() {
        let robot = agent(0.0, 0.0, 0.0, 1.0);
        let peds = [agent(1.0, 0.0, std::f64::consts::PI, 1.0)];
        let bodies: Vec<Shape> = peds
            .iter()
            .map(|a| Circle::new(a.position, a.radius).unwrap().into())
            .collect();
        let scene = SceneState {
            robot,
            pedestrian_bodies: &bodies,
            pedestrians: &peds,
            obstacles: &[],
            start: Vec2::new(-1.0, 0.0),
            goal: Vec2::new(4.0, 0.0),
            reached: false,
        };
        let ego = assess(&scene, RewardMode::Ego, &p());
        let soc = assess(&scene, RewardMode::Social, &p());
        assert_eq!(ego.violations, 1);
        assert_eq!(ego.parts.social, 0.0);
        assert_close!(soc.parts.social, -0.1, 1e-15);
        assert_eq!(soc.total(), soc.parts.ego + soc.parts.social + soc.parts.goal);
    }
}
