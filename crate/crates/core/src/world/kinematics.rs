//! Unicycle robot model and the action → velocity conversion.

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Pose, Vec2};

/// Per-component bound on policy actions.
pub const ACTION_LIMIT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: f64,
    pub angular: f64,
}

impl Twist {
    pub fn new(linear: f64, angular: f64) -> Self {
        Twist { linear, angular }
    }
}

/// Raw policy output; components are clamped into `[-1.5, 1.5]` on
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub a_x: f64,
    pub a_y: f64,
}

impl Action {
    pub fn new(a_x: f64, a_y: f64) -> Self {
        let clamp = |v: f64| {
            if v.is_nan() {
                0.0
            } else {
                v.clamp(-ACTION_LIMIT, ACTION_LIMIT)
            }
        };
        Action {
            a_x: clamp(a_x),
            a_y: clamp(a_y),
        }
    }
}

/// Speed plus heading offset decoded from an action. The heading offset is
/// handed to the heading controller rather than applied as a turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarCommand {
    pub v_l: f64,
    pub v_w: f64,
}

/// `v_l = |a|` capped at 1.5 m/s, `v_w = atan2(a_y, a_x)`.
pub fn action_to_twist(a: Action) -> PolarCommand {
    let a = Action::new(a.a_x, a.a_y);
    PolarCommand {
        v_l: a.a_x.hypot(a.a_y).min(ACTION_LIMIT),
        v_w: a.a_y.atan2(a.a_x),
    }
}

/// Proportional heading tracker with a turn-rate cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadingController {
    pub gain: f64,
    pub max_turn_rate: f64,
}

impl Default for HeadingController {
    fn default() -> Self {
        HeadingController {
            gain: 2.0,
            max_turn_rate: 2.0,
        }
    }
}

impl HeadingController {
    pub fn turn_rate(&self, heading: f64, target: f64) -> f64 {
        (self.gain * normalize_angle(target - heading)).clamp(-self.max_turn_rate, self.max_turn_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub twist: Twist,
    pub radius: f64,
}

/// Exact unicycle update over `dt` under a constant twist: the robot
/// follows a circular arc, or a straight line when it barely turns.
pub fn integrate(robot: &RobotState, twist: Twist, dt: f64) -> RobotState {
    let Pose { position, heading } = robot.pose;
    let (v, w) = (twist.linear, twist.angular);
    let new_heading = heading + w * dt;
    let delta = if w.abs() > 1e-6 {
        Vec2::new(
            v / w * (new_heading.sin() - heading.sin()),
            -v / w * (new_heading.cos() - heading.cos()),
        )
    } else {
        Vec2::from_angle(heading + 0.5 * w * dt) * (v * dt)
    };
    RobotState {
        pose: Pose {
            position: position + delta,
            heading: normalize_angle(new_heading),
        },
        twist,
        radius: robot.radius,
    }
}
