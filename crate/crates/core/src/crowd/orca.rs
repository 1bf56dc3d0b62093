//! Optimal reciprocal collision avoidance for disc agents.
//!
//! Each neighbour contributes one half-plane of permitted velocities; the new
//! velocity is the permitted one closest to the preferred velocity, found
//! with an incremental 2D linear program. When the half-planes admit no
//! solution a 3D program minimises the largest violation instead, keeping
//! obstacle constraints hard.

use serde::{Deserialize, Serialize};

use crate::geometry::{Shape, Vec2};

const LP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrcaParams {
    pub time_horizon: f64,
    pub obstacle_time_horizon: f64,
    pub neighbor_distance: f64,
    pub max_neighbors: usize,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams {
            time_horizon: 2.0,
            obstacle_time_horizon: 1.0,
            neighbor_distance: 10.0,
            max_neighbors: 10,
        }
    }
}

/// Directed line; permitted velocities lie to its left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Vec2,
    pub direction: Vec2,
}

/// Kinematic state of a disc agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// Half-plane induced by a neighbour. `share` is this agent's portion of
/// the avoidance effort: 0.5 for reciprocal agents, 1 for static ones.
pub fn neighbor_line(agent: &Disc, other: &Disc, time_horizon: f64, dt: f64, share: f64) -> Line {
    let rel_pos = other.position - agent.position;
    let rel_vel = agent.velocity - other.velocity;
    let dist_sq = rel_pos.norm_squared();
    let combined = agent.radius + other.radius;
    let combined_sq = combined * combined;

    let (direction, u);
    if dist_sq > combined_sq {
        let inv_tau = 1.0 / time_horizon;
        // vector from the cutoff circle centre to the relative velocity
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.norm_squared();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq {
            // project on the cutoff circle
            let w_len = w_len_sq.sqrt();
            let unit_w = w / w_len;
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (combined * inv_tau - w_len);
        } else {
            // project on a leg of the cone
            let leg = (dist_sq - combined_sq).sqrt();
            direction = if rel_pos.cross(w) > 0.0 {
                Vec2::new(rel_pos.x * leg - rel_pos.y * combined, rel_pos.x * combined + rel_pos.y * leg) / dist_sq
            } else {
                -Vec2::new(rel_pos.x * leg + rel_pos.y * combined, -rel_pos.x * combined + rel_pos.y * leg) / dist_sq
            };
            u = direction * rel_vel.dot(direction) - rel_vel;
        }
    } else {
        // already overlapping: resolve within one time step
        let inv_dt = 1.0 / dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.norm();
        let unit_w = if w_len > 0.0 { w / w_len } else { -rel_pos.normalized_or_zero() };
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (combined * inv_dt - w_len);
    }
    Line {
        point: agent.velocity + u * share,
        direction,
    }
}

/// Half-plane `v · normal <= bound`.
pub fn obstacle_line(normal: Vec2, bound: f64) -> Line {
    Line {
        point: normal * bound,
        direction: normal.perp(),
    }
}

fn lp1(lines: &[Line], line_no: usize, radius: f64, opt: Vec2, direction_opt: bool) -> Option<Vec2> {
    let line = lines[line_no];
    let dot = line.point.dot(line.direction);
    let disc = dot * dot + radius * radius - line.point.norm_squared();
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for other in &lines[..line_no] {
        let denom = line.direction.cross(other.direction);
        let numer = other.direction.cross(line.point - other.point);
        if denom.abs() <= LP_EPS {
            if numer < 0.0 {
                return None;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt - line.point).clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

/// Returns the solution and the index of the first line that could not be
/// satisfied (`lines.len()` on success).
fn lp2(lines: &[Line], radius: f64, opt: Vec2, direction_opt: bool) -> (Vec2, usize) {
    let mut result = if direction_opt {
        opt * radius
    } else if opt.norm_squared() > radius * radius {
        opt.normalized_or_zero() * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if lines[i].direction.cross(lines[i].point - result) > 0.0 {
            match lp1(lines, i, radius, opt, direction_opt) {
                Some(r) => result = r,
                None => return (result, i),
            }
        }
    }
    (result, lines.len())
}

fn lp3(lines: &[Line], obstacle_lines: usize, begin: usize, radius: f64, mut result: Vec2) -> Vec2 {
    let mut distance = 0.0;
    for i in begin..lines.len() {
        if lines[i].direction.cross(lines[i].point - result) <= distance {
            continue;
        }
        let mut projected: Vec<Line> = lines[..obstacle_lines].to_vec();
        for j in obstacle_lines..i {
            let det = lines[i].direction.cross(lines[j].direction);
            let point = if det.abs() <= LP_EPS {
                if lines[i].direction.dot(lines[j].direction) > 0.0 {
                    continue;
                }
                (lines[i].point + lines[j].point) * 0.5
            } else {
                lines[i].point
                    + lines[i].direction * (lines[j].direction.cross(lines[i].point - lines[j].point) / det)
            };
            projected.push(Line {
                point,
                direction: (lines[j].direction - lines[i].direction).normalized_or_zero(),
            });
        }
        let (candidate, fail) = lp2(&projected, radius, lines[i].direction.perp(), true);
        if fail >= projected.len() {
            result = candidate;
        }
        distance = lines[i].direction.cross(lines[i].point - result);
    }
    result
}

/// Velocity inside the disc of radius `max_speed` closest to `preferred`
/// that satisfies every line; obstacle lines come first in `lines`.
pub fn solve(lines: &[Line], obstacle_lines: usize, max_speed: f64, preferred: Vec2) -> Vec2 {
    let (result, fail) = lp2(lines, max_speed, preferred, false);
    if fail < lines.len() {
        lp3(lines, obstacle_lines, fail, max_speed, result)
    } else {
        result
    }
}

/// ORCA velocity for `agent` given its neighbours and static obstacles.
///
/// Each obstacle contributes the tangent half-plane at its closest point:
/// the approach speed along the contact normal is capped so the gap closes
/// no sooner than the obstacle time horizon. For convex obstacles this plane
/// separates the agent from the whole shape.
pub fn orca_velocity(
    agent: &Disc,
    preferred: Vec2,
    max_speed: f64,
    neighbors: &[Disc],
    obstacles: &[Shape],
    params: &OrcaParams,
    dt: f64,
) -> Vec2 {
    assert!(dt > 0.0, "time step must be positive");
    let obstacle_reach = params.obstacle_time_horizon * max_speed + agent.radius;
    let mut lines: Vec<Line> = obstacles
        .iter()
        .filter_map(|shape| {
            let c = shape.closest_point(agent.position);
            let d = c.distance(agent.position);
            if d == 0.0 || d > obstacle_reach {
                return None;
            }
            let normal = (c - agent.position) / d;
            let gap = d - agent.radius;
            let bound = if gap > 0.0 { gap / params.obstacle_time_horizon } else { gap / dt };
            Some(obstacle_line(normal, bound))
        })
        .collect();
    let obstacle_lines = lines.len();
    lines.extend(
        neighbors
            .iter()
            .map(|n| neighbor_line(agent, n, params.time_horizon, dt, 0.5)),
    );
    let v = solve(&lines, obstacle_lines, max_speed, preferred);
    // LP round-off can leave the result a hair outside the speed disc
    let speed = v.norm();
    if speed > max_speed {
        v * (max_speed / speed)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(x: f64, y: f64, vx: f64, vy: f64) -> Disc {
        Disc {
            position: Vec2::new(x, y),
            velocity: Vec2::new(vx, vy),
            radius: 0.3,
        }
    }

    #[test]
    fn unconstrained_returns_preferred() {
        let a = disc(0.0, 0.0, 0.0, 0.0);
        let v = orca_velocity(&a, Vec2::new(1.0, 0.5), 1.5, &[], &[], &OrcaParams::default(), 0.025);
        assert_eq!(v, Vec2::new(1.0, 0.5));
    }

    #[test]
    fn preferred_is_clipped_to_speed_disc() {
        let a = disc(0.0, 0.0, 0.0, 0.0);
        let v = orca_velocity(&a, Vec2::new(3.0, 4.0), 1.0, &[], &[], &OrcaParams::default(), 0.025);
        assert_close!(v.norm(), 1.0, 1e-12);
        assert_close!(v.x, 0.6, 1e-12);
    }

    #[test]
    fn line_permits_current_velocity_when_far_apart() {
        let a = disc(0.0, 0.0, 1.0, 0.0);
        let b = disc(0.0, 10.0, 1.0, 0.0);
        let l = neighbor_line(&a, &b, 2.0, 0.025, 0.5);
        assert!(l.direction.cross(l.point - a.velocity) <= 1e-12);
    }

    #[test]
    fn overlapping_agents_push_apart() {
        let a = disc(0.0, 0.0, 0.0, 0.0);
        let b = disc(0.4, 0.0, 0.0, 0.0);
        let v = orca_velocity(&a, Vec2::ZERO, 1.5, &[b], &[], &OrcaParams::default(), 0.025);
        assert!(v.x < 0.0, "expected retreat, got {v:?}");
    }

    #[test]
    fn obstacle_blocks_direct_path() {
        use crate::geometry::Segment;
        let a = disc(0.0, 0.0, 1.0, 0.0);
        let wall: Shape = Segment::new(Vec2::new(0.5, -2.0), Vec2::new(0.5, 2.0)).unwrap().into();
        let v = orca_velocity(&a, Vec2::new(1.0, 0.0), 1.0, &[], &[wall], &OrcaParams::default(), 0.025);
        // approach speed capped at gap / horizon = 0.2 m/s
        assert_close!(v.x, 0.2, 1e-9);
        assert_close!(v.y, 0.0, 1e-9);
    }
}
