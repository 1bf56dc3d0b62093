//! Randomised static maps: arena walls plus circles and rectangles, with a
//! guaranteed start→goal corridor.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Circle, OrientedRect, Segment, Shape, Vec2};
use crate::seed::SimRng;

use super::WorldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// `[x_min, y_min, x_max, y_max]` of the walled arena.
    pub arena: [f64; 4],
    pub walls: bool,
    /// Inclusive range for the number of obstacles.
    pub obstacle_count_range: [usize; 2],
    /// Circle radius / rectangle half-extent range in metres.
    pub obstacle_size_range: [f64; 2],
    /// `[x_min, y_min, x_max, y_max]` obstacle centres are drawn from.
    pub obstacle_region: [f64; 4],
    pub rect_probability: f64,
    /// Obstacles keep out of discs of this radius around start and goal.
    pub start_goal_clearance: f64,
    pub grid_resolution: f64,
    pub max_attempts: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            arena: [-3.0, -5.0, 8.0, 5.0],
            walls: true,
            obstacle_count_range: [3, 6],
            obstacle_size_range: [0.2, 0.5],
            obstacle_region: [0.5, -2.5, 4.5, 2.5],
            rect_probability: 0.5,
            start_goal_clearance: 0.8,
            grid_resolution: 0.1,
            max_attempts: 100,
        }
    }
}

impl MapConfig {
    pub fn empty() -> Self {
        MapConfig {
            obstacle_count_range: [0, 0],
            ..MapConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let [x0, y0, x1, y1] = self.arena;
        if !(x1 > x0 && y1 > y0) {
            return Err(WorldError::Config("arena must have positive extent".into()));
        }
        let [lo, hi] = self.obstacle_count_range;
        if lo > hi {
            return Err(WorldError::Config(format!("obstacle_count_range [{lo}, {hi}] is empty")));
        }
        let [slo, shi] = self.obstacle_size_range;
        if !(slo > 0.0 && shi >= slo) {
            return Err(WorldError::Config(format!("obstacle_size_range [{slo}, {shi}] invalid")));
        }
        let [rx0, ry0, rx1, ry1] = self.obstacle_region;
        if !(rx1 >= rx0 && ry1 >= ry0) {
            return Err(WorldError::Config("obstacle_region is empty".into()));
        }
        if !(self.grid_resolution > 0.0) || self.max_attempts == 0 {
            return Err(WorldError::Config("grid_resolution and max_attempts must be positive".into()));
        }
        Ok(())
    }

    pub fn wall_shapes(&self) -> Vec<Shape> {
        if !self.walls {
            return Vec::new();
        }
        let [x0, y0, x1, y1] = self.arena;
        let c = [Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)];
        (0..4)
            .map(|i| Segment::new(c[i], c[(i + 1) % 4]).expect("arena corners are distinct").into())
            .collect()
    }
}

fn sample_obstacle(rng: &mut SimRng, cfg: &MapConfig) -> Shape {
    let [rx0, ry0, rx1, ry1] = cfg.obstacle_region;
    let center = Vec2::new(rng.random_range(rx0..=rx1), rng.random_range(ry0..=ry1));
    let [slo, shi] = cfg.obstacle_size_range;
    if rng.random_bool(cfg.rect_probability) {
        let (hl, hw) = (rng.random_range(slo..=shi), rng.random_range(slo..=shi));
        let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        OrientedRect::centered(center, heading, hl, hw).expect("sizes are positive").into()
    } else {
        Circle::new(center, rng.random_range(slo..=shi)).expect("sizes are positive").into()
    }
}

/// Samples obstacles for `seed`, rejecting any that touch the start or goal
/// discs, and retries whole maps until the corridor check passes.
pub fn randomize_map(
    rng: &mut SimRng,
    cfg: &MapConfig,
    start: Vec2,
    goal: Vec2,
    robot_radius: f64,
) -> Result<Vec<Shape>, WorldError> {
    cfg.validate()?;
    let keep_out = [
        Circle::new(start, cfg.start_goal_clearance).map_err(|e| WorldError::Config(e.to_string()))?,
        Circle::new(goal, cfg.start_goal_clearance).map_err(|e| WorldError::Config(e.to_string()))?,
    ];
    let walls = cfg.wall_shapes();
    for _ in 0..cfg.max_attempts {
        let [lo, hi] = cfg.obstacle_count_range;
        let count = rng.random_range(lo..=hi);
        let mut obstacles = Vec::with_capacity(count);
        let mut tries = 0;
        while obstacles.len() < count && tries < 50 * count.max(1) {
            tries += 1;
            let o = sample_obstacle(rng, cfg);
            if keep_out.iter().all(|k| o.surface_distance(k) > 0.0) {
                obstacles.push(o);
            }
        }
        if obstacles.len() < count {
            continue;
        }
        let mut all = walls.clone();
        all.extend_from_slice(&obstacles);
        if corridor_exists(&all, cfg, start, goal, robot_radius) {
            return Ok(obstacles);
        }
    }
    Err(WorldError::OverDense {
        attempts: cfg.max_attempts,
    })
}

/// 4-connected BFS over an occupancy grid whose cells are blocked when a
/// robot disc centred there would touch any shape.
pub fn corridor_exists(shapes: &[Shape], cfg: &MapConfig, start: Vec2, goal: Vec2, robot_radius: f64) -> bool {
    let [x0, y0, x1, y1] = cfg.arena;
    let res = cfg.grid_resolution;
    let nx = ((x1 - x0) / res).ceil() as usize;
    let ny = ((y1 - y0) / res).ceil() as usize;
    let cell_of = |p: Vec2| -> Option<(usize, usize)> {
        let ix = ((p.x - x0) / res).floor();
        let iy = ((p.y - y0) / res).floor();
        (ix >= 0.0 && iy >= 0.0 && (ix as usize) < nx && (iy as usize) < ny).then(|| (ix as usize, iy as usize))
    };
    let free = |ix: usize, iy: usize| -> bool {
        let c = Vec2::new(x0 + (ix as f64 + 0.5) * res, y0 + (iy as f64 + 0.5) * res);
        let body = Circle {
            center: c,
            radius: robot_radius,
        };
        shapes.iter().all(|s| s.surface_distance(&body) > 0.0)
    };
    let (Some(s), Some(g)) = (cell_of(start), cell_of(goal)) else {
        return false;
    };
    let mut state = vec![0u8; nx * ny]; // 0 unknown, 1 free+seen, 2 blocked
    if !free(s.0, s.1) {
        return false;
    }
    state[s.1 * nx + s.0] = 1;
    let mut queue = VecDeque::from([s]);
    while let Some((ix, iy)) = queue.pop_front() {
        if (ix, iy) == g {
            return true;
        }
        let nbrs = [
            (ix.wrapping_sub(1), iy),
            (ix + 1, iy),
            (ix, iy.wrapping_sub(1)),
            (ix, iy + 1),
        ];
        for (jx, jy) in nbrs {
            if jx >= nx || jy >= ny {
                continue;
            }
            let k = jy * nx + jx;
            if state[k] != 0 {
                continue;
            }
            if free(jx, jy) {
                state[k] = 1;
                queue.push_back((jx, jy));
            } else {
                state[k] = 2;
            }
        }
    }
    false
}
