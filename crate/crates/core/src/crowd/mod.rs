//! Pedestrian crowd driven by ORCA, with randomised speeds, sizes, shapes,
//! stop-and-go pauses and walk-ins. Pedestrians never see the robot.

pub mod orca;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Circle, OrientedRect, Shape, Vec2};
use crate::rewards::SocialAgent;
use crate::seed::SimRng;
pub use orca::{orca_velocity, Disc, OrcaParams};

/// Below this speed a pedestrian keeps its previous heading.
const STATIONARY_SPEED: f64 = 0.05;
const PLACEMENT_ATTEMPTS: usize = 200;
const PLACEMENT_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyShape {
    Circle,
    /// Rectangle inscribed in the bounding circle, long side along the
    /// heading.
    Rect { half_length: f64, half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Behavior {
    Walking,
    Stopped { remaining_steps: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub pref_speed: f64,
    /// Bounding-circle radius used by ORCA and the social zone.
    pub radius: f64,
    pub goal: Vec2,
    pub shape: BodyShape,
    /// Last direction of motion.
    pub heading: f64,
    pub behavior: Behavior,
}

impl Pedestrian {
    /// Body used for rendering and collision checks.
    pub fn body(&self) -> Shape {
        match self.shape {
            BodyShape::Circle => Shape::Circle(Circle {
                center: self.position,
                radius: self.radius,
            }),
            BodyShape::Rect { half_length, half_width } => Shape::Rect(
                OrientedRect::centered(self.position, self.heading, half_length, half_width)
                    .expect("pedestrian rect extents are valid"),
            ),
        }
    }

    pub fn disc(&self) -> Disc {
        Disc {
            position: self.position,
            velocity: self.velocity,
            radius: self.radius,
        }
    }

    pub fn social_agent(&self) -> SocialAgent {
        SocialAgent {
            position: self.position,
            heading: self.heading,
            radius: self.radius,
            speed: self.velocity.norm(),
        }
    }

    /// Straight line to the goal at `pref_speed`, slowing to land exactly on
    /// it within one step.
    pub fn preferred_velocity(&self, dt: f64) -> Vec2 {
        if let Behavior::Stopped { .. } = self.behavior {
            return Vec2::ZERO;
        }
        let to_goal = self.goal - self.position;
        let dist = to_goal.norm();
        if dist == 0.0 {
            Vec2::ZERO
        } else if dist < self.pref_speed * dt {
            to_goal / dt
        } else {
            to_goal * (self.pref_speed / dist)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Crossing,
    Towards,
    Ahead,
    Random,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Crossing,
        ScenarioKind::Towards,
        ScenarioKind::Ahead,
        ScenarioKind::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Crossing => "crossing",
            ScenarioKind::Towards => "towards",
            ScenarioKind::Ahead => "ahead",
            ScenarioKind::Random => "random",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scenario '{s}' (expected crossing, towards, ahead or random)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrowdConfig {
    pub count: usize,
    pub area_center: Vec2,
    /// Width and height of the square crowd area, aligned with the robot's
    /// start→goal axis.
    pub area_size: [f64; 2],
    pub walk_in_probability: f64,
    pub stop_go_probability: f64,
    pub mean_stop_duration: f64,
    pub speed_range: [f64; 2],
    pub radius_range: [f64; 2],
    /// Chance that a pedestrian is rendered as a rectangle.
    pub rect_probability: f64,
    pub goal_tolerance: f64,
    /// Walk-ins stop once the crowd reaches this size.
    pub max_pedestrians: usize,
    pub scenario: Option<ScenarioKind>,
    pub seed: u64,
    pub orca: OrcaParams,
}

impl Default for CrowdConfig {
    fn default() -> Self {
        CrowdConfig {
            count: 0,
            area_center: Vec2::new(2.5, 0.0),
            area_size: [5.0, 5.0],
            walk_in_probability: 0.0,
            stop_go_probability: 0.002,
            mean_stop_duration: 1.0,
            speed_range: [0.5, 1.5],
            radius_range: [0.15, 0.4],
            rect_probability: 0.3,
            goal_tolerance: 0.2,
            max_pedestrians: 16,
            scenario: None,
            seed: 0,
            orca: OrcaParams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CrowdError {
    #[error("invalid crowd range {name}: [{lo}, {hi}]")]
    BadRange { name: &'static str, lo: f64, hi: f64 },
    #[error("probability {name} = {value} outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("crowd area must have positive size")]
    BadArea,
}

impl CrowdConfig {
    pub fn validate(&self) -> Result<(), CrowdError> {
        for (name, [lo, hi]) in [("speed_range", self.speed_range), ("radius_range", self.radius_range)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(CrowdError::BadRange { name, lo, hi });
            }
        }
        for (name, value) in [
            ("walk_in_probability", self.walk_in_probability),
            ("stop_go_probability", self.stop_go_probability),
            ("rect_probability", self.rect_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CrowdError::BadProbability { name, value });
            }
        }
        if !(self.area_size[0] > 0.0 && self.area_size[1] > 0.0) {
            return Err(CrowdError::BadArea);
        }
        Ok(())
    }
}

/// Robot start/goal geometry that scenarios are laid out against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioFrame {
    pub start: Vec2,
    pub goal: Vec2,
    /// Pedestrians are never placed closer than this to start or goal.
    pub keep_out: f64,
}

impl ScenarioFrame {
    fn axis(&self) -> Vec2 {
        (self.goal - self.start).normalized_or_zero()
    }
}

/// Crowd-area coordinates: `s` along the robot's start→goal axis, `t`
/// across it, both centred on the area.
struct AreaFrame {
    center: Vec2,
    along: Vec2,
    across: Vec2,
    half: [f64; 2],
}

impl AreaFrame {
    fn new(cfg: &CrowdConfig, axis: Vec2) -> Self {
        let along = if axis == Vec2::ZERO { Vec2::new(1.0, 0.0) } else { axis };
        AreaFrame {
            center: cfg.area_center,
            along,
            across: along.perp(),
            half: [cfg.area_size[0] / 2.0, cfg.area_size[1] / 2.0],
        }
    }

    fn point(&self, s: f64, t: f64) -> Vec2 {
        self.center + self.along * s + self.across * t
    }

    fn random_point(&self, rng: &mut SimRng) -> Vec2 {
        let s = rng.random_range(-self.half[0]..=self.half[0]);
        let t = rng.random_range(-self.half[1]..=self.half[1]);
        self.point(s, t)
    }
}

fn sample_range(rng: &mut SimRng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn sample_body(rng: &mut SimRng, cfg: &CrowdConfig, radius: f64) -> BodyShape {
    if rng.random_bool(cfg.rect_probability) {
        let phi: f64 = rng.random_range(0.3..0.7);
        BodyShape::Rect {
            half_length: radius * phi.cos(),
            half_width: radius * phi.sin(),
        }
    } else {
        BodyShape::Circle
    }
}

fn clear_of(peds: &[Pedestrian], p: Vec2, radius: f64) -> bool {
    peds.iter()
        .all(|o| o.position.distance(p) >= o.radius + radius + PLACEMENT_GAP)
}

fn outside_keep_out(frame: Option<&ScenarioFrame>, p: Vec2, radius: f64) -> bool {
    frame.is_none_or(|f| p.distance(f.start) >= f.keep_out + radius && p.distance(f.goal) >= f.keep_out + radius)
}

struct Draft {
    position: Vec2,
    goal: Vec2,
}

/// Rejection-samples a non-overlapping pedestrian from `propose`; `None`
/// when no free spot turns up.
fn place<F>(
    rng: &mut SimRng,
    cfg: &CrowdConfig,
    existing: &[Pedestrian],
    frame: Option<&ScenarioFrame>,
    id: u64,
    speed_range: [f64; 2],
    mut propose: F,
) -> Option<Pedestrian>
where
    F: FnMut(&mut SimRng) -> Draft,
{
    let radius = sample_range(rng, cfg.radius_range);
    let pref_speed = sample_range(rng, speed_range);
    let shape = sample_body(rng, cfg, radius);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let d = propose(rng);
        if !clear_of(existing, d.position, radius) || !outside_keep_out(frame, d.position, radius) {
            continue;
        }
        let dir = (d.goal - d.position).normalized_or_zero();
        let heading = if dir == Vec2::ZERO { 0.0 } else { dir.angle() };
        return Some(Pedestrian {
            id,
            position: d.position,
            velocity: dir * pref_speed,
            pref_speed,
            radius,
            goal: d.goal,
            shape,
            heading,
            behavior: Behavior::Walking,
        });
    }
    None
}

/// Lays out `count` pedestrians for one of the four crowd behaviours inside
/// the configured area.
pub fn spawn_scenario(
    kind: ScenarioKind,
    count: usize,
    frame: &ScenarioFrame,
    cfg: &CrowdConfig,
    rng: &mut SimRng,
) -> Vec<Pedestrian> {
    let area = AreaFrame::new(cfg, frame.axis());
    let [hs, ht] = area.half;
    let mut peds: Vec<Pedestrian> = Vec::with_capacity(count);
    for id in 0..count as u64 {
        let speeds = match kind {
            // slower than the robot so it has something to overtake
            ScenarioKind::Ahead => [cfg.speed_range[0], 0.5 * (cfg.speed_range[0] + cfg.speed_range[1])],
            _ => cfg.speed_range,
        };
        let ped = place(rng, cfg, &peds, Some(frame), id, speeds, |rng| match kind {
            ScenarioKind::Crossing => {
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let s = rng.random_range(-hs..=hs);
                let t = -side * rng.random_range(0.0..=ht);
                Draft {
                    position: area.point(s, t),
                    goal: area.point(s, side * ht),
                }
            }
            ScenarioKind::Towards => {
                let s = rng.random_range(0.0..=hs);
                let t = rng.random_range(-ht..=ht);
                Draft {
                    position: area.point(s, t),
                    goal: area.point(-hs, t),
                }
            }
            ScenarioKind::Ahead => {
                let s = rng.random_range(-hs..=0.5 * hs);
                let t = rng.random_range(-0.6 * ht..=0.6 * ht);
                Draft {
                    position: area.point(s, t),
                    goal: area.point(hs, t),
                }
            }
            ScenarioKind::Random => Draft {
                position: area.random_point(rng),
                goal: area.random_point(rng),
            },
        });
        if let Some(p) = ped {
            peds.push(p);
        }
    }
    peds
}

/// Uniformly scattered crowd with random goals, used when no named scenario
/// is configured.
pub fn spawn_random(count: usize, frame: Option<&ScenarioFrame>, cfg: &CrowdConfig, rng: &mut SimRng) -> Vec<Pedestrian> {
    let area = AreaFrame::new(cfg, frame.map(|f| f.axis()).unwrap_or(Vec2::new(1.0, 0.0)));
    let mut peds = Vec::with_capacity(count);
    for id in 0..count as u64 {
        if let Some(p) = place(rng, cfg, &peds, frame, id, cfg.speed_range, |rng| Draft {
            position: area.random_point(rng),
            goal: area.random_point(rng),
        }) {
            peds.push(p);
        }
    }
    peds
}

/// Neighbours of `self_idx` within the ORCA neighbour distance, nearest
/// first.
fn neighbors_of(peds: &[Pedestrian], self_idx: usize, params: &OrcaParams) -> Vec<Disc> {
    let me = &peds[self_idx];
    let mut near: Vec<(f64, u64, Disc)> = peds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != self_idx)
        .map(|(_, o)| (o.position.distance(me.position), o.id, o.disc()))
        .filter(|(d, _, _)| *d <= params.neighbor_distance)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    near.truncate(params.max_neighbors);
    near.into_iter().map(|(_, _, d)| d).collect()
}

/// Owns the pedestrians of one episode and their random stream.
#[derive(Debug, Clone)]
pub struct Crowd {
    pub pedestrians: Vec<Pedestrian>,
    pub config: CrowdConfig,
    frame: Option<ScenarioFrame>,
    next_id: u64,
    rng: SimRng,
}

impl Crowd {
    pub fn new(config: CrowdConfig, frame: Option<ScenarioFrame>, mut rng: SimRng) -> Self {
        let pedestrians = match (config.scenario, frame.as_ref()) {
            (Some(kind), Some(f)) => spawn_scenario(kind, config.count, f, &config, &mut rng),
            _ => spawn_random(config.count, frame.as_ref(), &config, &mut rng),
        };
        Crowd::from_pedestrians(pedestrians, config, frame, rng)
    }

    pub fn from_pedestrians(
        pedestrians: Vec<Pedestrian>,
        config: CrowdConfig,
        frame: Option<ScenarioFrame>,
        rng: SimRng,
    ) -> Self {
        let next_id = pedestrians.iter().map(|p| p.id + 1).max().unwrap_or(0);
        Crowd {
            pedestrians,
            config,
            frame,
            next_id,
            rng,
        }
    }

    pub fn step(&mut self, obstacles: &[Shape], dt: f64) {
        step_crowd(
            &mut self.pedestrians,
            &mut self.next_id,
            &self.config,
            self.frame.as_ref(),
            obstacles,
            dt,
            &mut self.rng,
        );
    }

    pub fn bodies(&self) -> Vec<Shape> {
        self.pedestrians.iter().map(Pedestrian::body).collect()
    }

    pub fn social_agents(&self) -> Vec<SocialAgent> {
        self.pedestrians.iter().map(Pedestrian::social_agent).collect()
    }
}

/// Advances the crowd by one synchronous step: every new velocity is
/// computed from the same snapshot, then all positions are committed.
pub fn step_crowd(
    peds: &mut Vec<Pedestrian>,
    next_id: &mut u64,
    cfg: &CrowdConfig,
    frame: Option<&ScenarioFrame>,
    obstacles: &[Shape],
    dt: f64,
    rng: &mut SimRng,
) {
    assert!(dt > 0.0, "time step must be positive");
    let area = AreaFrame::new(cfg, frame.map(|f| f.axis()).unwrap_or(Vec2::new(1.0, 0.0)));

    // behaviour transitions and goal refresh come from the rng in id order
    let resume_prob = (dt / cfg.mean_stop_duration.max(dt)).min(1.0);
    let stop_len = Geometric::new(resume_prob).expect("probability in (0, 1]");
    for p in peds.iter_mut() {
        p.behavior = match p.behavior {
            Behavior::Walking if cfg.stop_go_probability > 0.0 && rng.random_bool(cfg.stop_go_probability) => {
                Behavior::Stopped {
                    remaining_steps: (stop_len.sample(rng) as u32).saturating_add(1),
                }
            }
            Behavior::Stopped { remaining_steps } if remaining_steps > 1 => Behavior::Stopped {
                remaining_steps: remaining_steps - 1,
            },
            Behavior::Stopped { .. } => Behavior::Walking,
            b => b,
        };
        if p.position.distance(p.goal) < cfg.goal_tolerance {
            p.goal = area.random_point(rng);
        }
    }

    let velocities: Vec<Vec2> = (0..peds.len())
        .map(|i| {
            let p = &peds[i];
            let neighbors = neighbors_of(peds, i, &cfg.orca);
            orca_velocity(
                &p.disc(),
                p.preferred_velocity(dt),
                p.pref_speed,
                &neighbors,
                obstacles,
                &cfg.orca,
                dt,
            )
        })
        .collect();

    for (p, v) in peds.iter_mut().zip(velocities) {
        p.velocity = v;
        p.position += v * dt;
        if v.norm() >= STATIONARY_SPEED {
            p.heading = normalize_angle(v.angle());
        }
    }

    if peds.len() < cfg.max_pedestrians && cfg.walk_in_probability > 0.0 && rng.random_bool(cfg.walk_in_probability)
    {
        if let Some(p) = walk_in(&area, peds, cfg, frame, *next_id, rng) {
            *next_id += 1;
            peds.push(p);
        }
    }
}

/// New pedestrian entering from a random side of the area and heading for
/// the opposite side.
fn walk_in(
    area: &AreaFrame,
    peds: &[Pedestrian],
    cfg: &CrowdConfig,
    frame: Option<&ScenarioFrame>,
    id: u64,
    rng: &mut SimRng,
) -> Option<Pedestrian> {
    let [hs, ht] = area.half;
    let side = rng.random_range(0..4u8);
    place(rng, cfg, peds, frame, id, cfg.speed_range, |rng| {
        let a = rng.random_range(-1.0..=1.0);
        let b = rng.random_range(-1.0..=1.0);
        let (start, goal) = match side {
            0 => ((-hs, a * ht), (hs, b * ht)),
            1 => ((hs, a * ht), (-hs, b * ht)),
            2 => ((a * hs, -ht), (b * hs, ht)),
            _ => ((a * hs, ht), (b * hs, -ht)),
        };
        Draft {
            position: area.point(start.0, start.1),
            goal: area.point(goal.0, goal.1),
        }
    })
}
