//! Simulated 270° laser scanner and the heading-calibrated scan history
//! ("motion feature") fed to the policies.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, ray_cast, Pose, Shape, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LidarError {
    #[error("scanner needs at least 2 beams, got {0}")]
    TooFewBeams(usize),
    #[error("invalid range limits [{min}, {max}]")]
    BadRangeLimits { min: f64, max: f64 },
    #[error("field of view must lie in (0, 360] degrees, got {0}")]
    BadFieldOfView(f64),
    #[error("history length must be positive")]
    EmptyHistory,
    #[error("expected {expected} historical scans, got {got}")]
    HistoryLength { expected: usize, got: usize },
    #[error("scan has {got} beams, configuration expects {expected}")]
    BeamMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub beams: usize,
    pub fov_deg: f64,
    pub min_range: f64,
    pub max_range: f64,
    /// Number of historical scans stacked into a motion feature.
    pub history: usize,
    /// Standard deviation of additive Gaussian range noise; 0 disables it.
    pub noise_std: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig {
            beams: 1080,
            fov_deg: 270.0,
            min_range: 0.1,
            max_range: 10.0,
            history: 40,
            noise_std: 0.0,
        }
    }
}

impl LidarConfig {
    /// Reduced-resolution scanner used for desk-scale training.
    pub fn desk() -> Self {
        LidarConfig {
            beams: 180,
            ..LidarConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LidarError> {
        if self.beams < 2 {
            return Err(LidarError::TooFewBeams(self.beams));
        }
        if !(self.min_range > 0.0 && self.max_range > self.min_range && self.max_range.is_finite()) {
            return Err(LidarError::BadRangeLimits {
                min: self.min_range,
                max: self.max_range,
            });
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(LidarError::BadFieldOfView(self.fov_deg));
        }
        if self.history == 0 {
            return Err(LidarError::EmptyHistory);
        }
        Ok(())
    }

    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    /// Angular spacing between neighbouring beams.
    pub fn angular_step(&self) -> f64 {
        self.fov() / (self.beams - 1) as f64
    }

    /// Beam direction relative to the robot heading; index 0 is the
    /// right-most beam.
    pub fn beam_offset(&self, index: usize) -> f64 {
        -0.5 * self.fov() + index as f64 * self.angular_step()
    }

    pub fn clamp_range(&self, r: f64) -> f64 {
        r.clamp(self.min_range, self.max_range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub ranges: Vec<f64>,
    pub heading_at_capture: f64,
    pub timestamp: u64,
}

/// Casts every beam of the fan from `pose` into `shapes`.
///
/// `noise` is only consulted when the configuration enables range noise.
pub fn simulate_scan<R: Rng + ?Sized>(
    shapes: &[Shape],
    pose: &Pose,
    cfg: &LidarConfig,
    timestamp: u64,
    noise: Option<&mut R>,
) -> Scan {
    let mut ranges: Vec<f64> = (0..cfg.beams)
        .map(|i| {
            let dir = Vec2::from_angle(pose.heading + cfg.beam_offset(i));
            cfg.clamp_range(ray_cast(pose.position, dir, shapes, cfg.max_range))
        })
        .collect();
    if cfg.noise_std > 0.0 {
        if let Some(rng) = noise {
            let normal = Normal::new(0.0, cfg.noise_std).expect("noise_std is finite and positive");
            for r in &mut ranges {
                *r = cfg.clamp_range(*r + normal.sample(rng));
            }
        }
    }
    Scan {
        ranges,
        heading_at_capture: normalize_angle(pose.heading),
        timestamp,
    }
}

/// Index shift that re-expresses a scan taken at `prev_heading` in the beam
/// frame of `current_heading`.
pub fn calibration_shift(prev_heading: f64, current_heading: f64, cfg: &LidarConfig) -> i64 {
    (normalize_angle(current_heading - prev_heading) / cfg.angular_step()).round() as i64
}

/// Re-indexes `prev` as if it had been captured at `current_heading`.
///
/// Beam `i` takes the reading previously at `i + shift`; beams rotated in
/// from outside the old fan read as `max_range`.
pub fn calibrate(prev: &Scan, current_heading: f64, cfg: &LidarConfig) -> Scan {
    let shift = calibration_shift(prev.heading_at_capture, current_heading, cfg);
    let n = prev.ranges.len() as i64;
    let ranges = (0..n)
        .map(|i| {
            let src = i + shift;
            if (0..n).contains(&src) {
                prev.ranges[src as usize]
            } else {
                cfg.max_range
            }
        })
        .collect();
    Scan {
        ranges,
        heading_at_capture: normalize_angle(current_heading),
        timestamp: prev.timestamp,
    }
}

/// Goal position relative to the robot. `initial_distance` is the start to
/// goal distance of the episode, used for normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalVector {
    pub distance: f64,
    pub bearing: f64,
    pub initial_distance: f64,
}

impl GoalVector {
    pub fn new(distance: f64, bearing: f64, initial_distance: f64) -> Self {
        GoalVector {
            distance,
            bearing: normalize_angle(bearing),
            initial_distance,
        }
    }

    /// `[distance / initial_distance, bearing / π]`.
    pub fn normalized(&self) -> [f64; 2] {
        let d0 = if self.initial_distance > 0.0 { self.initial_distance } else { 1.0 };
        [self.distance / d0, self.bearing / PI]
    }
}

/// Time × beam matrix of calibrated scans, oldest row first, plus the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionFeature {
    pub rows: usize,
    pub beams: usize,
    pub data: Vec<f64>,
    pub goal: GoalVector,
}

impl MotionFeature {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.beams..(i + 1) * self.beams]
    }

    /// The newest (uncalibrated) scan.
    pub fn latest(&self) -> &[f64] {
        self.row(self.rows - 1)
    }
}

/// Fixed-length scan history; the first scan of an episode is repeated to
/// fill it.
#[derive(Debug, Clone)]
pub struct ScanHistory {
    scans: VecDeque<Scan>,
    capacity: usize,
}

impl ScanHistory {
    pub fn new(first: Scan, capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        ScanHistory {
            scans: std::iter::repeat_n(first, capacity).collect(),
            capacity,
        }
    }

    pub fn push(&mut self, scan: Scan) {
        if self.scans.len() == self.capacity {
            self.scans.pop_front();
        }
        self.scans.push_back(scan);
    }

    pub fn latest(&self) -> &Scan {
        self.scans.back().expect("history is never empty")
    }

    pub fn scans(&self) -> impl ExactSizeIterator<Item = &Scan> {
        self.scans.iter()
    }

    pub fn to_vec(&self) -> Vec<Scan> {
        self.scans.iter().cloned().collect()
    }
}

/// Stacks `history` (oldest first) into a motion feature, rotating every
/// row into the beam frame of `current_heading`.
pub fn build_motion_feature<'a, I>(
    history: I,
    current_heading: f64,
    goal: GoalVector,
    cfg: &LidarConfig,
) -> Result<MotionFeature, LidarError>
where
    I: IntoIterator<Item = &'a Scan>,
{
    let mut data = Vec::with_capacity(cfg.history * cfg.beams);
    let mut rows = 0;
    for scan in history {
        if scan.ranges.len() != cfg.beams {
            return Err(LidarError::BeamMismatch {
                expected: cfg.beams,
                got: scan.ranges.len(),
            });
        }
        data.extend_from_slice(&calibrate(scan, current_heading, cfg).ranges);
        rows += 1;
    }
    if rows != cfg.history {
        return Err(LidarError::HistoryLength {
            expected: cfg.history,
            got: rows,
        });
    }
    Ok(MotionFeature {
        rows,
        beams: cfg.beams,
        data,
        goal,
    })
}
