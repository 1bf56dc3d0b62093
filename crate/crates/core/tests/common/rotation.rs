//! Pure-rotation calibration check shared by the geometry and acceptance
//! tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use socnav::geometry::{Pose, Shape};
use socnav::lidar::{build_motion_feature, simulate_scan, GoalVector, LidarConfig, Scan};
use socnav::seed::SimRng;

use super::{random_scene, Body};

/// Scans of a static scene from one spot, each turned by a whole number of
/// beam spacings: after calibration every row must equal the newest scan
/// wherever the shifted beam was inside the older fan.
pub fn check_rotation_sequence(beams: usize, max_step: i64, seed: u64) -> Result<(), String> {
    let cfg = LidarConfig {
        beams,
        ..LidarConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes: Vec<Shape> = random_scene(&mut rng).iter().map(Body::to_shape).collect();
    let position = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let step = cfg.angular_step();
    let mut heading = rng.random_range(-PI..PI);
    let mut offsets = vec![0i64];
    let mut scans: Vec<Scan> = Vec::new();
    for k in 0..cfg.history {
        if k > 0 {
            let m = rng.random_range(-max_step..=max_step);
            heading += m as f64 * step;
            offsets.push(offsets[k - 1] + m);
        }
        let pose = Pose::new(position.0, position.1, heading);
        scans.push(simulate_scan::<SimRng>(&shapes, &pose, &cfg, k as u64, None));
    }
    let f = build_motion_feature(&scans, heading, GoalVector::new(1.0, 0.0, 1.0), &cfg).unwrap();
    let last = *offsets.last().unwrap();
    let newest = f.latest().to_vec();
    for (k, &off) in offsets.iter().enumerate() {
        let shift = last - off;
        for (i, &expect) in newest.iter().enumerate() {
            let src = i as i64 + shift;
            if (0..beams as i64).contains(&src) {
                let got = f.row(k)[i];
                if (got - expect).abs() >= 1e-9 {
                    return Err(format!("row {k} beam {i}: {got} vs {expect}"));
                }
            } else if f.row(k)[i] != cfg.max_range {
                return Err(format!("row {k} beam {i}: fill {} instead of max range", f.row(k)[i]));
            }
        }
    }
    Ok(())
}
