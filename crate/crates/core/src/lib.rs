//! Mapless, human-aware navigation from simulated 2D laser scans.
//!
//! The crate bundles a small planar simulator (static obstacles, an ORCA
//! driven crowd, a 270° scanner and a unicycle robot), the ego-safety /
//! social-safety reward, a from-scratch DDPG learner over heading-calibrated
//! scan histories, a greedy scan-following baseline, and evaluation suites.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {})", a, b, $tol);
    }};
}

pub mod baselines;
pub mod config;
pub mod crowd;
pub mod eval;
pub mod geometry;
pub mod lidar;
pub mod policy;
pub mod rewards;
pub mod seed;
pub mod world;

pub use geometry::{Circle, OrientedRect, Segment, Shape, Vec2};

// Training keeps tens of thousands of small replay observations alive while
// allocating multi-megabyte batch temporaries every update. The system
// allocator fragments badly under that mix (resident memory grew ~150 KB
// per environment step); mimalloc keeps it flat.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;
