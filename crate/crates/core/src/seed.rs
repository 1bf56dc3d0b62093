//! Root-seed expansion. Every random stream in a run is derived from one
//! root seed plus a component tag and an index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Component tags, kept stable so derived seeds never move between releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Map = 1,
    Crowd = 2,
    Sensor = 3,
    Network = 4,
    Exploration = 5,
    Replay = 6,
    Episode = 7,
    Scenario = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(root: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ (stream as u64)) ^ index)
}

pub fn rng_for(root: u64, stream: Stream, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive(root, stream, index))
}
