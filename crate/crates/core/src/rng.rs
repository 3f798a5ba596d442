//! Seeded random streams.
//!
//! Every concern draws from its own ChaCha stream derived from the run seed,
//! so adding draws in one phase never shifts the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Features = 1,
    ScoreNoise = 2,
    Epidemic = 3,
    Exploration = 4,
    Ignorant = 5,
    Encounter = 6,
    Replay = 7,
    NetInit = 8,
    Episodes = 9,
    TargetNoise = 10,
    Placement = 11,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
