//! Seeded random streams.
//!
//! Every stochastic mechanism of a run draws from its own ChaCha stream
//! derived from one run seed, so switching one mechanism on or off leaves
//! the draws of the others untouched.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Occupancy = 1,
    LocalDecisions = 2,
    FusionCoins = 3,
    Exploration = 4,
    RateNoise = 5,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct RngStreams {
    pub occupancy: ChaCha8Rng,
    pub local_decisions: ChaCha8Rng,
    pub fusion_coins: ChaCha8Rng,
    pub exploration: ChaCha8Rng,
    pub rate_noise: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            occupancy: stream(seed, Stream::Occupancy),
            local_decisions: stream(seed, Stream::LocalDecisions),
            fusion_coins: stream(seed, Stream::FusionCoins),
            exploration: stream(seed, Stream::Exploration),
            rate_noise: stream(seed, Stream::RateNoise),
        }
    }
}

/// Seeds for `runs` Monte Carlo repetitions under one master seed.
pub fn child_seeds(master: u64, runs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(0);
    (0..runs).map(|_| rng.next_u64()).collect()
}
