//! Reproducible random streams.
//!
//! All randomness comes from ChaCha8 generators. A run has one 64-bit master
//! seed; each consumer draws from its own stream selected by
//! `(trial index, stream tag)`, so the environment, the learner, loss rounding
//! and invariant checks can be reseeded independently of one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StreamTag {
    Environment = 1,
    Algorithm = 2,
    Rounding = 3,
    Checks = 4,
    Oracle = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngContract {
    pub seed: u64,
}

impl RngContract {
    pub fn new(seed: u64) -> Self {
        RngContract { seed }
    }

    /// Trial indices must stay below 2^56.
    pub fn stream(&self, trial: u64, tag: StreamTag) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((trial << 8) | tag as u64);
        rng
    }
}
