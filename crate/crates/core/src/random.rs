//! Reproducible random streams.
//!
//! A stream is keyed by the master seed and selects the ChaCha stream by
//! replication id; the block counter supplies the draw index. Two streams
//! with the same `(master_seed, replication_id)` produce identical draws no
//! matter which thread or in which order replications run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replication_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replication_id: u64) -> Self {
        SeedSpec {
            master_seed,
            replication_id,
        }
    }

    pub fn stream(&self) -> RandomStream {
        derive_stream(*self)
    }
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

pub fn derive_stream(seed: SeedSpec) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
    rng.set_stream(seed.replication_id);
    rng.set_word_pos(0);
    RandomStream { rng }
}

impl RandomStream {
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform on `low..high`.
    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        self.rng.gen_range(low..high)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}
