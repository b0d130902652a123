//! Counter-based random numbers.
//!
//! Draw number `counter` of stream `stream` is the 64-bit word at position
//! `2 * counter` of ChaCha8 keyed by `seed_from_u64(seed)` on that stream,
//! so any draw can be regenerated without replaying its predecessors.
//! Normal deviates use Box-Muller on the unit pair at counters `2k`, `2k+1`
//! (cosine branch only).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
    stream: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn bits(&self, counter: u64) -> u64 {
        let mut g = ChaCha8Rng::seed_from_u64(self.seed);
        g.set_stream(self.stream);
        g.set_word_pos(2 * u128::from(counter));
        g.next_u64()
    }

    /// Uniform deviate in the open interval (0, 1).
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate number `k`.
    pub fn normal(&self, k: u64) -> f64 {
        let u1 = self.uniform(2 * k);
        let u2 = self.uniform(2 * k + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normals(&self, offset: u64, n: usize) -> Vec<f64> {
        (0..n as u64).map(|k| self.normal(offset + k)).collect()
    }
}
