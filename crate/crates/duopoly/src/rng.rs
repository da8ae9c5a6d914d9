//! Counter-based random number generation for reproducible experiments.
//!
//! Every random quantity in a run is addressed by `(master seed, stream,
//! index)` so that any implementation can reproduce a stream without
//! replaying history. The algorithm is fixed:
//!
//! * Generator: ChaCha8, keyed by the 64-bit master seed written
//!   little-endian into bytes 0..8 of the 32-byte key (bytes 8..32 zero).
//! * Streams: stream 0 is reserved for seed fan-out; the exploration shock
//!   of firm `i` (0-based) in period `t` (1-based) lives on stream `i + 1`
//!   at word position `4 * (t - 1)`.
//! * A standard normal consumes two `u64` draws (four 32-bit words) and is
//!   formed by Box-Muller: `z = sqrt(-2 ln u1) * cos(2 pi u2)` with
//!   `u1 in (0, 1]` and `u2 in [0, 1)` built from the top 53 bits.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream reserved for deriving per-run seeds from a master seed.
pub const FANOUT_STREAM: u64 = 0;

/// Deterministic, randomly-addressable source of exploration shocks.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key
    }

    fn rng_at(&self, stream: u64, word_pos: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        rng
    }

    /// Raw u64 draw at `(stream, index)`; each index covers two 32-bit words.
    pub fn u64_at(&self, stream: u64, index: u64) -> u64 {
        self.rng_at(stream, 2 * index as u128).next_u64()
    }

    /// Standard normal at `(stream, index)`; each index covers four words.
    pub fn normal_at(&self, stream: u64, index: u64) -> f64 {
        let mut rng = self.rng_at(stream, 4 * index as u128);
        let x1 = rng.next_u64();
        let x2 = rng.next_u64();
        // u1 in (0, 1] avoids ln(0); u2 in [0, 1).
        let u1 = ((x1 >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (x2 >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Exploration shock of firm `firm` (0-based) in period `t` (1-based),
    /// scaled to standard deviation `sd`.
    pub fn shock(&self, firm: usize, t: u64, sd: f64) -> f64 {
        debug_assert!(firm < 2 && t >= 1);
        sd * self.normal_at(firm as u64 + 1, t - 1)
    }

    /// k-th derived run seed. Seed lists in experiments are generated this
    /// way so configs only need a master seed and a count.
    pub fn run_seed(&self, k: u64) -> u64 {
        self.u64_at(FANOUT_STREAM, k)
    }
}
