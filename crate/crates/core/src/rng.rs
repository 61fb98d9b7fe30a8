//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, stream, position)`: a ChaCha8 generator
//! keyed by the seed with the stream id selecting the ChaCha stream. The k-th
//! `f64` taken from a stream is always the same value, so adding a chain to a
//! pool or switching assignment modes never perturbs unrelated draws.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream reserved for the chain-assignment draws of a dataset.
pub const ASSIGNMENT_STREAM: u64 = u64::MAX;
/// Stream offset for label emission (added to the chain id).
pub const LABEL_STREAM_BASE: u64 = 1 << 32;
/// Stream reserved for Rademacher sign draws.
pub const SIGN_STREAM: u64 = u64::MAX - 1;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for a sub-task (trial, run, pilot).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0xA5A5_A5A5)))
}

#[derive(Clone, Debug)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream(rng)
    }

    /// Positions the stream so that the next `uniform()` is draw number `position`.
    pub fn at(seed: u64, stream: u64, position: u64) -> Self {
        let mut s = Self::new(seed, stream);
        s.0.set_word_pos(2 * position as u128);
        s
    }

    /// Uniform on [0, 1); consumes exactly one 64-bit word pair.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.0.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Inverse-CDF draw from a cumulative table whose last entry is ~1.
#[inline]
pub fn categorical(cumulative: &[f64], u: f64) -> usize {
    let last = cumulative.len() - 1;
    cumulative.iter().position(|&c| u < c).unwrap_or(last)
}

pub fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // guard against a row summing to 1 - 1e-16
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}
