//! Binary symmetric channel and seeded randomness.
//!
//! Every stochastic operation in the crate draws from [`SimRng`], a ChaCha8
//! stream seeded from an explicit [`Seed`]. Nothing reads ambient entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{ensure_in, Error, Result};

/// The single PRNG algorithm used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// 64-bit simulation seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }

    /// Child seed for an independent sub-stream (trial index, pass number,
    /// party role, ...). Uses the SplitMix64 finalizer so that nearby
    /// `(seed, stream)` pairs give unrelated children.
    pub fn derive(self, stream: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

/// Crossover probability of a binary symmetric channel, `0 <= p < 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BscParams {
    p: f64,
}

impl BscParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::Domain {
                name: "p",
                value: p,
                domain: "[0, 0.5)".into(),
            });
        }
        Ok(BscParams { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Sends `x` through the channel: each bit flips independently with
/// probability `p`.
pub fn transmit_bsc<R: Rng + ?Sized>(x: &BitString, ch: BscParams, rng: &mut R) -> BitString {
    flip_bits(x, ch.p, rng)
}

/// Local randomization: flips each bit of `x` with probability `e`.
pub fn flip_noise<R: Rng + ?Sized>(x: &BitString, e: f64, rng: &mut R) -> Result<BitString> {
    ensure_in("e", e, 0.0, 0.5)?;
    Ok(flip_bits(x, e, rng))
}

fn flip_bits<R: Rng + ?Sized>(x: &BitString, p: f64, rng: &mut R) -> BitString {
    let mut y = x.clone();
    if p == 0.0 {
        return y;
    }
    for i in 0..y.len() {
        if rng.random_bool(p) {
            y.flip(i);
        }
    }
    y
}
