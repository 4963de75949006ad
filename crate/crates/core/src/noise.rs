//! Reproducible Wiener increments.
//!
//! Each trajectory owns a [`NoiseStream`] derived from `(master seed,
//! trajectory index)`: a ChaCha8 generator keyed by the master seed with the
//! trajectory index as its stream id. The derivation is part of the output
//! contract; changing it changes every published number.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    index: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            seed,
            index,
            draws: 0,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Number of normal variates consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn normal(&mut self) -> f64 {
        self.draws += 1;
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Real increment with variance `dt`.
    pub fn real_increment(&mut self, dt: f64) -> f64 {
        self.normal() * dt.sqrt()
    }

    /// `dW = (u + iv)√(dt/2)`, so `E|dW|² = dt` and `E[dW²] = 0`.
    pub fn complex_increment(&mut self, dt: f64) -> C64 {
        let s = (0.5 * dt).sqrt();
        let u = self.normal();
        let v = self.normal();
        C64::new(u * s, v * s)
    }

    /// One complex increment per channel, in channel order.
    pub fn complex_increments(&mut self, dt: f64, channels: usize) -> Vec<C64> {
        (0..channels).map(|_| self.complex_increment(dt)).collect()
    }
}

/// The stream for trajectory `index` of a run seeded with `master_seed`.
pub fn seed_trajectory(master_seed: u64, index: u64) -> NoiseStream {
    NoiseStream::new(master_seed, index)
}

/// Splits a squeezed-channel complex increment into the real pair `(dWa, dWb)`
/// used by the Bloch-vector equations: `dW = (dWa - i dWb)/√2`.
pub fn real_pair(dw: C64) -> (f64, f64) {
    let r = std::f64::consts::SQRT_2;
    (r * dw.re, -r * dw.im)
}
