//! Reproducible pseudorandom streams for instance generation.
//!
//! The generator is PCG32 (XSH-RR output permutation over a 64-bit LCG with
//! multiplier 6364136223846793005). Normal variates use the Box–Muller
//! transform with `libm` transcendental functions, so a given seed yields the
//! same stream on every platform.

use serde::{Deserialize, Serialize};

pub const ALGORITHM_ID: &str = "pcg32-xsh-rr/box-muller";

const MULTIPLIER: u64 = 6364136223846793005;
const STREAM: u64 = 0xda3e39cb94b95bdb;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededRng {
    seed: u64,
    state: u64,
    increment: u64,
    draws: u64,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut rng = Self {
            seed,
            state: 0,
            increment: (STREAM << 1) | 1,
            draws: 0,
            spare_normal: None,
        };
        rng.step();
        rng.state = rng.state.wrapping_add(seed);
        rng.step();
        rng.draws = 0;
        rng
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit outputs consumed so far.
    pub fn position(&self) -> u64 {
        self.draws
    }

    fn step(&mut self) {
        self.state = self
            .state
            .wrapping_mul(MULTIPLIER)
            .wrapping_add(self.increment);
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        self.draws += 1;
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}
