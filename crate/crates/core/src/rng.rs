//! Seeded random streams.
//!
//! Every stochastic choice in a run draws from a SplitMix64 stream so a
//! `(config, seed)` pair pins the output bit for bit. Independent purposes
//! (initial noise, selector adjustment, transition noise) get their own
//! stream derived from the run seed, so adding draws to one never shifts
//! another.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

const TAG_INITIAL_NOISE: u64 = 0x4e4f_4953_455f_3030;
const TAG_SELECTOR: u64 = 0x5345_4c45_4354_4f52;
const TAG_TRANSITION: u64 = 0x5452_414e_5349_5431;

/// Which part of a run a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    InitialNoise,
    Selector,
    Transition,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::InitialNoise => TAG_INITIAL_NOISE,
            StreamKind::Selector => TAG_SELECTOR,
            StreamKind::Transition => TAG_TRANSITION,
        }
    }
}

/// Uniform + standard-normal stream. Normals come from Box-Muller pairs.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    inner: SplitMix64,
    spare: Option<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64, kind: StreamKind) -> Self {
        Self::from_raw_seed(seed ^ kind.tag())
    }

    pub fn from_raw_seed(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U keeps the log argument in (0, 1].
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f32]) {
        for v in out.iter_mut() {
            *v = self.standard_normal() as f32;
        }
    }
}

impl RngCore for NoiseStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
