//! Seeded, splittable random streams.
//!
//! A stream is addressed by `(seed, trial, lane)`. The key mixes seed and
//! trial, the ChaCha stream id carries the lane, so no two addresses share
//! keystream and results do not depend on the order trials are executed in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{CMatrix, CVector, Complex64};

pub type SimRng = ChaCha8Rng;

/// Lane ids used by the library.
pub mod lane {
    pub const CHANNEL: u64 = 0;
    pub const INIT: u64 = 1;
    pub const SCHEME_BASE: u64 = 16;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix(seed ^ splitmix(trial.wrapping_add(0x5151)))
}

pub fn stream(seed: u64, trial: u64, lane: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
    r.set_stream(lane);
    r
}

/// Child streams for `n` independent sub-tasks, keyed off one draw from
/// `parent`. Child `k` is the same whichever thread consumes it.
pub struct Children {
    base: u64,
}

impl Children {
    pub fn new(parent: &mut SimRng) -> Self {
        Self {
            base: parent.random(),
        }
    }

    pub fn get(&self, k: usize) -> SimRng {
        let mut r = ChaCha8Rng::seed_from_u64(self.base);
        r.set_stream(k as u64);
        r
    }
}

/// Circularly symmetric complex Gaussian with `E|z|^2 = var`.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

pub fn cscg_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CVector {
    CVector::from_fn(n, |_, _| cscg(rng, var))
}

/// Row-major fill so the draw order is independent of storage layout.
pub fn cscg_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| cscg(rng, var)).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

pub fn uniform_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}
