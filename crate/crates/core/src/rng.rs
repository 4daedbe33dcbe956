//! Seeded random streams and circularly-symmetric Gaussian draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{CMatrix, C64};

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One `CN(0, 1)` draw: real and imaginary parts each have variance 1/2.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. `CN(0, 1)` entries, filled column-major.
pub fn standard_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols).map(|_| standard_complex(rng)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for Monte Carlo job `(snr_index, run_index)`.
///
/// `splitmix64(splitmix64(splitmix64(base) ^ snr_index) ^ run_index)`. Each
/// stage is a bijection on `u64`, so for a fixed `(base, snr_index)` distinct
/// run indices always get distinct seeds.
pub fn mix_seed(base_seed: u64, snr_index: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ snr_index) ^ run_index)
}
