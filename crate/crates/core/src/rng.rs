//! Seeded randomness.
//!
//! Every stochastic operation takes an explicit generator. The generator is
//! ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), seeded from a `u64` via
//! `SeedableRng::seed_from_u64`, which expands the seed with PCG32 as documented
//! by `rand_core`. Normal variates use the ziggurat sampler of `rand_distr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub type AgnRng = ChaCha8Rng;

/// Identifier recorded in run metadata so runs can be replayed elsewhere.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64/PCG32 expansion); normals: rand_distr 0.5 StandardNormal ziggurat";

pub fn seeded(seed: u64) -> AgnRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for a named sub-task.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    // FNV-1a over the stream label, mixed with the base seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(seed ^ h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn standard_normal_matrix<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn uniform_matrix<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::of(rng.random_range(lo..hi)))
        .collect();
    Matrix::from_vec(rows, cols, data)
}
