//! Seeded inputs shared by the benchmarks under `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` values on `[0, 1)`.
pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>()).collect()
}

/// `n` Likert ratings; the second rater copies the first with probability
/// `agree`.
pub fn likert_pair(n: usize, agree: f64, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut r = rng(seed);
    let a: Vec<u8> = (0..n).map(|_| r.random_range(1..=5)).collect();
    let b = a.iter().map(|&x| if r.random_bool(agree) { x } else { r.random_range(1..=5) }).collect();
    (a, b)
}

/// `(year, value)` points over election years with a linear drift.
pub fn trend_points(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let year = 1960.0 + 4.0 * (i % 17) as f64;
            (year, 0.0025 * (year - 1960.0) + r.random_range(-0.1..0.1))
        })
        .collect()
}
