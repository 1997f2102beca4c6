use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::instance::{Instance, Time};

pub const DEFAULT_MEAN: f64 = 50.0;
pub const DEFAULT_STDDEV: f64 = 25.0;

/// Random instance with normally distributed processing times.
///
/// Draws are rounded to the nearest integer and clamped to at least 1. The
/// matrix is filled job by job, machine by machine from a ChaCha8 stream
/// seeded with `seed`.
///
/// # Panics
///
/// If `n` or `m` is zero, or `stddev` is negative or not finite.
pub fn generate_random(n: usize, m: usize, mean: f64, stddev: f64, seed: u64) -> Instance {
    let normal = Normal::new(mean, stddev).expect("stddev must be finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<Time> = (0..n * m)
        .map(|_| clamp_draw(normal.sample(&mut rng)))
        .collect();
    Instance::from_flat(format!("rand-{n}x{m}-s{seed}"), n, m, times)
        .expect("dimensions must be positive")
}

fn clamp_draw(x: f64) -> Time {
    let r = x.round();
    if r < 1.0 {
        1
    } else {
        r as Time
    }
}
