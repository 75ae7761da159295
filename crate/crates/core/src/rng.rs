//! Deterministic per-replicate random number streams.
//!
//! Every Monte Carlo replicate i of a run with seed s draws from its own
//! stream derived from (s, i): one fixed ChaCha key per seed, the replicate
//! index as the ChaCha stream counter. Streams are therefore independent,
//! and a replicate's draws depend only on (seed, index) — never on how work
//! was split across threads — so parallel and serial runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// The stream for replicate `index` of a run seeded with `seed`.
pub fn replicate_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A second family of streams, offset so that operations needing two
/// independent sample sets per replicate (e.g. the two sides of the
/// sphere/ball comparison) never share a stream with `replicate_stream`.
pub fn replicate_stream_alt(seed: u64, index: u64) -> ChaCha8Rng {
    // Distinct key, same counter scheme.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(index);
    rng
}

pub fn standard_normal_vec(rng: &mut impl RngCore, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform draw on the sphere of radius `radius` centered at `center`.
pub fn uniform_on_sphere(rng: &mut impl RngCore, center: &[f64], radius: f64) -> Vec<f64> {
    let dim = center.len();
    loop {
        let z = standard_normal_vec(rng, dim);
        let n = crate::vecops::norm_sq(&z).sqrt();
        if n > 0.0 {
            return center
                .iter()
                .zip(&z)
                .map(|(c, zi)| c + radius * zi / n)
                .collect();
        }
    }
}

/// Uniform draw in the closed ball of radius `radius` centered at `center`.
pub fn uniform_in_ball(rng: &mut impl RngCore, center: &[f64], radius: f64) -> Vec<f64> {
    let dim = center.len();
    let u: f64 = rand::Rng::random(rng);
    let r = radius * u.powf(1.0 / dim as f64);
    uniform_on_sphere(rng, center, r)
}
