//! Seeded random band-limited initial data inside the Kähler cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{GeometryConfig, PotentialField};

/// Default highest retained mode of random initial data.
pub const DEFAULT_MAX_MODE: i32 = 4;

/// Default lower bound imposed on the initial metric density.
pub const DEFAULT_MIN_DENSITY: f64 = 0.5;

/// Random band-limited potential with modes `|j|, |k| <= max_mode`,
/// coefficients from a seeded generator, scaled so that the metric density
/// satisfies `min u >= min_density`. Identical inputs reproduce identical
/// fields.
pub fn random_band_limited(
    geometry: GeometryConfig,
    seed: u64,
    max_mode: i32,
    min_density: f64,
) -> Result<PotentialField> {
    assert!(max_mode >= 1 && min_density > 0.0 && min_density < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for j in 0..=max_mode {
        for k in -max_mode..=max_mode {
            if j == 0 && k <= 0 {
                continue; // conjugate pairs: keep one representative
            }
            let weight = 1.0 / (1.0 + (j * j + k * k) as f64);
            let amp: f64 = rng.gen_range(-1.0..1.0) * weight;
            let phase: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            terms.push((j as f64, k as f64, amp, phase));
        }
    }
    let q = 2.0 * std::f64::consts::PI / geometry.period;
    let raw = PotentialField::from_fn(geometry, |x, y| {
        terms
            .iter()
            .map(|&(j, k, a, th)| a * (q * (j * x + k * y) + th).cos())
            .sum()
    })?;
    // Scale into the cone: min(1 + s Δφ) >= min_density.
    let lap = crate::geometry::laplacian(&raw)?;
    let worst = lap.values().iter().fold(0.0f64, |m, v| m.max(-v));
    let margin = 1.0 - min_density;
    let scale = if worst > margin { margin / worst } else { 1.0 };
    PotentialField::new(
        *raw.geometry(),
        raw.values().iter().map(|v| v * scale).collect(),
    )
}
