//! Deterministic random streams and parallel rasters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::field::{GridSpec, ScalarField2};

pub const DEFAULT_SEED: u64 = 0x5eed_c0de;

/// Independent reproducible stream `stream` of generator `seed`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Field values at every cell center, in cell-index order.
pub fn raster_values<F: ScalarField2 + ?Sized>(field: &F, grid: &GridSpec) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| field.value(grid.center_of(idx)))
        .collect()
}

/// Largest `|f|` over the raster, used to scale absolute tolerances.
pub fn value_scale(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Stratified parameters `t_k ∈ ((k + u_k)/m)` for `k = 0..m`, strictly inside
/// `(0, 1)` and increasing.
pub fn stratified(rng: &mut impl rand::Rng, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let u: f64 = rng.gen_range(0.05..0.95);
            (k as f64 + u) / m as f64
        })
        .collect()
}
