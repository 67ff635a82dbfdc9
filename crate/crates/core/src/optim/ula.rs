//! Unadjusted Langevin sampler: `z <- z - h*g(z) + N(0, 2h I)`, run
//! independently per particle with derived RNG streams.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};
use crate::rng::{tags, RngStream};

/// Apply `n` Langevin steps to every particle. The drift callback receives
/// the current position and returns the full (already weighted) drift
/// vector; the step size `h` and the `N(0, 2h I)` noise are applied here.
pub fn ula_sample<F>(
    drift: F,
    particles: &ParticleCloud,
    h: f64,
    n: usize,
    rng: RngStream,
) -> Result<ParticleCloud>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::ShapeMismatch(format!("step size must be positive, got {h}")));
    }
    if n == 0 {
        return Ok(particles.clone());
    }
    let dim = particles.dim();
    let noise_scale = (2.0 * h).sqrt();
    let base = rng.derive(tags::ULA);
    let moved: Vec<Result<Vec<f64>>> = (0..particles.len())
        .into_par_iter()
        .map(|b| {
            let mut r = base.derive(b as u64).rng();
            let mut z = particles.point(b).to_vec();
            for step in 1..=n {
                let g = drift(&z)?;
                debug_assert_eq!(g.len(), dim);
                for (zc, gc) in z.iter_mut().zip(&g) {
                    *zc += -h * gc + noise_scale * r.sample::<f64, _>(StandardNormal);
                }
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteState(format!(
                        "particle {b} diverged at inner step {step}; reduce the step size"
                    )));
                }
            }
            Ok(z)
        })
        .collect();
    let mut flat = Vec::with_capacity(particles.len() * dim);
    for z in moved {
        flat.extend_from_slice(&z?);
    }
    ParticleCloud::new(dim, flat)
}
