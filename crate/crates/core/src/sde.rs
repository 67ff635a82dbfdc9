//! Ground-truth process simulation: Euler–Maruyama integration of
//! `dZ = drift(t, Z) dt + diffusion * dW`, and noisy snapshot generation.
//!
//! Each path owns a derived [`RngStream`], so parallel and serial runs
//! produce identical samples.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cloud::{ParticleCloud, SnapshotDataset, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::{tags, RngStream};

/// Time-dependent drift field `(t, x) -> R^d`.
pub type DriftFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Time-dependent scalar potential `(t, x) -> R`.
pub type PotentialFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A diffusion with constant coefficient and Gaussian initial law
/// `N(init_mean, init_std^2 * I)`.
#[derive(Clone)]
pub struct SdeSpec {
    drift: DriftFn,
    diffusion_coeff: f64,
    dim: usize,
    init_mean: Vec<f64>,
    init_std: f64,
}

impl std::fmt::Debug for SdeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SdeSpec")
            .field("diffusion_coeff", &self.diffusion_coeff)
            .field("dim", &self.dim)
            .field("init_mean", &self.init_mean)
            .field("init_std", &self.init_std)
            .finish_non_exhaustive()
    }
}

impl SdeSpec {
    pub fn new(drift: DriftFn, diffusion_coeff: f64, init_mean: Vec<f64>, init_std: f64) -> Result<Self> {
        if init_mean.is_empty() || init_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("initial mean must be a finite non-empty vector".into()));
        }
        if !(diffusion_coeff >= 0.0 && diffusion_coeff.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "diffusion coefficient must be non-negative, got {diffusion_coeff}"
            )));
        }
        if !(init_std >= 0.0 && init_std.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "initial std must be non-negative, got {init_std}"
            )));
        }
        let dim = init_mean.len();
        Ok(SdeSpec { drift, diffusion_coeff, dim, init_mean, init_std })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diffusion_coeff(&self) -> f64 {
        self.diffusion_coeff
    }

    fn sample_init(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.init_mean
            .iter()
            .map(|m| m + self.init_std * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Advance `state` from `*t` to `target` with steps of at most `dt`.
    fn step_to(&self, state: &mut [f64], t: &mut f64, target: f64, dt: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        let eps = 1e-12 * target.abs().max(1.0);
        while *t < target - eps {
            let h = dt.min(target - *t);
            let drift = (self.drift)(*t, state);
            debug_assert_eq!(drift.len(), self.dim);
            let noise_scale = self.diffusion_coeff * h.sqrt();
            for (xi, di) in state.iter_mut().zip(&drift) {
                *xi += di * h + noise_scale * rng.sample::<f64, _>(StandardNormal);
            }
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState(format!(
                    "trajectory diverged at t={t} (step {h}); reduce dt or check the drift"
                )));
            }
            *t += h;
        }
        *t = target;
        Ok(())
    }
}

/// Drift that is identically zero.
pub fn zero_drift(dim: usize) -> DriftFn {
    Arc::new(move |_t, _x| vec![0.0; dim])
}

/// Ornstein–Uhlenbeck drift `-theta * (x - mu)`.
pub fn ou_drift(theta: f64, mu: Vec<f64>) -> DriftFn {
    Arc::new(move |_t, x| x.iter().zip(&mu).map(|(xi, mi)| -theta * (xi - mi)).collect())
}

/// Central finite-difference gradient of a potential.
pub fn gradient_of_potential(psi: &PotentialFn, t: f64, x: &[f64], fd_step: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    (0..x.len())
        .map(|c| {
            xp[c] = x[c] + fd_step;
            xm[c] = x[c] - fd_step;
            let g = (psi(t, &xp) - psi(t, &xm)) / (2.0 * fd_step);
            xp[c] = x[c];
            xm[c] = x[c];
            g
        })
        .collect()
}

/// Drift descending a potential: `-grad psi` via central differences.
pub fn potential_descent_drift(psi: PotentialFn, fd_step: f64) -> DriftFn {
    Arc::new(move |t, x| {
        gradient_of_potential(&psi, t, x, fd_step).into_iter().map(|g| -g).collect()
    })
}

/// Drift ascending a potential: `+grad psi` (kept selectable because the
/// sign convention for gradient flows varies by source).
pub fn potential_ascent_drift(psi: PotentialFn, fd_step: f64) -> DriftFn {
    Arc::new(move |t, x| gradient_of_potential(&psi, t, x, fd_step))
}

/// Planar double-well potential with a time-drifting second coordinate:
/// `psi(t, x) = 0.5 (x1 - 1.5)^2 (x1 + 1.5)^2 + 10 (x2 + t)^2`.
/// Minima sit at `x1 = ±1.5`, `x2 = -t`.
pub fn double_well_potential() -> PotentialFn {
    Arc::new(|t, x| {
        let a = x[0] - 1.5;
        let b = x[0] + 1.5;
        0.5 * a * a * b * b + 10.0 * (x[1] + t) * (x[1] + t)
    })
}

/// Analytic gradient of [`double_well_potential`]:
/// `(2 x1^3 - 4.5 x1, 20 (x2 + t))`.
pub fn double_well_gradient(t: f64, x: &[f64]) -> Vec<f64> {
    vec![2.0 * x[0] * x[0] * x[0] - 4.5 * x[0], 20.0 * (x[1] + t)]
}

/// Drift `-grad psi` for the double well, using the analytic gradient.
pub fn double_well_descent_drift() -> DriftFn {
    Arc::new(|t, x| double_well_gradient(t, x).into_iter().map(|g| -g).collect())
}

fn grid_times(dt: f64, t_end: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        if t >= t_end - 1e-12 * t_end.max(1.0) {
            times.push(t_end);
            return times;
        }
        times.push(t);
        k += 1;
    }
}

/// Simulate `n_paths` independent trajectories on the `dt`-grid
/// `0, dt, 2dt, ..., t_end` (final step truncated to land on `t_end`).
/// Returns one cloud per grid time, including the initial positions.
pub fn euler_maruyama(
    spec: &SdeSpec,
    dt: f64,
    t_end: f64,
    n_paths: usize,
    rng: RngStream,
) -> Result<Vec<ParticleCloud>> {
    if !(dt > 0.0 && t_end > 0.0 && dt <= t_end) {
        return Err(Error::ShapeMismatch(format!(
            "need 0 < dt <= t_end, got dt={dt}, t_end={t_end}"
        )));
    }
    if n_paths == 0 {
        return Err(Error::ShapeMismatch("need at least one path".into()));
    }
    let times = grid_times(dt, t_end);
    let base = rng.derive(tags::SDE_PATH);
    let trajectories: Vec<Result<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut path_rng = base.derive(p as u64).rng();
            let mut state = spec.sample_init(&mut path_rng);
            let mut t = 0.0;
            let mut recorded = Vec::with_capacity(times.len() * spec.dim);
            recorded.extend_from_slice(&state);
            for &target in &times[1..] {
                spec.step_to(&mut state, &mut t, target, dt, &mut path_rng)?;
                recorded.extend_from_slice(&state);
            }
            Ok(recorded)
        })
        .collect();
    let trajectories = trajectories.into_iter().collect::<Result<Vec<_>>>()?;
    // Transpose path-major recordings into per-time clouds.
    (0..times.len())
        .map(|k| {
            let mut flat = Vec::with_capacity(n_paths * spec.dim);
            for traj in &trajectories {
                flat.extend_from_slice(&traj[k * spec.dim..(k + 1) * spec.dim]);
            }
            ParticleCloud::new(spec.dim, flat)
        })
        .collect()
}

/// Draw `n` fresh, independent realizations per snapshot time (no path is
/// observed twice) and blur each observation with `N(0, sigma^2 I)` noise.
pub fn generate_snapshots(
    spec: &SdeSpec,
    times: &TimeGrid,
    n: usize,
    sigma: f64,
    dt: f64,
    rng: RngStream,
) -> Result<SnapshotDataset> {
    if n == 0 {
        return Err(Error::ShapeMismatch("need at least one observation per snapshot".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::ShapeMismatch(format!("noise sigma must be non-negative, got {sigma}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::ShapeMismatch(format!("dt must be positive, got {dt}")));
    }
    let path_base = rng.derive(tags::SDE_PATH);
    let noise_base = rng.derive(tags::OBS_NOISE);
    let snapshots: Vec<Result<Vec<f64>>> = (0..times.len())
        .into_par_iter()
        .map(|j| {
            let t_j = times.time(j);
            let mut flat = Vec::with_capacity(n * spec.dim);
            for i in 0..n {
                let mut path_rng = path_base.derive(j as u64).derive(i as u64).rng();
                let mut state = spec.sample_init(&mut path_rng);
                if t_j > 0.0 {
                    let mut t = 0.0;
                    spec.step_to(&mut state, &mut t, t_j, dt, &mut path_rng)?;
                }
                let mut noise_rng = noise_base.derive(j as u64).derive(i as u64).rng();
                for v in &mut state {
                    *v += sigma * noise_rng.sample::<f64, _>(StandardNormal);
                }
                flat.extend_from_slice(&state);
            }
            Ok(flat)
        })
        .collect();
    let clouds = snapshots
        .into_iter()
        .map(|flat| ParticleCloud::new(spec.dim, flat?))
        .collect::<Result<Vec<_>>>()?;
    SnapshotDataset::new(times.clone(), clouds, sigma)
}
