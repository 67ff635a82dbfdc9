//! Shared domain types: particle clouds, time grids, snapshot datasets,
//! fitted flow states, and the estimator configuration.

use crate::error::{Error, Result};

/// A uniform empirical measure `(1/B) * sum_b delta_{Y_b}` on `R^d`,
/// stored as a flat row-major coordinate buffer. No per-point weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    dim: usize,
    data: Vec<f64>,
}

impl ParticleCloud {
    /// Wrap a flat buffer of `n * dim` coordinates (row-major points).
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch("cloud dimension must be at least 1".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "flat buffer of {} coordinates does not hold a positive number of {dim}-dim points",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate(format!(
                "cloud point {} coordinate {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(ParticleCloud { dim, data })
    }

    /// Build from per-point rows, all of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("ragged point rows".into()));
        }
        ParticleCloud::new(dim, rows.concat())
    }

    /// Number of points `B`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one point
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of point `b`.
    pub fn point(&self, b: usize) -> &[f64] {
        &self.data[b * self.dim..(b + 1) * self.dim]
    }

    /// Iterate over points in index order.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Flat row-major coordinate buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Coordinate-wise sample mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.iter() {
            for (mi, pi) in m.iter_mut().zip(p) {
                *mi += pi;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Coordinate-wise sample variance (denominator `B`).
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut v = vec![0.0; self.dim];
        for p in self.iter() {
            for ((vi, mi), pi) in v.iter_mut().zip(&mean).zip(p) {
                let d = pi - mi;
                *vi += d * d;
            }
        }
        let n = self.len() as f64;
        v.iter_mut().for_each(|x| *x /= n);
        v
    }
}

/// Strictly increasing, non-negative observation/anchor times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::NonMonotoneTimes("empty time grid".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::NonMonotoneTimes(format!("{times:?}")));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneTimes(format!("{times:?}")));
        }
        Ok(TimeGrid { times })
    }

    /// Number of time points `m`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `j`-th time, 0-based.
    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.times
    }

    pub fn first(&self) -> f64 {
        self.times[0]
    }

    pub fn last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Gap `t_{j+1} - t_j` between interior neighbors (0-based `j < m-1`).
    pub fn gap(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }
}

/// Noisy observations: at each grid time, `N` points drawn from fresh
/// process realizations and blurred with additive isotropic Gaussian noise
/// of standard deviation `noise_sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    times: TimeGrid,
    observations: Vec<ParticleCloud>,
    noise_sigma: f64,
}

impl SnapshotDataset {
    pub fn new(times: TimeGrid, observations: Vec<ParticleCloud>, noise_sigma: f64) -> Result<Self> {
        if observations.len() != times.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} snapshots for {} times",
                observations.len(),
                times.len()
            )));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "noise sigma must be non-negative, got {noise_sigma}"
            )));
        }
        let n = observations[0].len();
        let dim = observations[0].dim();
        for (j, obs) in observations.iter().enumerate() {
            if obs.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "snapshot {j} holds {} observations, expected {n} (ragged snapshots rejected)",
                    obs.len()
                )));
            }
            if obs.dim() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "snapshot {j} has dim {}, expected {dim}",
                    obs.dim()
                )));
            }
        }
        Ok(SnapshotDataset { times, observations, noise_sigma })
    }

    /// Number of snapshots `m`.
    pub fn m(&self) -> usize {
        self.observations.len()
    }

    /// Observations per snapshot `N`.
    pub fn n_per_snapshot(&self) -> usize {
        self.observations[0].len()
    }

    pub fn dim(&self) -> usize {
        self.observations[0].dim()
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    /// Observation cloud at snapshot `j` (0-based).
    pub fn snapshot(&self, j: usize) -> &ParticleCloud {
        &self.observations[j]
    }

    pub fn snapshots(&self) -> &[ParticleCloud] {
        &self.observations
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
}

/// A candidate solution: one particle cloud per snapshot time, all sharing
/// the same dimension and particle count.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    times: TimeGrid,
    clouds: Vec<ParticleCloud>,
}

impl FlowState {
    pub fn new(times: TimeGrid, clouds: Vec<ParticleCloud>) -> Result<Self> {
        check_flow_parts(&times, &clouds)?;
        Ok(FlowState { times, clouds })
    }

    /// Number of snapshots `m`.
    pub fn m(&self) -> usize {
        self.clouds.len()
    }

    /// Particles per cloud `B`.
    pub fn b(&self) -> usize {
        self.clouds[0].len()
    }

    pub fn dim(&self) -> usize {
        self.clouds[0].dim()
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times.time(j)
    }

    /// Cloud at snapshot `j` (0-based).
    pub fn cloud(&self, j: usize) -> &ParticleCloud {
        &self.clouds[j]
    }

    pub fn clouds(&self) -> &[ParticleCloud] {
        &self.clouds
    }

    /// New state with cloud `j` replaced (times unchanged).
    pub fn with_cloud(&self, j: usize, cloud: ParticleCloud) -> Result<Self> {
        let mut clouds = self.clouds.clone();
        clouds[j] = cloud;
        FlowState::new(self.times.clone(), clouds)
    }
}

fn check_flow_parts(times: &TimeGrid, clouds: &[ParticleCloud]) -> Result<()> {
    if clouds.is_empty() || clouds.len() != times.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} clouds for {} times",
            clouds.len(),
            times.len()
        )));
    }
    let b = clouds[0].len();
    let dim = clouds[0].dim();
    for (j, c) in clouds.iter().enumerate() {
        if c.len() != b {
            return Err(Error::ShapeMismatch(format!(
                "cloud {j} holds {} particles, expected {b}",
                c.len()
            )));
        }
        if c.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "cloud {j} has dim {}, expected {dim}",
                c.dim()
            )));
        }
    }
    Ok(())
}

/// Re-check every [`FlowState`] invariant (useful after deserialization;
/// construction already enforces them).
pub fn validate_flow_state(state: &FlowState) -> Result<()> {
    // Times were validated by TimeGrid::new and clouds by ParticleCloud::new;
    // re-validate both plus the cross-container shape constraints.
    TimeGrid::new(state.times.as_slice().to_vec())?;
    for c in &state.clouds {
        ParticleCloud::new(c.dim(), c.as_flat().to_vec())?;
    }
    check_flow_parts(&state.times, &state.clouds)
}

/// How the likelihood weight of the final snapshot is chosen: the sum over
/// snapshots weights each by its trailing time gap, which is undefined for
/// the last one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryWeight {
    /// Weight the last snapshot by `T - t_m` (zero when `t_m = T`).
    HorizonTrailing,
    /// Reuse the previous gap: `t_m - t_{m-1}` (falls back to `T - t_1`
    /// when there is a single snapshot).
    ExtendLastGap,
}

/// Estimator parameters: temperature `tau`, likelihood regularization
/// `lambda`, kernel bandwidth `sigma` (matching the data noise), time
/// horizon `T`, and the final-snapshot weight convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub tau: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub boundary: BoundaryWeight,
}

impl EstimatorConfig {
    pub fn new(tau: f64, lambda: f64, sigma: f64, horizon: f64) -> Result<Self> {
        for (name, v) in [("tau", tau), ("lambda", lambda), ("sigma", sigma), ("horizon", horizon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ShapeMismatch(format!(
                    "estimator parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(EstimatorConfig {
            tau,
            lambda,
            sigma,
            horizon,
            boundary: BoundaryWeight::HorizonTrailing,
        })
    }

    pub fn with_boundary(mut self, boundary: BoundaryWeight) -> Self {
        self.boundary = boundary;
        self
    }

    /// Coupling regularization for segment `j -> j+1` (0-based `j`):
    /// `epsilon_j = tau * (t_{j+1} - t_j)`.
    pub fn segment_epsilon(&self, times: &TimeGrid, j: usize) -> f64 {
        self.tau * times.gap(j)
    }

    /// Trailing likelihood weight of snapshot `j` (0-based): the gap to the
    /// next snapshot, with the configured convention at `j = m-1`.
    pub fn trailing_gap(&self, times: &TimeGrid, j: usize) -> f64 {
        let m = times.len();
        if j + 1 < m {
            times.gap(j)
        } else {
            match self.boundary {
                BoundaryWeight::HorizonTrailing => (self.horizon - times.time(j)).max(0.0),
                BoundaryWeight::ExtendLastGap => {
                    if m >= 2 {
                        times.gap(m - 2)
                    } else {
                        (self.horizon - times.time(0)).max(0.0)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 2]]) -> ParticleCloud {
        ParticleCloud::from_rows(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn flow_state_accepts_well_formed_input() {
        let times = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let clouds = vec![cloud(&[[0.0, 0.0]; 10]), cloud(&[[1.0, 0.0]; 10]), cloud(&[[2.0, 0.0]; 10])];
        let state = FlowState::new(times, clouds).unwrap();
        assert_eq!((state.m(), state.b(), state.dim()), (3, 10, 2));
        validate_flow_state(&state).unwrap();
    }

    #[test]
    fn duplicate_time_rejected() {
        let err = TimeGrid::new(vec![0.0, 0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTimes(_)), "got {err:?}");
    }

    #[test]
    fn ragged_particle_count_rejected() {
        let times = TimeGrid::new(vec![0.0, 0.5]).unwrap();
        let clouds = vec![cloud(&[[0.0, 0.0]; 9]), cloud(&[[0.0, 0.0]; 10])];
        let err = FlowState::new(times, clouds).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)), "got {err:?}");
    }

    #[test]
    fn non_finite_coordinate_rejected() {
        let err = ParticleCloud::new(2, vec![0.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteCoordinate(_)), "got {err:?}");
    }

    #[test]
    fn dataset_rejects_ragged_snapshots() {
        let times = TimeGrid::new(vec![0.1, 0.2]).unwrap();
        let err = SnapshotDataset::new(
            times,
            vec![cloud(&[[0.0, 0.0]; 4]), cloud(&[[0.0, 0.0]; 5])],
            0.5,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn trailing_gap_conventions() {
        let times = TimeGrid::new(vec![0.25, 0.5, 1.0]).unwrap();
        let cfg = EstimatorConfig::new(0.5, 0.1, 0.5, 1.25).unwrap();
        assert_eq!(cfg.trailing_gap(&times, 0), 0.25);
        assert_eq!(cfg.trailing_gap(&times, 1), 0.5);
        // Default: horizon-trailing gap T - t_m.
        assert_eq!(cfg.trailing_gap(&times, 2), 0.25);
        // Alternative: reuse the previous gap.
        let cfg = cfg.with_boundary(BoundaryWeight::ExtendLastGap);
        assert_eq!(cfg.trailing_gap(&times, 2), 0.5);
    }

    #[test]
    fn cloud_moments() {
        let c = cloud(&[[0.0, 2.0], [2.0, 4.0]]);
        assert_eq!(c.mean(), vec![1.0, 3.0]);
        assert_eq!(c.variance(), vec![1.0, 1.0]);
    }
}
