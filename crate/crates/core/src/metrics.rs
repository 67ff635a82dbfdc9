//! Error metrics: squared Hellinger distances on regular grids, power-law
//! rate fits, and an energy-distance two-sample test.
//!
//! The grid value of a fitted cloud is its kernel-smoothed density at the
//! cell centers, so fitted clouds and reference densities are compared on
//! identical footing. All grid comparisons insist the grid actually carries
//! the mass: a box that clips more than 2% of either density refuses to
//! report a number rather than report a silently-too-small one.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::cloud::{FlowState, ParticleCloud};
use crate::error::{Error, Result};
use crate::kernel::GaussKernel;
use crate::rng::{tags, RngStream};

/// Cells per axis used when no explicit grid is given.
pub const DEFAULT_CELLS_PER_AXIS: usize = 200;
/// Bounding boxes pad the data hull by this many kernel bandwidths.
pub const DEFAULT_PADDING_SIGMAS: f64 = 6.0;
/// Largest tolerated clipped mass fraction.
const COVERAGE_SLACK: f64 = 0.02;

/// A regular box grid in 1 or 2 dimensions; cells are addressed row-major
/// with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d > 2 {
            return Err(Error::ShapeMismatch(format!(
                "grid metrics support 1 or 2 dimensions, got {d}"
            )));
        }
        if hi.len() != d || cells.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "grid bounds/cells of lengths {}, {}, {}",
                lo.len(),
                hi.len(),
                cells.len()
            )));
        }
        for c in 0..d {
            if !(lo[c].is_finite() && hi[c].is_finite() && lo[c] < hi[c]) {
                return Err(Error::ShapeMismatch(format!(
                    "grid axis {c} spans [{}, {}]",
                    lo[c], hi[c]
                )));
            }
            if cells[c] == 0 {
                return Err(Error::ShapeMismatch(format!("grid axis {c} has zero cells")));
            }
        }
        Ok(GridSpec { lo, hi, cells })
    }

    /// Axis-aligned bounding box of the given clouds, padded by
    /// `padding * sigma` on every side, with `cells_per_axis` cells per axis.
    pub fn bounding(
        clouds: &[&ParticleCloud],
        sigma: f64,
        padding: f64,
        cells_per_axis: usize,
    ) -> Result<Self> {
        let first = clouds.first().ok_or_else(|| {
            Error::ShapeMismatch("bounding box needs at least one cloud".into())
        })?;
        let d = first.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for cloud in clouds {
            if cloud.dim() != d {
                return Err(Error::ShapeMismatch(format!(
                    "bounding box over dims {d} and {}",
                    cloud.dim()
                )));
            }
            for p in cloud.iter() {
                for c in 0..d {
                    lo[c] = lo[c].min(p[c]);
                    hi[c] = hi[c].max(p[c]);
                }
            }
        }
        let pad = padding * sigma;
        for c in 0..d {
            lo[c] -= pad;
            hi[c] += pad;
        }
        GridSpec::new(lo, hi, vec![cells_per_axis; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim())
            .map(|c| (self.hi[c] - self.lo[c]) / self.cells[c] as f64)
            .product()
    }

    /// Center of the `flat`-th cell.
    pub fn center(&self, flat: usize) -> Vec<f64> {
        debug_assert!(flat < self.n_cells());
        let idx: Vec<usize> = match self.dim() {
            1 => vec![flat],
            _ => vec![flat / self.cells[1], flat % self.cells[1]],
        };
        (0..self.dim())
            .map(|c| {
                let step = (self.hi[c] - self.lo[c]) / self.cells[c] as f64;
                self.lo[c] + (idx[c] as f64 + 0.5) * step
            })
            .collect()
    }
}

/// Density values at the cell centers of a [`GridSpec`].
#[derive(Debug, Clone)]
pub struct GridDensity {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n_cells() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                spec.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::ShapeMismatch("grid densities must be finite and non-negative".into()));
        }
        Ok(GridDensity { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total probability mass the grid captures (midpoint rule).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }

    /// Refuse densities whose grid clips more than 2% of the mass.
    pub fn check_coverage(&self) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() > COVERAGE_SLACK {
            return Err(Error::CoverageError { mass });
        }
        Ok(())
    }
}

/// Kernel-smoothed density of a particle cloud at the cell centers.
pub fn smooth_to_grid(cloud: &ParticleCloud, sigma: f64, spec: &GridSpec) -> Result<GridDensity> {
    if cloud.dim() != spec.dim() {
        return Err(Error::ShapeMismatch(format!(
            "cloud of dim {} on a grid of dim {}",
            cloud.dim(),
            spec.dim()
        )));
    }
    let kernel = GaussKernel::new(sigma, cloud.dim())?;
    let values: Vec<f64> = (0..spec.n_cells())
        .into_par_iter()
        .map(|flat| kernel.convolve_at(cloud, &spec.center(flat)))
        .collect();
    GridDensity::new(spec.clone(), values)
}

/// Isotropic Gaussian reference density `N(mean, (variance + noise_sigma^2) I)`
/// at the cell centers. The extra term folds the observation-noise kernel
/// into the reference, matching what the estimator actually sees.
pub fn gaussian_oracle_density(
    spec: &GridSpec,
    mean: &[f64],
    variance: f64,
    noise_sigma: f64,
) -> Result<GridDensity> {
    if mean.len() != spec.dim() {
        return Err(Error::ShapeMismatch(format!(
            "oracle mean of dim {} on a grid of dim {}",
            mean.len(),
            spec.dim()
        )));
    }
    let total_var = variance + noise_sigma * noise_sigma;
    if !(total_var > 0.0 && total_var.is_finite()) {
        return Err(Error::ShapeMismatch(format!(
            "oracle needs positive total variance, got {total_var}"
        )));
    }
    let kernel = GaussKernel::new(total_var.sqrt(), spec.dim())?;
    let values: Vec<f64> = (0..spec.n_cells())
        .map(|flat| {
            let c = spec.center(flat);
            let diff: Vec<f64> = c.iter().zip(mean).map(|(a, b)| a - b).collect();
            kernel.eval(&diff)
        })
        .collect();
    GridDensity::new(spec.clone(), values)
}

/// Unnormalized squared Hellinger distance
/// `integral (sqrt(p) - sqrt(q))^2 dx` on the shared grid (ranges over
/// `[0, 2]`; Gaussian references admit closed forms for testing).
pub fn hellinger_sq(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::GridMismatch(
            "densities live on different grids; compare on one shared spec".into(),
        ));
    }
    a.check_coverage()?;
    b.check_coverage()?;
    let vol = a.spec.cell_volume();
    let sum: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| {
            let diff = p.sqrt() - q.sqrt();
            diff * diff
        })
        .sum();
    Ok(sum * vol)
}

/// Mean squared Hellinger error of a fitted state against one reference
/// density per snapshot (each on its own grid).
pub fn time_averaged_error(
    state: &FlowState,
    sigma: f64,
    references: &[GridDensity],
) -> Result<f64> {
    if references.len() != state.m() {
        return Err(Error::ShapeMismatch(format!(
            "{} reference densities for {} snapshots",
            references.len(),
            state.m()
        )));
    }
    let mut total = 0.0;
    for (j, reference) in references.iter().enumerate() {
        let smoothed = smooth_to_grid(state.cloud(j), sigma, &reference.spec)?;
        total += hellinger_sq(&smoothed, reference)?;
    }
    Ok(total / state.m() as f64)
}

/// Least-squares slope of `ln(error)` against `ln(size)`: the exponent of
/// the best-fit power law `error ~ size^slope`.
pub fn rate_slope(sizes: &[f64], errors: &[f64]) -> Result<f64> {
    if sizes.len() != errors.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sizes against {} errors",
            sizes.len(),
            errors.len()
        )));
    }
    if sizes.len() < 3 {
        return Err(Error::InsufficientPoints(format!(
            "power-law fit needs at least 3 points, got {}",
            sizes.len()
        )));
    }
    for (&x, &y) in sizes.iter().zip(errors) {
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "power-law fit needs positive finite points, got ({x}, {y})"
            )));
        }
    }
    let n = sizes.len() as f64;
    let lx: Vec<f64> = sizes.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::ShapeMismatch("power-law fit needs at least two distinct sizes".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

fn pairwise_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    d
}

fn energy_stat(dists: &[f64], n_total: usize, first: &[usize], second: &[usize]) -> f64 {
    let mut cross = 0.0;
    for &i in first {
        for &j in second {
            cross += dists[i * n_total + j];
        }
    }
    let within = |idx: &[usize]| {
        let mut s = 0.0;
        for &i in idx {
            for &j in idx {
                s += dists[i * n_total + j];
            }
        }
        s / (idx.len() * idx.len()) as f64
    };
    2.0 * cross / (first.len() * second.len()) as f64 - within(first) - within(second)
}

/// Energy distance `2 E|X-Y| - E|X-X'| - E|Y-Y'|` between two clouds
/// (V-statistic over all pairs; zero iff the clouds coincide as point sets).
pub fn energy_distance(a: &ParticleCloud, b: &ParticleCloud) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "energy distance between dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let points: Vec<Vec<f64>> = a.iter().chain(b.iter()).map(|p| p.to_vec()).collect();
    let dists = pairwise_distances(&points);
    let first: Vec<usize> = (0..a.len()).collect();
    let second: Vec<usize> = (a.len()..points.len()).collect();
    Ok(energy_stat(&dists, points.len(), &first, &second))
}

/// Permutation p-value for the null "both clouds are draws from one
/// distribution", using the energy distance as the statistic. Add-one
/// smoothed: the smallest reachable value is `1/(n_permutations + 1)`.
pub fn energy_permutation_pvalue(
    a: &ParticleCloud,
    b: &ParticleCloud,
    n_permutations: usize,
    rng: RngStream,
) -> Result<f64> {
    if n_permutations == 0 {
        return Err(Error::ShapeMismatch("permutation test needs at least one permutation".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "permutation test between dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let points: Vec<Vec<f64>> = a.iter().chain(b.iter()).map(|p| p.to_vec()).collect();
    let n_total = points.len();
    let dists = pairwise_distances(&points);
    let first: Vec<usize> = (0..a.len()).collect();
    let second: Vec<usize> = (a.len()..n_total).collect();
    let observed = energy_stat(&dists, n_total, &first, &second);

    let base = rng.derive(tags::PERMUTE);
    let exceed: usize = (0..n_permutations)
        .into_par_iter()
        .map(|p| {
            let mut r = base.derive(p as u64).rng();
            let mut idx: Vec<usize> = (0..n_total).collect();
            idx.shuffle(&mut r);
            let stat = energy_stat(&dists, n_total, &idx[..a.len()], &idx[a.len()..]);
            usize::from(stat >= observed)
        })
        .sum();
    Ok((1 + exceed) as f64 / (n_permutations + 1) as f64)
}
