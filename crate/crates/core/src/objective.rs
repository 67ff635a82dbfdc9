//! The estimation objective and its coordinate-wise first variation.
//!
//! For a candidate flow `(rho_1, ..., rho_m)` against snapshot data the
//! objective is a sum of three terms:
//!
//! 1. smoothed negative log-likelihood:
//!    `-sum_j (gap_j / (N lambda)) sum_i log[K_sigma * rho_j](X_j^i)`,
//! 2. transport regularity: `sum_{j<m} EOT_{eps_j}(rho_j, rho_{j+1}) / dt_j`
//!    with `eps_j = tau * dt_j`,
//! 3. entropy: `tau * sum_j integral rho_j log rho_j` (estimated from
//!    particles by a nearest-neighbor estimator).
//!
//! [`prepare_state`] solves all segment transport problems once and caches
//! the potentials plus the per-observation likelihood denominators; every
//! downstream evaluation ([`eval_vj`], [`grad_vj`], the objective value)
//! reuses that cache and never re-solves.

use rayon::prelude::*;

use crate::cloud::{EstimatorConfig, FlowState, ParticleCloud, SnapshotDataset};
use crate::eot::{
    self, eot_cost, extend_phi, extend_psi, grad_phi, grad_psi, EotProblem, SchrodingerPotentials,
};
use crate::error::{Error, Result};
use crate::kernel::GaussKernel;

/// Neighbor order of the default entropy estimator.
pub const DEFAULT_ENTROPY_K: usize = 3;

/// Distance floor substituting for coincident points in the entropy
/// estimator.
const ENTROPY_JITTER: f64 = 1e-9;

/// Per-term objective value; `total` is always the exact sum of the parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    pub neg_log_likelihood: f64,
    pub eot_sum: f64,
    pub entropy_sum: f64,
    pub total: f64,
}

/// A [`FlowState`] with everything expensive precomputed: converged
/// segment potentials and the log-domain likelihood denominators
/// `log[K_sigma * rho_j](X_j^i)`.
#[derive(Debug, Clone)]
pub struct StatePotentials {
    state: FlowState,
    sigma: f64,
    epsilons: Vec<f64>,
    segments: Vec<SchrodingerPotentials>,
    log_denoms: Vec<Vec<f64>>,
}

fn check_alignment(state: &FlowState, data: &SnapshotDataset) -> Result<()> {
    if state.times().as_slice() != data.times().as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "state times {:?} do not match data times {:?}",
            state.times().as_slice(),
            data.times().as_slice()
        )));
    }
    if state.dim() != data.dim() {
        return Err(Error::ShapeMismatch(format!(
            "state dim {} does not match data dim {}",
            state.dim(),
            data.dim()
        )));
    }
    Ok(())
}

/// Solve all `m-1` segment transport problems and precompute likelihood
/// denominators. The only function in this module that runs Sinkhorn.
pub fn prepare_state(
    state: &FlowState,
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    eot_tol: f64,
    max_iter: usize,
) -> Result<StatePotentials> {
    check_alignment(state, data)?;
    let kernel = GaussKernel::new(cfg.sigma, state.dim())?;
    let log_denoms: Vec<Vec<f64>> = (0..state.m())
        .map(|j| {
            let cloud = state.cloud(j);
            let obs = data.snapshot(j);
            (0..obs.len()).map(|i| kernel.log_convolve_at(cloud, obs.point(i))).collect()
        })
        .collect();
    let mut epsilons = Vec::with_capacity(state.m().saturating_sub(1));
    let mut segments = Vec::with_capacity(state.m().saturating_sub(1));
    for j in 0..state.m().saturating_sub(1) {
        let eps = cfg.segment_epsilon(state.times(), j);
        let problem = EotProblem::new(state.cloud(j), state.cloud(j + 1), eps)?;
        segments.push(eot::sinkhorn(&problem, eot_tol, max_iter)?);
        epsilons.push(eps);
    }
    Ok(StatePotentials { state: state.clone(), sigma: cfg.sigma, epsilons, segments, log_denoms })
}

impl StatePotentials {
    pub fn state(&self) -> &FlowState {
        &self.state
    }

    /// Converged potentials of segment `j -> j+1` (0-based, `j < m-1`).
    pub fn segment(&self, j: usize) -> &SchrodingerPotentials {
        &self.segments[j]
    }

    /// `log[K_sigma * rho_j](X_j^i)` for every observation `i`.
    pub fn log_denoms(&self, j: usize) -> &[f64] {
        &self.log_denoms[j]
    }

    /// Same transport potentials, substituted likelihood denominators.
    /// Lets a caller whose clouds move every step keep the likelihood
    /// gradient exact while the (expensive) potentials refresh lazily.
    pub(crate) fn with_log_denoms(&self, log_denoms: Vec<Vec<f64>>) -> StatePotentials {
        debug_assert_eq!(log_denoms.len(), self.log_denoms.len());
        StatePotentials { log_denoms, ..self.clone() }
    }

    /// Transport problem of segment `j` (clouds borrowed from the stored
    /// state; no solving involved).
    pub fn segment_problem(&self, j: usize) -> EotProblem<'_> {
        EotProblem::new(self.state.cloud(j), self.state.cloud(j + 1), self.epsilons[j])
            .expect("stored state was validated at preparation")
    }

    fn check_adjacent_fresh(&self, j: usize) -> Result<()> {
        let m = self.state.m();
        for seg in [j.checked_sub(1), if j + 1 < m { Some(j) } else { None }].into_iter().flatten() {
            let pots = &self.segments[seg];
            if pots.marginal_residual() > 10.0 * pots.tol() {
                return Err(Error::StalePotentials {
                    residual: pots.marginal_residual(),
                    tol: pots.tol(),
                });
            }
        }
        Ok(())
    }

    /// Full objective value using the cached potentials.
    pub fn objective(
        &self,
        data: &SnapshotDataset,
        cfg: &EstimatorConfig,
        entropy_k: usize,
    ) -> Result<ObjectiveBreakdown> {
        check_alignment(&self.state, data)?;
        let times = self.state.times();
        let n = data.n_per_snapshot() as f64;

        let mut nll = 0.0;
        for j in 0..self.state.m() {
            let weight = cfg.trailing_gap(times, j) / (n * cfg.lambda);
            nll -= weight * self.log_denoms[j].iter().sum::<f64>();
        }

        let mut eot_sum = 0.0;
        for j in 0..self.segments.len() {
            let problem = self.segment_problem(j);
            eot_sum += eot_cost(&problem, &self.segments[j])? / times.gap(j);
        }

        let mut entropy_sum = 0.0;
        for j in 0..self.state.m() {
            let cloud = self.state.cloud(j);
            if cloud.len() > entropy_k {
                entropy_sum += cfg.tau * entropy_knn(cloud, entropy_k)?;
            }
            // Clouds too small for the estimator contribute nothing; the
            // entropy term only feeds reported values, never gradients.
        }

        let total = nll + eot_sum + entropy_sum;
        Ok(ObjectiveBreakdown { neg_log_likelihood: nll, eot_sum, entropy_sum, total })
    }
}

/// Convenience wrapper: prepare the state, then evaluate the objective.
pub fn eval_objective(
    state: &FlowState,
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    eot_tol: f64,
) -> Result<ObjectiveBreakdown> {
    prepare_state(state, data, cfg, eot_tol, eot::DEFAULT_MAX_ITER)?
        .objective(data, cfg, DEFAULT_ENTROPY_K)
}

/// Coordinate potential
/// `V_j(y) = -(gap_j / (N lambda)) sum_i K_sigma(X_i - y) / [K_sigma * rho_j](X_i)
///           + phi_{j,j+1}(y) / dt_j + psi_{j-1,j}(y) / dt_{j-1}`,
/// with the missing transport term dropped at each boundary.
pub fn eval_vj(
    prepared: &StatePotentials,
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    j: usize,
    y: &[f64],
) -> Result<f64> {
    check_alignment(prepared.state(), data)?;
    prepared.check_adjacent_fresh(j)?;
    let times = prepared.state().times();
    let kernel = GaussKernel::new(prepared.sigma, prepared.state().dim())?;
    let obs = data.snapshot(j);
    let mut diff = vec![0.0; y.len()];

    let mut likelihood = 0.0;
    for (i, x) in obs.iter().enumerate() {
        for ((d, xc), yc) in diff.iter_mut().zip(x).zip(y) {
            *d = xc - yc;
        }
        likelihood += (kernel.log_eval(&diff) - prepared.log_denoms[j][i]).exp();
    }
    let weight = cfg.trailing_gap(times, j) / (data.n_per_snapshot() as f64 * cfg.lambda);
    let mut value = -weight * likelihood;

    if j + 1 < prepared.state().m() {
        let problem = prepared.segment_problem(j);
        value += extend_phi(&problem, &prepared.segments[j], y) / times.gap(j);
    }
    if j > 0 {
        let problem = prepared.segment_problem(j - 1);
        value += extend_psi(&problem, &prepared.segments[j - 1], y) / times.gap(j - 1);
    }
    Ok(value)
}

/// Analytic gradient of [`eval_vj`] with respect to `y`.
pub fn grad_vj(
    prepared: &StatePotentials,
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    j: usize,
    y: &[f64],
) -> Result<Vec<f64>> {
    check_alignment(prepared.state(), data)?;
    prepared.check_adjacent_fresh(j)?;
    let times = prepared.state().times();
    let kernel = GaussKernel::new(prepared.sigma, prepared.state().dim())?;
    let obs = data.snapshot(j);
    let s2 = prepared.sigma * prepared.sigma;
    let weight = cfg.trailing_gap(times, j) / (data.n_per_snapshot() as f64 * cfg.lambda);

    // d/dy K_sigma(X - y) = K_sigma(X - y) * (X - y) / sigma^2.
    let mut grad = vec![0.0; y.len()];
    let mut diff = vec![0.0; y.len()];
    for (i, x) in obs.iter().enumerate() {
        for ((d, xc), yc) in diff.iter_mut().zip(x).zip(y) {
            *d = xc - yc;
        }
        let ratio = (kernel.log_eval(&diff) - prepared.log_denoms[j][i]).exp();
        for (g, d) in grad.iter_mut().zip(&diff) {
            *g -= weight * ratio * d / s2;
        }
    }

    if j + 1 < prepared.state().m() {
        let problem = prepared.segment_problem(j);
        let g = grad_phi(&problem, &prepared.segments[j], y);
        let dt = times.gap(j);
        for (acc, gc) in grad.iter_mut().zip(&g) {
            *acc += gc / dt;
        }
    }
    if j > 0 {
        let problem = prepared.segment_problem(j - 1);
        let g = grad_psi(&problem, &prepared.segments[j - 1], y);
        let dt = times.gap(j - 1);
        for (acc, gc) in grad.iter_mut().zip(&g) {
            *acc += gc / dt;
        }
    }
    Ok(grad)
}

fn digamma_int(n: usize) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut h = 0.0;
    for i in 1..n {
        h += 1.0 / i as f64;
    }
    h - EULER_GAMMA
}

fn ln_unit_ball_volume(d: usize) -> f64 {
    // V_d = pi^{d/2} / Gamma(d/2 + 1).
    let half_pi_pow = 0.5 * d as f64 * std::f64::consts::PI.ln();
    let ln_gamma = if d % 2 == 0 {
        // Gamma(d/2 + 1) = (d/2)!
        (1..=d / 2).map(|k| (k as f64).ln()).sum::<f64>()
    } else {
        // Gamma(n + 1/2) = sqrt(pi) * prod_{i=1..n} (i - 1/2), n = (d+1)/2.
        0.5 * std::f64::consts::PI.ln()
            + (1..=(d + 1) / 2).map(|i| (i as f64 - 0.5).ln()).sum::<f64>()
    };
    half_pi_pow - ln_gamma
}

/// Nearest-neighbor estimate of `integral rho log rho` (the negative
/// differential entropy): `-(psi(B) - psi(k) + ln V_d + (d/B) sum_b ln e_b)`
/// with `e_b` the distance from point `b` to its `k`-th nearest neighbor.
/// Coincident points are floored to a tiny jitter distance; the cloud is
/// rejected as degenerate if more than 10% of points need the floor.
pub fn entropy_knn(cloud: &ParticleCloud, k: usize) -> Result<f64> {
    let b = cloud.len();
    if k == 0 || b <= k {
        return Err(Error::InsufficientPoints(format!(
            "entropy estimator needs more than k={k} points, got {b}"
        )));
    }
    let d = cloud.dim();
    let knn_dists: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let mut dists: Vec<f64> = (0..b)
                .filter(|&o| o != i)
                .map(|o| crate::vecmath::dist_sq(p, cloud.point(o)))
                .collect();
            let (_, kth, _) =
                dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
            kth.sqrt()
        })
        .collect();
    let floored = knn_dists.iter().filter(|&&e| e < ENTROPY_JITTER).count();
    if floored * 10 > b {
        return Err(Error::DegenerateCloud(format!(
            "{floored} of {b} points coincide with their {k}-th neighbor"
        )));
    }
    let sum_log: f64 = knn_dists.iter().map(|e| e.max(ENTROPY_JITTER).ln()).sum();
    let entropy = digamma_int(b) - digamma_int(k)
        + ln_unit_ball_volume(d)
        + d as f64 / b as f64 * sum_log;
    Ok(-entropy)
}
