//! Entropic optimal transport between two particle clouds.
//!
//! Solves the discrete dual system with a log-domain Sinkhorn iteration:
//! the coupling `gamma_ij = exp((phi_i + psi_j - c_ij)/eps) / (B_mu B_nu)`
//! must have uniform marginals. Also provides the transport cost (dual
//! value), out-of-sample potential extensions and their gradients, and
//! coupling samplers — everything downstream potential fields need.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};
use crate::rng::{tags, RngStream};
use crate::vecmath::{dist_sq, log_sum_exp};

/// Marginal-residual tolerance used when callers do not override it.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Iteration cap used when callers do not override it.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Ground cost between atoms; both variants share `grad_x c = x - y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EotCost {
    /// `|x-y|^2/2 + (eps*d/2) log(2*pi*eps)`: the negative log of the
    /// Gaussian transition density with variance `eps`, scaled by `eps`.
    /// The additive constant is retained so reported objective values
    /// include it.
    GaussianNegLog,
    /// Plain `|x-y|^2/2` (no `eps`-dependent constant).
    HalfSqEuclidean,
}

/// One transport instance: two clouds, a regularization strength, a cost.
#[derive(Debug, Clone, Copy)]
pub struct EotProblem<'a> {
    mu: &'a ParticleCloud,
    nu: &'a ParticleCloud,
    epsilon: f64,
    cost: EotCost,
}

impl<'a> EotProblem<'a> {
    pub fn new(mu: &'a ParticleCloud, nu: &'a ParticleCloud, epsilon: f64) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::ShapeMismatch(format!(
                "transport between dims {} and {}",
                mu.dim(),
                nu.dim()
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "transport regularization must be positive, got {epsilon}"
            )));
        }
        Ok(EotProblem { mu, nu, epsilon, cost: EotCost::GaussianNegLog })
    }

    pub fn with_cost(mut self, cost: EotCost) -> Self {
        self.cost = cost;
        self
    }

    pub fn mu(&self) -> &ParticleCloud {
        self.mu
    }

    pub fn nu(&self) -> &ParticleCloud {
        self.nu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The `eps`-dependent additive constant of the cost (0 for the plain
    /// quadratic variant).
    pub fn cost_constant(&self) -> f64 {
        match self.cost {
            EotCost::GaussianNegLog => {
                let d = self.mu.dim() as f64;
                0.5 * self.epsilon * d * (2.0 * std::f64::consts::PI * self.epsilon).ln()
            }
            EotCost::HalfSqEuclidean => 0.0,
        }
    }

    pub fn cost_at(&self, x: &[f64], y: &[f64]) -> f64 {
        0.5 * dist_sq(x, y) + self.cost_constant()
    }

    fn cost_matrix(&self) -> Vec<f64> {
        let c0 = self.cost_constant();
        let mut c = Vec::with_capacity(self.mu.len() * self.nu.len());
        for x in self.mu.iter() {
            for y in self.nu.iter() {
                c.push(0.5 * dist_sq(x, y) + c0);
            }
        }
        c
    }
}

/// Converged dual potentials, gauge-fixed so `sum_i phi_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerPotentials {
    phi: Vec<f64>,
    psi: Vec<f64>,
    epsilon: f64,
    marginal_residual: f64,
    iterations: usize,
    tol: f64,
}

impl SchrodingerPotentials {
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Worst per-atom deviation of the induced coupling's marginals from
    /// the uniform weights.
    pub fn marginal_residual(&self) -> f64 {
        self.marginal_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Gauge transform `phi + c, psi - c`: mathematically a no-op for every
    /// derived quantity.
    pub fn shifted(&self, c: f64) -> Self {
        SchrodingerPotentials {
            phi: self.phi.iter().map(|v| v + c).collect(),
            psi: self.psi.iter().map(|v| v - c).collect(),
            ..self.clone()
        }
    }

    /// Error out when the stored residual is too large to trust these
    /// potentials (more than ten times the tolerance they were solved to).
    pub fn check_fresh(&self) -> Result<()> {
        if self.marginal_residual > 10.0 * self.tol {
            return Err(Error::StalePotentials { residual: self.marginal_residual, tol: self.tol });
        }
        Ok(())
    }
}

fn check_shapes(problem: &EotProblem, pots: &SchrodingerPotentials) -> Result<()> {
    if pots.phi.len() != problem.mu.len() || pots.psi.len() != problem.nu.len() {
        return Err(Error::ShapeMismatch(format!(
            "potentials sized ({}, {}) for clouds sized ({}, {})",
            pots.phi.len(),
            pots.psi.len(),
            problem.mu.len(),
            problem.nu.len()
        )));
    }
    Ok(())
}

static SOLVES: AtomicU64 = AtomicU64::new(0);

/// Process-wide count of [`sinkhorn`] invocations. Lets tests assert that
/// cached potentials are reused instead of silently re-solved.
pub fn solve_count() -> u64 {
    SOLVES.load(Ordering::Relaxed)
}

/// Log-domain Sinkhorn. Each sweep refreshes `psi` from `phi`, then `phi`
/// from `psi` (so the stored `phi` is exactly the extension formula
/// evaluated at the atoms), then measures the marginal residual of the
/// induced coupling.
pub fn sinkhorn(problem: &EotProblem, tol: f64, max_iter: usize) -> Result<SchrodingerPotentials> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::ShapeMismatch(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::ShapeMismatch("need at least one iteration".into()));
    }
    SOLVES.fetch_add(1, Ordering::Relaxed);
    let (b_mu, b_nu) = (problem.mu.len(), problem.nu.len());
    let eps = problem.epsilon;
    let cost = problem.cost_matrix(); // row-major: cost[i * b_nu + j]
    let ln_b_mu = (b_mu as f64).ln();
    let ln_b_nu = (b_nu as f64).ln();

    let mut phi = vec![0.0; b_mu];
    let mut psi = vec![0.0; b_nu];
    let mut scratch_col = vec![0.0; b_mu];
    let mut scratch_row = vec![0.0; b_nu];
    let mut residual = f64::INFINITY;

    for it in 1..=max_iter {
        // psi_j = -eps * [LSE_i((phi_i - c_ij)/eps) - ln B_mu]: column sums exact.
        for j in 0..b_nu {
            for i in 0..b_mu {
                scratch_col[i] = (phi[i] - cost[i * b_nu + j]) / eps;
            }
            psi[j] = -eps * (log_sum_exp(&scratch_col) - ln_b_mu);
        }
        // phi_i = -eps * [LSE_j((psi_j - c_ij)/eps) - ln B_nu]: row sums exact.
        for i in 0..b_mu {
            let row = &cost[i * b_nu..(i + 1) * b_nu];
            for j in 0..b_nu {
                scratch_row[j] = (psi[j] - row[j]) / eps;
            }
            phi[i] = -eps * (log_sum_exp(&scratch_row) - ln_b_nu);
        }
        // Residual: columns moved by the phi refresh; rows are exact.
        let mut worst = 0.0f64;
        for j in 0..b_nu {
            let mut col = 0.0;
            for i in 0..b_mu {
                col += ((phi[i] + psi[j] - cost[i * b_nu + j]) / eps).exp();
            }
            worst = worst.max((col / (b_mu as f64 * b_nu as f64) - 1.0 / b_nu as f64).abs());
        }
        residual = worst;
        if residual <= tol {
            // Gauge: move the mean of phi into psi.
            let shift = phi.iter().sum::<f64>() / b_mu as f64;
            phi.iter_mut().for_each(|v| *v -= shift);
            psi.iter_mut().for_each(|v| *v += shift);
            return Ok(SchrodingerPotentials {
                phi,
                psi,
                epsilon: eps,
                marginal_residual: residual,
                iterations: it,
                tol,
            });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Converged dual value `mean(phi) + mean(psi)`, which equals the primal
/// transport cost at the optimum.
pub fn eot_cost(problem: &EotProblem, pots: &SchrodingerPotentials) -> Result<f64> {
    check_shapes(problem, pots)?;
    pots.check_fresh()?;
    let mean_phi = pots.phi.iter().sum::<f64>() / pots.phi.len() as f64;
    let mean_psi = pots.psi.iter().sum::<f64>() / pots.psi.len() as f64;
    Ok(mean_phi + mean_psi)
}

/// Induced coupling, normalized to total mass 1 (row-major over `mu` atoms).
pub fn coupling_matrix(problem: &EotProblem, pots: &SchrodingerPotentials) -> Result<Vec<f64>> {
    check_shapes(problem, pots)?;
    let (b_mu, b_nu) = (problem.mu.len(), problem.nu.len());
    let eps = problem.epsilon;
    let mut gamma = Vec::with_capacity(b_mu * b_nu);
    for (i, x) in problem.mu.iter().enumerate() {
        for (j, y) in problem.nu.iter().enumerate() {
            gamma.push(((pots.phi[i] + pots.psi[j] - problem.cost_at(x, y)) / eps).exp());
        }
    }
    let total: f64 = gamma.iter().sum();
    gamma.iter_mut().for_each(|g| *g /= total);
    Ok(gamma)
}

/// Primal value at the induced (normalized) coupling:
/// `sum gamma c + eps * KL(gamma | mu (x) nu)`.
pub fn primal_cost(problem: &EotProblem, pots: &SchrodingerPotentials) -> Result<f64> {
    let gamma = coupling_matrix(problem, pots)?;
    let (b_mu, b_nu) = (problem.mu.len(), problem.nu.len());
    let log_ref = (b_mu as f64 * b_nu as f64).ln();
    let mut transport = 0.0;
    let mut kl = 0.0;
    for (i, x) in problem.mu.iter().enumerate() {
        for (j, y) in problem.nu.iter().enumerate() {
            let g = gamma[i * b_nu + j];
            if g > 0.0 {
                transport += g * problem.cost_at(x, y);
                kl += g * (g.ln() + log_ref);
            }
        }
    }
    Ok(transport + problem.epsilon * kl)
}

/// Out-of-sample extension of `phi`:
/// `phi(q) = -eps * [LSE_j((psi_j - c(q, y_j))/eps) - ln B_nu]`.
pub fn extend_phi(problem: &EotProblem, pots: &SchrodingerPotentials, query: &[f64]) -> f64 {
    let eps = problem.epsilon;
    let terms: Vec<f64> = problem
        .nu
        .iter()
        .zip(&pots.psi)
        .map(|(y, psi)| (psi - problem.cost_at(query, y)) / eps)
        .collect();
    -eps * (log_sum_exp(&terms) - (problem.nu.len() as f64).ln())
}

/// Out-of-sample extension of `psi` (roles of the clouds swapped).
pub fn extend_psi(problem: &EotProblem, pots: &SchrodingerPotentials, query: &[f64]) -> f64 {
    let eps = problem.epsilon;
    let terms: Vec<f64> = problem
        .mu
        .iter()
        .zip(&pots.phi)
        .map(|(x, phi)| (phi - problem.cost_at(x, query)) / eps)
        .collect();
    -eps * (log_sum_exp(&terms) - (problem.mu.len() as f64).ln())
}

fn softmax_weights(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Gradient of [`extend_phi`]: the softmax-weighted average of
/// `grad_x c(q, y_j) = q - y_j`.
pub fn grad_phi(problem: &EotProblem, pots: &SchrodingerPotentials, query: &[f64]) -> Vec<f64> {
    let eps = problem.epsilon;
    let logits: Vec<f64> = problem
        .nu
        .iter()
        .zip(&pots.psi)
        .map(|(y, psi)| (psi - problem.cost_at(query, y)) / eps)
        .collect();
    let w = softmax_weights(&logits);
    let mut g = vec![0.0; query.len()];
    for (y, wj) in problem.nu.iter().zip(&w) {
        for ((gc, qc), yc) in g.iter_mut().zip(query).zip(y) {
            *gc += wj * (qc - yc);
        }
    }
    g
}

/// Gradient of [`extend_psi`] with respect to the query point.
pub fn grad_psi(problem: &EotProblem, pots: &SchrodingerPotentials, query: &[f64]) -> Vec<f64> {
    let eps = problem.epsilon;
    let logits: Vec<f64> = problem
        .mu
        .iter()
        .zip(&pots.phi)
        .map(|(x, phi)| (phi - problem.cost_at(x, query)) / eps)
        .collect();
    let w = softmax_weights(&logits);
    let mut g = vec![0.0; query.len()];
    for (x, wi) in problem.mu.iter().zip(&w) {
        for ((gc, qc), xc) in g.iter_mut().zip(query).zip(x) {
            *gc += wi * (qc - xc);
        }
    }
    g
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cum = Vec::with_capacity(probs.len());
    for p in probs {
        acc += p;
        cum.push(acc);
    }
    if let Some(last) = cum.last_mut() {
        *last = f64::INFINITY; // guard against rounding at the top end
    }
    cum
}

fn draw_index(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

/// Conditional distribution over `nu` atoms given `mu` atom `i` (row `i`
/// of the coupling, normalized).
pub fn conditional_row(problem: &EotProblem, pots: &SchrodingerPotentials, i: usize) -> Vec<f64> {
    let eps = problem.epsilon;
    let x = problem.mu.point(i);
    let logits: Vec<f64> = problem
        .nu
        .iter()
        .zip(&pots.psi)
        .map(|(y, psi)| (psi - problem.cost_at(x, y)) / eps)
        .collect();
    softmax_weights(&logits)
}

/// `count` i.i.d. atom-index pairs from the induced coupling.
pub fn sample_coupling(
    problem: &EotProblem,
    pots: &SchrodingerPotentials,
    count: usize,
    rng: RngStream,
) -> Result<Vec<(usize, usize)>> {
    let gamma = coupling_matrix(problem, pots)?;
    let cum = cumulative(&gamma);
    let b_nu = problem.nu.len();
    let mut r = rng.derive(tags::COUPLING).rng();
    Ok((0..count)
        .map(|_| {
            let flat = draw_index(&cum, r.gen::<f64>());
            (flat / b_nu, flat % b_nu)
        })
        .collect())
}

/// One draw `j ~ gamma(. | i)` using the caller's generator.
pub fn sample_conditional(
    problem: &EotProblem,
    pots: &SchrodingerPotentials,
    i: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let row = conditional_row(problem, pots, i);
    draw_index(&cumulative(&row), rng.gen::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cloud1(points: &[f64]) -> ParticleCloud {
        ParticleCloud::new(1, points.to_vec()).unwrap()
    }

    fn random_cloud(n: usize, dim: usize, seed: u64, scale: f64) -> ParticleCloud {
        let mut rng = RngStream::new(seed).rng();
        let data: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>() * scale).collect();
        ParticleCloud::new(dim, data).unwrap()
    }

    #[test]
    fn single_pair_is_forced() {
        let mu = cloud1(&[0.3]);
        let nu = cloud1(&[-1.2]);
        let p = EotProblem::new(&mu, &nu, 0.25).unwrap();
        let pots = sinkhorn(&p, 1e-10, 100).unwrap();
        let c = p.cost_at(&[0.3], &[-1.2]);
        assert_abs_diff_eq!(pots.phi()[0] + pots.psi()[0], c, epsilon = 1e-12);
        assert_eq!(pots.phi()[0], 0.0); // gauge
        assert_abs_diff_eq!(eot_cost(&p, &pots).unwrap(), c, epsilon = 1e-12);
        let gamma = coupling_matrix(&p, &pots).unwrap();
        assert_abs_diff_eq!(gamma[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn huge_epsilon_gives_product_coupling() {
        let mu = cloud1(&[0.0, 1.0]);
        let nu = cloud1(&[0.0, 1.0]);
        let p = EotProblem::new(&mu, &nu, 1e6).unwrap().with_cost(EotCost::HalfSqEuclidean);
        let pots = sinkhorn(&p, 1e-12, 1000).unwrap();
        let gamma = coupling_matrix(&p, &pots).unwrap();
        for g in gamma {
            assert_abs_diff_eq!(g, 0.25, epsilon = 1e-3);
        }
    }

    #[test]
    fn primal_dual_gap_closes() {
        let mu = random_cloud(50, 2, 1, 1.0);
        let nu = random_cloud(50, 2, 2, 1.0);
        let p = EotProblem::new(&mu, &nu, 0.1).unwrap();
        let pots = sinkhorn(&p, 1e-9, DEFAULT_MAX_ITER).unwrap();
        assert!(pots.marginal_residual() <= 1e-9);
        let dual = eot_cost(&p, &pots).unwrap();
        let primal = primal_cost(&p, &pots).unwrap();
        assert!(
            (dual - primal).abs() <= 1e-7 * (1.0 + dual.abs()),
            "gap {} too wide",
            (dual - primal).abs()
        );
        // Dual never exceeds primal (weak duality, up to rounding).
        assert!(dual <= primal + 1e-9);
    }

    #[test]
    fn cost_is_symmetric_for_symmetric_ground_cost() {
        let mu = random_cloud(20, 2, 3, 1.0);
        let nu = random_cloud(25, 2, 4, 1.0);
        let fwd = EotProblem::new(&mu, &nu, 0.2).unwrap();
        let bwd = EotProblem::new(&nu, &mu, 0.2).unwrap();
        let cf = eot_cost(&fwd, &sinkhorn(&fwd, 1e-10, DEFAULT_MAX_ITER).unwrap()).unwrap();
        let cb = eot_cost(&bwd, &sinkhorn(&bwd, 1e-10, DEFAULT_MAX_ITER).unwrap()).unwrap();
        assert_abs_diff_eq!(cf, cb, epsilon = 1e-9);
    }

    #[test]
    fn extension_reproduces_atom_values() {
        let mu = random_cloud(15, 2, 5, 1.0);
        let nu = random_cloud(10, 2, 6, 1.0);
        let p = EotProblem::new(&mu, &nu, 0.15).unwrap();
        let pots = sinkhorn(&p, 1e-9, DEFAULT_MAX_ITER).unwrap();
        for (i, x) in mu.iter().enumerate() {
            assert_abs_diff_eq!(extend_phi(&p, &pots, x), pots.phi()[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn single_atom_nu_extension_is_exact() {
        let mu = cloud1(&[0.0, 2.0, 5.0]);
        let nu = cloud1(&[1.0]);
        let p = EotProblem::new(&mu, &nu, 0.3).unwrap();
        let pots = sinkhorn(&p, 1e-12, 100).unwrap();
        for q in [-3.0, 0.7, 10.0] {
            let expected = p.cost_at(&[q], &[1.0]) - pots.psi()[0];
            assert_abs_diff_eq!(extend_phi(&p, &pots, &[q]), expected, epsilon = 1e-12);
            let g = grad_phi(&p, &pots, &[q]);
            assert_abs_diff_eq!(g[0], q - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_instance_has_zero_gradient_at_center() {
        let mu = cloud1(&[-0.8, 0.8]);
        let nu = cloud1(&[-0.8, 0.8]);
        let p = EotProblem::new(&mu, &nu, 0.2).unwrap().with_cost(EotCost::HalfSqEuclidean);
        let pots = sinkhorn(&p, 1e-11, DEFAULT_MAX_ITER).unwrap();
        let g = grad_phi(&p, &pots, &[0.0]);
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-11);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mu = random_cloud(12, 2, 7, 1.0);
        let nu = random_cloud(18, 2, 8, 1.0);
        let p = EotProblem::new(&mu, &nu, 0.2).unwrap();
        let pots = sinkhorn(&p, 1e-10, DEFAULT_MAX_ITER).unwrap();
        let mut rng = RngStream::new(9).rng();
        let h = 1e-6;
        for _ in 0..100 {
            let q: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() * 2.0 - 0.5).collect();
            let g = grad_phi(&p, &pots, &q);
            let gp = grad_psi(&p, &pots, &q);
            for c in 0..2 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[c] += h;
                qm[c] -= h;
                let fd = (extend_phi(&p, &pots, &qp) - extend_phi(&p, &pots, &qm)) / (2.0 * h);
                assert!(((g[c] - fd) / fd.abs().max(1e-8)).abs() < 1e-4, "phi fd mismatch");
                let fd = (extend_psi(&p, &pots, &qp) - extend_psi(&p, &pots, &qm)) / (2.0 * h);
                assert!(((gp[c] - fd) / fd.abs().max(1e-8)).abs() < 1e-4, "psi fd mismatch");
            }
        }
    }

    #[test]
    fn unreachable_tolerance_reports_no_convergence() {
        let mu = random_cloud(10, 2, 10, 1.0);
        let nu = random_cloud(10, 2, 11, 1.0);
        let p = EotProblem::new(&mu, &nu, 0.05).unwrap();
        let err = sinkhorn(&p, 1e-16, 3).unwrap_err();
        match err {
            Error::NoConvergence { iterations, residual } => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-16);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn stale_potentials_are_rejected() {
        let mu = random_cloud(8, 2, 12, 1.0);
        let nu = random_cloud(8, 2, 13, 1.0);
        let p = EotProblem::new(&mu, &nu, 0.2).unwrap();
        let mut pots = sinkhorn(&p, 1e-9, DEFAULT_MAX_ITER).unwrap();
        pots.marginal_residual = 1.0; // simulate a mutated state
        assert!(matches!(eot_cost(&p, &pots), Err(Error::StalePotentials { .. })));
    }

    #[test]
    fn single_atom_sampling_is_forced() {
        let mu = cloud1(&[0.0]);
        let nu = cloud1(&[1.0]);
        let p = EotProblem::new(&mu, &nu, 0.5).unwrap();
        let pots = sinkhorn(&p, 1e-10, 10).unwrap();
        let pairs = sample_coupling(&p, &pots, 100, RngStream::new(1)).unwrap();
        assert!(pairs.iter().all(|&pr| pr == (0, 0)));
    }

    #[test]
    fn product_limit_sampling_frequencies() {
        let mu = cloud1(&[0.0, 1.0]);
        let nu = cloud1(&[0.0, 1.0]);
        let p = EotProblem::new(&mu, &nu, 1e6).unwrap().with_cost(EotCost::HalfSqEuclidean);
        let pots = sinkhorn(&p, 1e-12, 1000).unwrap();
        let count = 100_000;
        let pairs = sample_coupling(&p, &pots, count, RngStream::new(2)).unwrap();
        let mut freq = [[0usize; 2]; 2];
        for (i, j) in pairs {
            freq[i][j] += 1;
        }
        // Each cell ~ Binomial(count, 1/4): stderr = sqrt(p(1-p)/count).
        let stderr = (0.25 * 0.75 / count as f64).sqrt();
        for row in freq {
            for f in row {
                assert!((f as f64 / count as f64 - 0.25).abs() < 3.0 * stderr + 1e-3);
            }
        }
    }

    #[test]
    fn conditional_frequencies_match_row() {
        let mu = random_cloud(4, 1, 20, 1.0);
        let nu = random_cloud(5, 1, 21, 1.0);
        let p = EotProblem::new(&mu, &nu, 0.3).unwrap();
        let pots = sinkhorn(&p, 1e-10, DEFAULT_MAX_ITER).unwrap();
        let row = conditional_row(&p, &pots, 2);
        let mut rng = RngStream::new(3).rng();
        let count = 100_000;
        let mut freq = vec![0usize; 5];
        for _ in 0..count {
            freq[sample_conditional(&p, &pots, 2, &mut rng)] += 1;
        }
        for (f, expect) in freq.iter().zip(&row) {
            let stderr = (expect * (1.0 - expect) / count as f64).sqrt();
            assert!(
                (*f as f64 / count as f64 - expect).abs() < 4.0 * stderr + 1e-4,
                "freq {} vs row {expect}",
                *f as f64 / count as f64
            );
        }
    }

    #[test]
    fn solve_counter_increments() {
        let mu = cloud1(&[0.0]);
        let nu = cloud1(&[1.0]);
        let p = EotProblem::new(&mu, &nu, 0.5).unwrap();
        let before = solve_count();
        let _ = sinkhorn(&p, 1e-10, 10).unwrap();
        assert!(solve_count() > before);
    }
}
