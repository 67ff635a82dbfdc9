//! Mean-field Langevin baseline: one long annealed diffusion per snapshot
//! coordinate, all coordinates advanced synchronously.
//!
//! Unlike the outer/inner loop in [`super::inexact`], this baseline never
//! restarts its chains: every step moves each particle by
//! `z <- z - h * grad V_j(z; live state) + N(0, 2h * (tau/beta_s) I)`.
//! The likelihood denominators in `grad V_j` track the live clouds at every
//! step; the transport potentials are only re-solved every `refresh_every`
//! steps because each solve costs a full Sinkhorn pass per segment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cloud::{EstimatorConfig, FlowState, SnapshotDataset};
use crate::error::{Error, Result};
use crate::kernel::GaussKernel;
use crate::objective::{grad_vj, prepare_state, ObjectiveBreakdown};
use crate::optim::inexact::FitOptions;
use crate::optim::{build_init, InitMode};
use crate::rng::{tags, RngStream};

/// Inverse-temperature ramp `beta_s = 1 + scale * ln(1 + s/s0)`: the noise
/// level starts at the estimator's `tau` and cools logarithmically.
#[derive(Debug, Clone, Copy)]
pub struct AnnealSchedule {
    scale: f64,
    s0: f64,
}

impl AnnealSchedule {
    pub fn new(scale: f64, s0: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "anneal scale must be non-negative, got {scale}"
            )));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "anneal midpoint must be positive, got {s0}"
            )));
        }
        Ok(AnnealSchedule { scale, s0 })
    }

    /// No cooling at all: `beta_s = 1` for every step.
    pub fn constant() -> Self {
        AnnealSchedule { scale: 0.0, s0: 1.0 }
    }

    pub fn beta(&self, s: usize) -> f64 {
        1.0 + self.scale * (1.0 + s as f64 / self.s0).ln()
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { scale: 1.0, s0: 100.0 }
    }
}

/// Baseline knobs beyond the step size and step count.
#[derive(Debug, Clone)]
pub struct BaselineOptions {
    /// Steps between transport re-solves.
    pub refresh_every: usize,
    /// Steps between recorded loss rows; must be a multiple of
    /// `refresh_every` so every loss row coincides with fresh potentials.
    pub loss_every: usize,
    /// Transport/entropy knobs shared with the coordinate-descent fitter.
    pub fit: FitOptions,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions { refresh_every: 50, loss_every: 50, fit: FitOptions::default() }
    }
}

/// Output of a baseline run.
#[derive(Debug)]
pub struct BaselineRun {
    /// The initialization the chains started from.
    pub initial: FlowState,
    /// The clouds after the last step.
    pub final_state: FlowState,
    /// `(step, objective)` rows at step 0, every `loss_every` steps, and the
    /// final step; empty when loss recording is disabled.
    pub losses: Vec<(usize, ObjectiveBreakdown)>,
}

/// Run the annealed mean-field Langevin baseline for `total_steps` steps of
/// size `step`.
#[allow(clippy::too_many_arguments)]
pub fn mfld_baseline(
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    b: usize,
    total_steps: usize,
    step: f64,
    anneal: &AnnealSchedule,
    init: &InitMode,
    rng: RngStream,
    opts: &BaselineOptions,
) -> Result<BaselineRun> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::ShapeMismatch(format!("step size must be positive, got {step}")));
    }
    if opts.refresh_every == 0 {
        return Err(Error::ShapeMismatch("refresh cadence must be at least 1 step".into()));
    }
    if opts.loss_every == 0 || opts.loss_every % opts.refresh_every != 0 {
        return Err(Error::ShapeMismatch(format!(
            "loss cadence {} must be a positive multiple of the refresh cadence {}",
            opts.loss_every, opts.refresh_every
        )));
    }

    let initial = build_init(data, cfg, b, init, rng)?;
    let mut current = initial.clone();
    let m = current.m();
    let dim = current.dim();
    let kernel = GaussKernel::new(cfg.sigma, dim)?;

    // One persistent generator per (snapshot, particle): crossing chains
    // never share randomness and the walk is reproducible at any thread
    // count.
    let base = rng.derive(tags::MFLD);
    let mut chains: Vec<Vec<ChaCha8Rng>> = (0..m)
        .map(|j| {
            let per_snapshot = base.derive(j as u64);
            (0..current.b()).map(|p| per_snapshot.derive(p as u64).rng()).collect()
        })
        .collect();

    let mut prepared = None;
    let mut losses = Vec::new();
    for s in 1..=total_steps {
        if (s - 1) % opts.refresh_every == 0 {
            let fresh = prepare_state(&current, data, cfg, opts.fit.eot_tol, opts.fit.eot_max_iter)?;
            if opts.fit.record_losses && (s - 1) % opts.loss_every == 0 {
                losses.push((s - 1, fresh.objective(data, cfg, opts.fit.entropy_k)?));
            }
            prepared = Some(fresh);
        }
        let frozen = prepared.as_ref().expect("potentials solved before the first step");

        // Likelihood denominators must follow the live clouds even between
        // refreshes; only the transport potentials are allowed to lag.
        let live_denoms: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let cloud = current.cloud(j);
                let obs = data.snapshot(j);
                (0..obs.len())
                    .into_par_iter()
                    .map(|i| kernel.log_convolve_at(cloud, obs.point(i)))
                    .collect()
            })
            .collect();
        let live = frozen.with_log_denoms(live_denoms);

        let noise_std = (2.0 * step * cfg.tau / anneal.beta(s)).sqrt();
        let mut new_clouds = Vec::with_capacity(m);
        for (j, chains_j) in chains.iter_mut().enumerate() {
            let cloud = current.cloud(j);
            let moved: Vec<Result<Vec<f64>>> = chains_j
                .par_iter_mut()
                .enumerate()
                .map(|(p, chain)| {
                    let z = cloud.point(p);
                    let g = grad_vj(&live, data, cfg, j, z)?;
                    let out: Vec<f64> = z
                        .iter()
                        .zip(&g)
                        .map(|(zc, gc)| {
                            zc - step * gc + noise_std * chain.sample::<f64, _>(StandardNormal)
                        })
                        .collect();
                    if out.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFiniteState(format!(
                            "baseline particle {p} of snapshot {j} diverged at step {s}"
                        )));
                    }
                    Ok(out)
                })
                .collect();
            let mut flat = Vec::with_capacity(cloud.len() * dim);
            for z in moved {
                flat.extend_from_slice(&z?);
            }
            new_clouds.push(crate::cloud::ParticleCloud::new(dim, flat)?);
        }
        current = FlowState::new(current.times().clone(), new_clouds)?;
    }

    if opts.fit.record_losses {
        let last = prepare_state(&current, data, cfg, opts.fit.eot_tol, opts.fit.eot_max_iter)?;
        losses.push((total_steps, last.objective(data, cfg, opts.fit.entropy_k)?));
    }
    Ok(BaselineRun { initial, final_state: current, losses })
}
