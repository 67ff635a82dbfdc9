//! Inexact coordinate descent on the snapshot-marginal objective.
//!
//! Each outer iteration `k` freezes the previous iterate, solves its
//! transport potentials once, and then refreshes every snapshot cloud by
//! running `n_k` inner Langevin steps against the history-weighted drift
//! `sum_l w_l(k) [grad V_j(.; state_{l-1}) + 2 alpha_l id]`. The inner
//! sampler warm-starts from the previous cloud, so small `n_k` (inexact
//! coordinate updates) is the intended regime. All coordinates `j` advance
//! from the same frozen state, never from each other's fresh clouds.

use crate::cloud::{EstimatorConfig, FlowState, SnapshotDataset};
use crate::eot;
use crate::error::{Error, Result};
use crate::objective::{prepare_state, ObjectiveBreakdown, DEFAULT_ENTROPY_K};
use crate::optim::history::HistoryLedger;
use crate::optim::ula::ula_sample;
use crate::optim::{build_init, InitMode};
use crate::rng::{tags, RngStream};
use crate::schedule::Schedule;

/// Fit knobs that are not part of the outer schedule.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Marginal tolerance for every transport solve.
    pub eot_tol: f64,
    /// Sweep cap for every transport solve.
    pub eot_max_iter: usize,
    /// Neighbor order of the entropy estimate inside recorded losses.
    pub entropy_k: usize,
    /// Record the objective at every iterate, including the init. The
    /// potentials are shared with the drift, so this only adds the
    /// likelihood/entropy bookkeeping plus one extra solve at the end.
    pub record_losses: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            eot_tol: eot::DEFAULT_TOL,
            eot_max_iter: eot::DEFAULT_MAX_ITER,
            entropy_k: DEFAULT_ENTROPY_K,
            record_losses: true,
        }
    }
}

fn check_options(opts: &FitOptions) -> Result<()> {
    if !(opts.eot_tol > 0.0 && opts.eot_tol.is_finite()) {
        return Err(Error::ShapeMismatch(format!(
            "transport tolerance must be positive, got {}",
            opts.eot_tol
        )));
    }
    if opts.eot_max_iter == 0 {
        return Err(Error::ShapeMismatch("transport iteration cap must be at least 1".into()));
    }
    if opts.entropy_k == 0 {
        return Err(Error::ShapeMismatch("entropy neighbor order must be at least 1".into()));
    }
    Ok(())
}

/// Output of a fit run: the full iterate path plus the loss curve.
#[derive(Debug)]
pub struct FitTrajectory {
    /// `K+1` states; entry 0 is the initialization, entry `k` the iterate
    /// after outer iteration `k`.
    pub states: Vec<FlowState>,
    /// Objective at each state, aligned with `states`; empty when loss
    /// recording was disabled.
    pub losses: Vec<ObjectiveBreakdown>,
}

impl FitTrajectory {
    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("a trajectory always holds the init state")
    }
}

/// Run the full outer loop from a fresh initialization.
pub fn inexact_cklgd(
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    schedule: &Schedule,
    b: usize,
    init: &InitMode,
    rng: RngStream,
    opts: &FitOptions,
) -> Result<FitTrajectory> {
    let init_state = build_init(data, cfg, b, init, rng)?;
    run_from(vec![init_state], data, cfg, schedule, rng, opts)
}

/// Continue a run from previously produced iterates (`states[0]` is the
/// initialization, later entries completed outer iterations). The replay
/// re-solves the potentials of the carried states, so the continuation is
/// bit-identical to the run that would have produced them in one piece,
/// provided `rng`, the schedule, and the options match the original call.
pub fn inexact_cklgd_resume(
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    schedule: &Schedule,
    states: Vec<FlowState>,
    rng: RngStream,
    opts: &FitOptions,
) -> Result<FitTrajectory> {
    if states.is_empty() {
        return Err(Error::ShapeMismatch("resume needs at least the initialization state".into()));
    }
    run_from(states, data, cfg, schedule, rng, opts)
}

fn run_from(
    mut states: Vec<FlowState>,
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    schedule: &Schedule,
    rng: RngStream,
    opts: &FitOptions,
) -> Result<FitTrajectory> {
    check_options(opts)?;
    let k_max = schedule.k_max();
    let done = states.len() - 1;
    if done > k_max {
        return Err(Error::ShapeMismatch(format!(
            "resume carries {done} completed iterations for a schedule of {k_max}"
        )));
    }

    let mut ledger = HistoryLedger::new();
    let mut losses = Vec::new();
    for k in 1..=k_max {
        // Past states are re-prepared too: the drift at iteration k needs
        // every earlier state's potentials, and replaying them keeps the
        // loss rows identical to the original run's.
        let prepared = prepare_state(&states[k - 1], data, cfg, opts.eot_tol, opts.eot_max_iter)?;
        if opts.record_losses {
            losses.push(prepared.objective(data, cfg, opts.entropy_k)?);
        }
        ledger.push(prepared);
        if k <= done {
            continue;
        }

        let prev = &states[k - 1];
        let n_k = schedule.ula_iters(k);
        let clouds = if n_k == 0 {
            // A zero inner budget leaves the coordinate untouched.
            prev.clouds().to_vec()
        } else {
            let active = ledger.active_weights(schedule, k)?;
            let h_k = schedule.ula_step(k);
            let mut fresh = Vec::with_capacity(prev.m());
            for j in 0..prev.m() {
                let stream = rng.derive(tags::ULA).derive(k as u64).derive(j as u64);
                let cloud = ula_sample(
                    |z| ledger.drift(&active, schedule, data, cfg, j, z),
                    prev.cloud(j),
                    h_k,
                    n_k,
                    stream,
                )?;
                fresh.push(cloud);
            }
            fresh
        };
        states.push(FlowState::new(prev.times().clone(), clouds)?);
    }

    if opts.record_losses {
        let last = prepare_state(states.last().unwrap(), data, cfg, opts.eot_tol, opts.eot_max_iter)?;
        losses.push(last.objective(data, cfg, opts.entropy_k)?);
    }
    Ok(FitTrajectory { states, losses })
}
