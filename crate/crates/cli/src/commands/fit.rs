//! `densityflow fit`: checkpointed, resumable coordinate-descent fitting.
//!
//! The output directory is self-contained: it holds a copy of the dataset,
//! one state CSV per completed outer iteration, the per-term loss table, and
//! (optionally) final clouds, segment potentials, and smoothed grids. A
//! rerun pointed at a partially filled directory picks up after the last
//! checkpoint and reproduces exactly the bytes an uninterrupted run would
//! have written — the optimizer replays its history deterministically from
//! the seed.

use std::path::Path;

use densityflow_core::cloud::{FlowState, SnapshotDataset};
use densityflow_core::io::{fmt_f64, read_dataset_file, read_flow_state_file, write_dataset_file, write_flow_state_file, write_table_file};
use densityflow_core::metrics::{smooth_to_grid, GridSpec};
use densityflow_core::objective::{prepare_state, ObjectiveBreakdown};
use densityflow_core::optim::{inexact_cklgd_resume, FitOptions};
use densityflow_core::{Error, Result, RngStream};

use super::{
    checkpoint_name, effective_seed, existing_checkpoints, grid_rows, init_mode, out_dir,
    require_dataset, stamp,
};
use crate::config::{EstimatorSettings, OutputFlags, RunConfig, ScheduleSettings};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let dataset_path = require_dataset(args, "a snapshot dataset CSV")?;
    let (data, _) = read_dataset_file(dataset_path)?;
    let seed = effective_seed(args, &cfg)?;
    let est = cfg.estimator(data.noise_sigma(), data.times().last())?;
    let sched = cfg.schedule()?;
    let flags = cfg.outputs()?;
    let out = out_dir(args, &cfg)?;
    let trailer = stamp(&cfg, seed);

    let (final_state, losses) =
        run_fit(&data, &est, &sched, seed, &out, &flags, &trailer)?;

    // Keep the directory self-contained so reconstruction can run from it
    // without the original inputs.
    write_dataset_file(&out.join("dataset.csv"), &data, &trailer)?;
    write_losses(&out.join("losses.csv"), &sched, est.cfg.tau, &losses, &trailer)?;
    write_extras(&out, &data, &est, &final_state, &flags, &trailer)?;
    println!("{}", out.display());
    Ok(())
}

/// Drive the optimizer outer iteration by outer iteration, writing each
/// checkpoint as soon as its state exists (so a crash loses at most the
/// iteration in flight). Returns the final state and the full loss table.
#[allow(clippy::too_many_arguments)]
pub fn run_fit(
    data: &SnapshotDataset,
    est: &EstimatorSettings,
    sched: &ScheduleSettings,
    seed: u64,
    out: &Path,
    flags: &OutputFlags,
    trailer: &[String],
) -> Result<(FlowState, Vec<ObjectiveBreakdown>)> {
    let rng = RngStream::new(seed);
    let opts = FitOptions {
        eot_tol: est.eot_tol,
        eot_max_iter: est.eot_max_iter,
        record_losses: false,
        ..FitOptions::default()
    };

    let mut states: Vec<FlowState> = Vec::new();
    let found = existing_checkpoints(out)?;
    if found.len() > sched.k + 1 {
        return Err(Error::Format(format!(
            "{} checkpoints in {} exceed schedule.K = {} (+ the initialization)",
            found.len(),
            out.display(),
            sched.k
        )));
    }
    for path in &found {
        let (state, _) = read_flow_state_file(path)?;
        if state.times().as_slice() != data.times().as_slice() || state.dim() != data.dim() {
            return Err(Error::Format(format!(
                "checkpoint {} does not match the dataset's times/dimensions",
                path.display()
            )));
        }
        states.push(state);
    }
    if states.is_empty() {
        let mode = init_mode(&est.init, data, &est.cfg, est.b, rng)?;
        let s0 = densityflow_core::optim::build_init(data, &est.cfg, est.b, &mode, rng)?;
        if flags.checkpoints {
            write_flow_state_file(&out.join(checkpoint_name(0)), &s0, trailer)?;
        }
        states.push(s0);
    } else {
        log::info!("resuming after checkpoint {}", states.len() - 1);
    }

    // With checkpointing on, stop after every outer iteration to persist it;
    // otherwise jump straight to the end. Either way the last pass replays
    // the whole history with loss recording enabled, which also covers the
    // "already complete" case where no new iterations run at all.
    let done = states.len() - 1;
    let stops: Vec<usize> = if flags.checkpoints && done < sched.k {
        ((done + 1)..=sched.k).collect()
    } else {
        vec![sched.k]
    };
    let mut losses = Vec::new();
    for &k in &stops {
        let record = k == sched.k;
        let opts_k = FitOptions { record_losses: record, ..opts.clone() };
        let schedule = sched.build(est.cfg.tau, k)?;
        let traj = inexact_cklgd_resume(data, &est.cfg, &schedule, states, rng, &opts_k)?;
        states = traj.states;
        if record {
            losses = traj.losses;
        }
        if flags.checkpoints && k > done {
            write_flow_state_file(&out.join(checkpoint_name(k)), &states[k], trailer)?;
        }
    }
    Ok((states.pop().expect("at least the initialization exists"), losses))
}

fn write_losses(
    path: &Path,
    sched: &ScheduleSettings,
    tau: f64,
    losses: &[ObjectiveBreakdown],
    trailer: &[String],
) -> Result<()> {
    let cumulative = sched.cumulative_inner(tau)?;
    debug_assert_eq!(losses.len(), cumulative.len());
    let rows = losses.iter().zip(&cumulative).enumerate().map(|(k, (b, inner))| {
        vec![
            k.to_string(),
            inner.to_string(),
            fmt_f64(b.neg_log_likelihood),
            fmt_f64(b.eot_sum),
            fmt_f64(b.entropy_sum),
            fmt_f64(b.total),
        ]
    });
    write_table_file(
        path,
        &["outer_iteration", "total_inner_iterations", "neg_log_likelihood", "transport", "entropy", "total"],
        rows,
        trailer,
    )
}

/// Optional artifacts derived from the final state.
fn write_extras(
    out: &Path,
    data: &SnapshotDataset,
    est: &EstimatorSettings,
    state: &FlowState,
    flags: &OutputFlags,
    trailer: &[String],
) -> Result<()> {
    if flags.final_clouds {
        let dim = state.dim();
        for j in 0..state.m() {
            let cloud = state.cloud(j);
            let mut header = vec!["particle_index".to_string()];
            header.extend((1..=dim).map(|c| format!("x_{c}")));
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let rows = cloud.iter().enumerate().map(|(p, point)| {
                let mut row = vec![p.to_string()];
                row.extend(point.iter().map(|v| fmt_f64(*v)));
                row
            });
            let mut full = vec![format!("time={}", fmt_f64(state.times().time(j)))];
            full.extend_from_slice(trailer);
            write_table_file(&out.join(format!("final_cloud_{j:02}.csv")), &header_refs, rows, &full)?;
        }
    }
    if !(flags.potentials || flags.grids) {
        return Ok(());
    }
    let prepared = prepare_state(state, data, &est.cfg, est.eot_tol, est.eot_max_iter)?;
    if flags.potentials {
        for j in 0..state.m().saturating_sub(1) {
            let pots = prepared.segment(j);
            let rows = pots.phi().iter().zip(pots.psi()).enumerate().map(|(a, (phi, psi))| {
                vec![a.to_string(), fmt_f64(*phi), fmt_f64(*psi)]
            });
            let mut full = vec![
                format!("epsilon={}", fmt_f64(pots.epsilon())),
                format!("marginal_residual={}", fmt_f64(pots.marginal_residual())),
                format!("iterations={}", pots.iterations()),
            ];
            full.extend_from_slice(trailer);
            write_table_file(
                &out.join(format!("potentials_{j:02}.csv")),
                &["atom_index", "phi", "psi"],
                rows,
                &full,
            )?;
        }
    }
    if flags.grids {
        for j in 0..state.m() {
            let cloud = state.cloud(j);
            let spec = GridSpec::bounding(&[cloud], est.cfg.sigma, 6.0, flags.grid_cells)?;
            let density = smooth_to_grid(cloud, est.cfg.sigma, &spec)?;
            let (header, rows) = grid_rows(&density);
            let mut full = vec![format!("time={}", fmt_f64(state.times().time(j)))];
            full.extend_from_slice(trailer);
            write_table_file(&out.join(format!("grid_{j:02}.csv")), &header, rows, &full)?;
        }
    }
    Ok(())
}
