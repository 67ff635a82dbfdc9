//! `densityflow compare`: both optimizers, one initialization, one seed,
//! one aligned loss table.
//!
//! The x-axis counts inner sampling iterations so the two methods are
//! comparable per unit of work: the coordinate scheme contributes points
//! only at outer-iteration boundaries (values between them would not be
//! true losses), the baseline at its recording cadence.

use densityflow_core::io::{fmt_f64, read_dataset_file, write_table_file};
use densityflow_core::optim::{
    build_init, inexact_cklgd, mfld_baseline, BaselineOptions, FitOptions, InitMode,
};
use densityflow_core::{Error, Result, RngStream};

use super::{effective_seed, init_mode, out_dir, require_dataset, stamp};
use crate::config::RunConfig;
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let dataset_path = require_dataset(args, "a snapshot dataset CSV")?;
    let (data, _) = read_dataset_file(dataset_path)?;
    let seed = effective_seed(args, &cfg)?;
    let est = cfg.estimator(data.noise_sigma(), data.times().last())?;
    let sched = cfg.schedule()?;
    let base = cfg.baseline()?;
    if !base.enabled {
        return Err(Error::Format(
            "compare runs the baseline: set baseline.enabled = true (and steps/step)".into(),
        ));
    }
    let out = out_dir(args, &cfg)?;
    let trailer = stamp(&cfg, seed);

    let rng = RngStream::new(seed);
    let opts = FitOptions {
        eot_tol: est.eot_tol,
        eot_max_iter: est.eot_max_iter,
        ..FitOptions::default()
    };

    // One shared start: materialize the configured initialization once and
    // hand the same clouds to both methods.
    let mode = init_mode(&est.init, &data, &est.cfg, est.b, rng)?;
    let start = build_init(&data, &est.cfg, est.b, &mode, rng)?;
    let shared = InitMode::Explicit(start);

    let schedule = sched.build(est.cfg.tau, sched.k)?;
    let traj = inexact_cklgd(&data, &est.cfg, &schedule, est.b, &shared, rng, &opts)?;
    let baseline = mfld_baseline(
        &data,
        &est.cfg,
        est.b,
        base.steps,
        base.step,
        &base.anneal,
        &shared,
        rng,
        &BaselineOptions {
            refresh_every: base.refresh_every,
            loss_every: base.loss_every,
            fit: opts,
        },
    )?;

    let cumulative = sched.cumulative_inner(est.cfg.tau)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (inner, loss) in cumulative.iter().zip(&traj.losses) {
        rows.push(vec![inner.to_string(), "cklgd".into(), fmt_f64(loss.total)]);
    }
    for (step, loss) in &baseline.losses {
        rows.push(vec![step.to_string(), "mfld".into(), fmt_f64(loss.total)]);
    }
    let path = out.join("compare.csv");
    write_table_file(&path, &["total_inner_iteration", "method", "loss"], rows, &trailer)?;
    log::info!(
        "coordinate scheme: {} outer iterations over {} inner steps; baseline: {} steps",
        sched.k,
        cumulative.last().unwrap(),
        base.steps
    );
    println!("{}", path.display());
    Ok(())
}
