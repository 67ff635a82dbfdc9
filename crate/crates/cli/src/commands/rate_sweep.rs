//! `densityflow rate-sweep`: estimation error versus per-snapshot sample
//! size, against the analytic Gaussian law of the configured process.
//!
//! Only the Ornstein–Uhlenbeck process is allowed here: its marginals have
//! closed-form moments, so the reference density is exact rather than a
//! Monte-Carlo stand-in. Each `(N, seed)` cell simulates a fresh dataset,
//! fits it, and scores the smoothed fit against the noise-convolved truth on
//! a shared grid. A power law is fitted through the per-`N` medians when
//! there are at least three sizes; with fewer, the slope is skipped with a
//! warning rather than an error.

use densityflow_core::io::{fmt_f64, write_table_file};
use densityflow_core::metrics::{gaussian_oracle_density, rate_slope, time_averaged_error, GridSpec};
use densityflow_core::optim::{inexact_cklgd, FitOptions};
use densityflow_core::sde::generate_snapshots;
use densityflow_core::{Error, Result, RngStream};

use super::{effective_seed, init_mode, out_dir, stamp};
use crate::config::{LambdaMode, RunConfig, SdeKind};
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let law = cfg.sde()?;
    let SdeKind::Ou(ou) = &law.kind else {
        return Err(Error::Format(
            "rate-sweep needs sde.kind = ou: the error oracle is the analytic Gaussian law".into(),
        ));
    };
    let dcfg = cfg.data()?;
    let sweep = cfg.sweep(dcfg.m)?;
    let est = cfg.estimator(dcfg.sigma, dcfg.t_end)?;
    let sched_cfg = cfg.schedule()?;
    let flags = cfg.outputs()?;
    let seed = effective_seed(args, &cfg)?;
    let out = out_dir(args, &cfg)?;
    let trailer = stamp(&cfg, seed);

    let times = dcfg.times_for(sweep.m)?;
    let schedule = sched_cfg.build(est.cfg.tau, sched_cfg.k)?;
    let opts = FitOptions {
        eot_tol: est.eot_tol,
        eot_max_iter: est.eot_max_iter,
        record_losses: false,
        ..FitOptions::default()
    };
    let spec = law.spec()?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut medians: Vec<(usize, f64)> = Vec::new();
    for &n in &sweep.n_list {
        let cell_cfg = match sweep.lambda_mode {
            LambdaMode::Fixed => est.cfg.clone(),
            LambdaMode::RootN => {
                let mut c = est.cfg.clone();
                c.lambda = est.cfg.lambda / (n as f64).sqrt();
                c
            }
        };
        let b = if sweep.b_match_n { n } else { est.b };
        let mut errors = Vec::with_capacity(sweep.seeds);
        for s in 0..sweep.seeds {
            let rng = RngStream::new(seed).derive(n as u64).derive(s as u64);
            let dataset = generate_snapshots(&spec, &times, n, dcfg.sigma, law.dt, rng)?;
            let mode = init_mode(&est.init, &dataset, &cell_cfg, b, rng)?;
            let traj = inexact_cklgd(&dataset, &cell_cfg, &schedule, b, &mode, rng, &opts)?;
            let fitted = traj.final_state();

            // One grid covering the fit and the data, so every snapshot's
            // estimate and reference are comparable.
            let mut clouds: Vec<&densityflow_core::ParticleCloud> =
                Vec::with_capacity(2 * sweep.m);
            clouds.extend(fitted.clouds());
            clouds.extend(dataset.snapshots());
            let grid = GridSpec::bounding(&clouds, est.cfg.sigma, 6.0, flags.grid_cells)?;
            let references = (0..sweep.m)
                .map(|j| {
                    let t = times.time(j);
                    gaussian_oracle_density(
                        &grid,
                        &ou.mean_at(t),
                        ou.variance_at(law.tau, t),
                        dcfg.sigma,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let err = time_averaged_error(fitted, est.cfg.sigma, &references)?;
            log::debug!("N={n} seed={s}: time-averaged error {err:.6}");
            rows.push(vec![
                sweep.m.to_string(),
                n.to_string(),
                s.to_string(),
                fmt_f64(err),
            ]);
            errors.push(err);
        }
        medians.push((n, median(&mut errors)));
    }

    write_table_file(&out.join("sweep.csv"), &["m", "N", "seed", "error"], rows, &trailer)?;

    let sizes: Vec<f64> = medians.iter().map(|(n, _)| *n as f64).collect();
    let errs: Vec<f64> = medians.iter().map(|(_, e)| *e).collect();
    let mut summary_trailer = Vec::new();
    let slope = match rate_slope(&sizes, &errs) {
        Ok(slope) => {
            summary_trailer.push(format!("fitted_slope={}", fmt_f64(slope)));
            Some(slope)
        }
        Err(Error::InsufficientPoints(why)) => {
            log::warn!("no slope fitted: {why}");
            println!("slope skipped: {why}");
            None
        }
        Err(e) => return Err(e),
    };
    summary_trailer.extend_from_slice(&trailer);
    let summary_rows = medians
        .iter()
        .map(|(n, e)| vec![n.to_string(), fmt_f64(*e)]);
    write_table_file(
        &out.join("sweep_summary.csv"),
        &["N", "median_error"],
        summary_rows,
        &summary_trailer,
    )?;
    if let Some(slope) = slope {
        println!("fitted error-vs-N slope: {slope:.4}");
    }
    println!("{}", out.join("sweep.csv").display());
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("errors are finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
