//! `densityflow reconstruct`: continuous-time marginals from a finished fit.
//!
//! Points at a fit directory (the `--dataset` argument), loads its dataset
//! copy and latest checkpoint, re-solves the segment couplings, and samples
//! the bridge-interpolated marginal at each requested time. Times outside
//! `[t_1, t_m]` are a configuration error — the flow does not extrapolate.

use densityflow_core::flow::reconstruct_marginal;
use densityflow_core::io::{fmt_f64, read_dataset_file, read_flow_state_file, write_table_file};
use densityflow_core::objective::prepare_state;
use densityflow_core::{Error, Result, RngStream};

use super::{effective_seed, existing_checkpoints, out_dir, require_dataset, stamp};
use crate::config::RunConfig;
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let fit_dir = require_dataset(args, "a fit output directory")?;
    if !fit_dir.is_dir() {
        return Err(Error::Format(format!(
            "{} is not a directory; reconstruct reads a fit's outputs",
            fit_dir.display()
        )));
    }
    let (data, _) = read_dataset_file(&fit_dir.join("dataset.csv"))?;
    let checkpoints = existing_checkpoints(fit_dir)?;
    let Some(last) = checkpoints.last() else {
        return Err(Error::Format(format!("no checkpoints found in {}", fit_dir.display())));
    };
    let (state, _) = read_flow_state_file(last)?;

    let seed = effective_seed(args, &cfg)?;
    let est = cfg.estimator(data.noise_sigma(), data.times().last())?;
    let rc = cfg.reconstruct()?;
    let out = out_dir(args, &cfg)?;
    let trailer = stamp(&cfg, seed);

    // Validate the whole times list up front: failing on the third time
    // after writing two files would leave a confusing partial output set.
    let (lo, hi) = (state.times().time(0), state.times().last());
    for &t in &rc.times {
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
    }

    let prepared = prepare_state(&state, &data, &est.cfg, est.eot_tol, est.eot_max_iter)?;
    let dim = state.dim();
    let mut header = vec!["draw_index".to_string()];
    header.extend((1..=dim).map(|c| format!("x_{c}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

    for (i, &t) in rc.times.iter().enumerate() {
        let cloud = reconstruct_marginal(
            &prepared,
            est.cfg.tau,
            t,
            rc.count,
            RngStream::new(seed).derive(i as u64),
        )?;
        let rows = cloud.iter().enumerate().map(|(p, point)| {
            let mut row = vec![p.to_string()];
            row.extend(point.iter().map(|v| fmt_f64(*v)));
            row
        });
        let mut full = vec![format!("time={}", fmt_f64(t))];
        full.extend_from_slice(&trailer);
        let path = out.join(format!("recon_{i:02}.csv"));
        write_table_file(&path, &header_refs, rows, &full)?;
        println!("{}", path.display());
    }
    Ok(())
}
