//! Subcommand implementations plus the bits they share: provenance
//! stamping, output-directory resolution, initialization wiring, and the
//! checkpoint naming scheme.

pub mod compare;
pub mod fit;
pub mod rate_sweep;
pub mod reconstruct;
pub mod simulate;

use std::path::{Path, PathBuf};

use densityflow_core::cloud::{FlowState, ParticleCloud, SnapshotDataset};
use densityflow_core::io::fmt_f64;
use densityflow_core::optim::{build_init, InitMode};
use densityflow_core::rng::tags;
use densityflow_core::{Error, EstimatorConfig, Result, RngStream};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{InitSpec, RunConfig};
use crate::RunArgs;

/// Trailing metadata comment appended to every emitted CSV: tool version,
/// config-byte hash, and the effective seed. Deliberately timestamp-free so
/// re-runs are byte-identical.
pub fn stamp(cfg: &RunConfig, seed: u64) -> Vec<String> {
    vec![format!(
        "densityflow {} config={:016x} seed={}",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        seed
    )]
}

/// `--seed` beats `[run] seed` beats 0.
pub fn effective_seed(args: &RunArgs, cfg: &RunConfig) -> Result<u64> {
    Ok(match args.seed {
        Some(s) => s,
        None => cfg.seed()?,
    })
}

/// `--out` beats `[outputs] dir` beats the current directory. The directory
/// is created if missing.
pub fn out_dir(args: &RunArgs, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = match (&args.out, cfg.outputs()?.dir) {
        (Some(flag), _) => flag.clone(),
        (None, Some(key)) => PathBuf::from(key),
        (None, None) => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn require_dataset<'a>(args: &'a RunArgs, what: &str) -> Result<&'a Path> {
    args.dataset
        .as_deref()
        .ok_or_else(|| Error::Format(format!("this command needs --dataset pointing at {what}")))
}

pub fn checkpoint_name(k: usize) -> String {
    format!("checkpoint_{k:02}.csv")
}

/// Contiguous `checkpoint_00.csv, checkpoint_01.csv, ..` present in `dir`,
/// in index order. A gap in the numbering is an error: silently restarting
/// below it would overwrite work the user probably cares about.
pub fn existing_checkpoints(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut indices = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(k) = name
            .strip_prefix("checkpoint_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            indices.push(k);
        }
    }
    indices.sort_unstable();
    for (pos, &k) in indices.iter().enumerate() {
        if k != pos {
            return Err(Error::Format(format!(
                "checkpoint numbering in {} has a gap: expected index {pos}, found {k}",
                dir.display()
            )));
        }
    }
    Ok(indices.iter().map(|&k| dir.join(checkpoint_name(k))).collect())
}

/// Materialize the configured initialization as an [`InitMode`].
///
/// The Gaussian variant draws its clouds here, deterministically from the
/// seed, one derived stream per (snapshot, particle) — so an explicit shared
/// start for two optimizers costs one extra clone, nothing more.
pub fn init_mode(
    spec: &InitSpec,
    data: &SnapshotDataset,
    cfg: &EstimatorConfig,
    b: usize,
    rng: RngStream,
) -> Result<InitMode> {
    match spec {
        InitSpec::Jitter => Ok(InitMode::JitteredData),
        InitSpec::Gauss { mean, std } => {
            let dim = data.dim();
            let base = rng.derive(tags::INIT_JITTER);
            let clouds = (0..data.m())
                .map(|j| {
                    let per_snapshot = base.derive(j as u64);
                    let mut flat = Vec::with_capacity(b * dim);
                    for p in 0..b {
                        let mut r = per_snapshot.derive(p as u64).rng();
                        for _ in 0..dim {
                            flat.push(mean + std * r.sample::<f64, _>(StandardNormal));
                        }
                    }
                    ParticleCloud::new(dim, flat)
                })
                .collect::<Result<Vec<_>>>()?;
            let state = FlowState::new(data.times().clone(), clouds)?;
            // Surface shape mistakes (B vs dataset) through the usual path.
            build_init(data, cfg, b, &InitMode::Explicit(state.clone()), rng)?;
            Ok(InitMode::Explicit(state))
        }
    }
}

/// Rows of a grid-density CSV: `ix[,iy],x[,y],value` in flat cell order.
pub fn grid_rows(density: &densityflow_core::metrics::GridDensity) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let spec = density.spec();
    let header: Vec<&'static str> = match spec.dim() {
        1 => vec!["ix", "x", "value"],
        _ => vec!["ix", "iy", "x", "y", "value"],
    };
    let cols = if spec.dim() == 2 { grid_columns(spec) } else { 1 };
    let rows = (0..spec.n_cells())
        .map(|flat| {
            let center = spec.center(flat);
            let mut row = Vec::with_capacity(header.len());
            match spec.dim() {
                1 => row.push(flat.to_string()),
                _ => {
                    row.push((flat / cols).to_string());
                    row.push((flat % cols).to_string());
                }
            }
            row.extend(center.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(density.values()[flat]));
            row
        })
        .collect();
    (header, rows)
}

fn grid_columns(spec: &densityflow_core::metrics::GridSpec) -> usize {
    // Flat order is row-major (second axis fastest), so the first flat index
    // whose leading coordinate moves equals the column count.
    let total = spec.n_cells();
    (1..total).find(|&flat| spec.center(flat)[0] != spec.center(0)[0]).unwrap_or(total)
}
