//! `densityflow simulate`: run the configured diffusion and write one noisy
//! snapshot dataset.

use densityflow_core::sde::generate_snapshots;
use densityflow_core::{Result, RngStream};

use super::{effective_seed, out_dir, stamp};
use crate::config::RunConfig;
use crate::RunArgs;

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let law = cfg.sde()?;
    let data = cfg.data()?;
    let seed = effective_seed(args, &cfg)?;

    let times = data.times()?;
    let dataset =
        generate_snapshots(&law.spec()?, &times, data.n, data.sigma, law.dt, RngStream::new(seed))?;

    let out = out_dir(args, &cfg)?;
    let path = out.join("dataset.csv");
    densityflow_core::io::write_dataset_file(&path, &dataset, &stamp(&cfg, seed))?;
    log::info!(
        "simulated {} snapshots x {} observations in {} dims (noise sigma {})",
        dataset.m(),
        dataset.n_per_snapshot(),
        dataset.dim(),
        dataset.noise_sigma()
    );
    println!("{}", path.display());
    Ok(())
}
