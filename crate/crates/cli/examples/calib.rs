//! Scratch calibration harness for the double-well experiment; not part of
//! the shipped interface.

use densityflow_core::cloud::{BoundaryWeight, EstimatorConfig};
use densityflow_core::optim::{
    inexact_cklgd, mfld_baseline, AnnealSchedule, BaselineOptions, FitOptions, InitMode,
};
use densityflow_core::schedule::Schedule;
use densityflow_core::sde::{double_well_descent_drift, generate_snapshots, SdeSpec};
use densityflow_core::RngStream;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let k_outer: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let h_cap: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let h_scale: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let anneal_scale: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(6.0);
    let anneal_s0: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let mfld_step: f64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let lambda: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(0.01);

    let tau: f64 = 0.25;
    let times = densityflow_core::cloud::TimeGrid::new(
        (1..=8).map(|j| j as f64 * 1.25 / 8.0).collect(),
    )
    .unwrap();
    let spec = SdeSpec::new(
        double_well_descent_drift(),
        (2.0 * tau).sqrt(),
        vec![0.0, 0.0],
        0.1,
    )
    .unwrap();

    let cfg = EstimatorConfig {
        tau,
        lambda,
        sigma: 0.5,
        horizon: 1.25,
        boundary: BoundaryWeight::ExtendLastGap,
    };
    let opts = FitOptions {
        eot_tol: 1e-6,
        eot_max_iter: 60_000,
        record_losses: true,
        ..FitOptions::default()
    };

    for seed in 1..=seeds {
        let rng = RngStream::new(seed);
        let data = generate_snapshots(&spec, &times, 64, 0.5, 0.0025, rng).unwrap();

        // eta_k = alpha_k = k^{-1/2}, delta_k = k^{-3/2},
        // h_k = min(h_cap, h_scale * alpha_k * delta_k), n_k = 500.
        let mut eta = Vec::new();
        let mut alpha = Vec::new();
        let mut delta = Vec::new();
        let mut hs = Vec::new();
        for k in 1..=k_outer {
            let kf = k as f64;
            let e = kf.powf(-0.5);
            eta.push(e);
            alpha.push(e);
            delta.push(kf.powf(-1.5));
            hs.push(h_cap.min(h_scale * e * kf.powf(-1.5)));
        }
        let sched =
            Schedule::new(eta, alpha, delta, hs.clone(), vec![500; k_outer], tau).unwrap();

        let t0 = std::time::Instant::now();
        let fit = inexact_cklgd(&data, &cfg, &sched, 64, &InitMode::JitteredData, rng, &opts);
        match &fit {
            Ok(fit) => {
                let tot: Vec<String> =
                    fit.losses.iter().map(|l| format!("{:.3}", l.total)).collect();
                println!(
                    "seed {seed} cklgd h={hs:?} losses=[{}] ({:.1}s)",
                    tot.join(", "),
                    t0.elapsed().as_secs_f64()
                );
                // Mode structure of the final-time cloud after 4 outer
                // iterations (half-plane split on the first coordinate).
                let state4 = &fit.states[4.min(fit.states.len() - 1)];
                let cloud = state4.cloud(state4.m() - 1);
                let (mut neg, mut pos) = (Vec::new(), Vec::new());
                for p in cloud.iter() {
                    if p[0] < 0.0 {
                        neg.push(p.to_vec());
                    } else {
                        pos.push(p.to_vec());
                    }
                }
                let mean = |v: &Vec<Vec<f64>>| -> (f64, f64) {
                    let n = v.len().max(1) as f64;
                    (
                        v.iter().map(|p| p[0]).sum::<f64>() / n,
                        v.iter().map(|p| p[1]).sum::<f64>() / n,
                    )
                };
                let (mn, mp) = (mean(&neg), mean(&pos));
                let dn = ((mn.0 + 1.5).powi(2) + (mn.1 + 1.25).powi(2)).sqrt();
                let dp = ((mp.0 - 1.5).powi(2) + (mp.1 + 1.25).powi(2)).sqrt();
                println!(
                    "seed {seed} modes k=4: neg {}/{} d={dn:.3} pos {}/{} d={dp:.3}",
                    neg.len(),
                    cloud.len(),
                    pos.len(),
                    cloud.len()
                );
            }
            Err(e) => println!("seed {seed} cklgd FAILED: {e}"),
        }

        let t0 = std::time::Instant::now();
        let anneal = AnnealSchedule::new(anneal_scale, anneal_s0).unwrap();
        let bopts = BaselineOptions {
            refresh_every: 50,
            loss_every: 500,
            fit: opts.clone(),
        };
        let base = mfld_baseline(
            &data,
            &cfg,
            64,
            2000,
            mfld_step,
            &anneal,
            &InitMode::JitteredData,
            rng,
            &bopts,
        );
        match &base {
            Ok(run) => {
                let tot: Vec<String> =
                    run.losses.iter().map(|(s, l)| format!("{s}:{:.3}", l.total)).collect();
                println!(
                    "seed {seed} mfld  scale={anneal_scale} s0={anneal_s0} step={mfld_step} losses=[{}] ({:.1}s)",
                    tot.join(", "),
                    t0.elapsed().as_secs_f64()
                );
            }
            Err(e) => println!("seed {seed} mfld FAILED: {e}"),
        }
    }
}
