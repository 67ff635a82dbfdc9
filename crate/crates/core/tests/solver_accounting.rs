//! Verifies the promised transport-solve budget of both optimizers against
//! the process-global solve counter. Kept in its own binary with a single
//! test function: the counter is shared per process, so nothing else may run
//! concurrently while deltas are measured.

use densityflow_core::cloud::{EstimatorConfig, SnapshotDataset};
use densityflow_core::eot::solve_count;
use densityflow_core::optim::{
    inexact_cklgd, mfld_baseline, AnnealSchedule, BaselineOptions, FitOptions, InitMode,
};
use densityflow_core::{default_schedule, ParticleCloud, RngStream, TimeGrid};
use rand::Rng;
use rand_distr::StandardNormal;

fn tiny_dataset() -> (SnapshotDataset, EstimatorConfig) {
    let mut rng = RngStream::new(5150).rng();
    let times = TimeGrid::new(vec![0.0, 0.3, 0.6]).unwrap();
    let clouds = (0..3)
        .map(|_| {
            let data = (0..8 * 2)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            ParticleCloud::new(2, data).unwrap()
        })
        .collect();
    let data = SnapshotDataset::new(times, clouds, 0.0).unwrap();
    let cfg = EstimatorConfig::new(0.5, 0.5, 0.5, 0.9).unwrap();
    (data, cfg)
}

#[test]
fn optimizers_spend_exactly_the_promised_transport_solves() {
    let (data, cfg) = tiny_dataset();
    let segments = 2; // m - 1
    let k_outer = 3;
    let schedule = default_schedule(k_outer, 0.5, 0.05, 1.0)
        .unwrap()
        .with_fixed_inner(3);

    // Outer-loop fit with loss recording: one potentials build per outer
    // state including the initial one, plus one for the final state.
    let before = solve_count();
    inexact_cklgd(
        &data,
        &cfg,
        &schedule,
        8,
        &InitMode::JitteredData,
        RngStream::new(1),
        &FitOptions::default(),
    )
    .unwrap();
    let spent = solve_count() - before;
    assert_eq!(spent, ((k_outer + 1) * segments) as u64);

    // Without loss recording the final extra build disappears.
    let before = solve_count();
    inexact_cklgd(
        &data,
        &cfg,
        &schedule,
        8,
        &InitMode::JitteredData,
        RngStream::new(1),
        &FitOptions {
            record_losses: false,
            ..FitOptions::default()
        },
    )
    .unwrap();
    let spent = solve_count() - before;
    assert_eq!(spent, (k_outer * segments) as u64);

    // Baseline: potentials refresh every `refresh_every` steps (at steps 1,
    // 11, 21 for 30 steps) plus one final build for the closing loss row.
    let before = solve_count();
    mfld_baseline(
        &data,
        &cfg,
        8,
        30,
        1e-3,
        &AnnealSchedule::default(),
        &InitMode::JitteredData,
        RngStream::new(2),
        &BaselineOptions {
            refresh_every: 10,
            loss_every: 10,
            ..BaselineOptions::default()
        },
    )
    .unwrap();
    let spent = solve_count() - before;
    assert_eq!(spent, (4 * segments) as u64);
}
