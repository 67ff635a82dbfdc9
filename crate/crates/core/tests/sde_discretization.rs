//! Quantitative checks of the path simulator: Euler–Maruyama's weak bias
//! shrinks linearly in the step size against a closed-form law, observation
//! noise is an independent Gaussian layer on top of the paths, and the
//! drifting double-well generator actually splits mass into its two wells.

use densityflow_core::metrics::rate_slope;
use densityflow_core::sde::{
    double_well_descent_drift, euler_maruyama, generate_snapshots, ou_drift, SdeSpec,
};
use densityflow_core::{RngStream, TimeGrid};

/// For `dZ = -Z dt + dW` started at zero, the time-`T` variance is
/// `(1 - e^{-2T})/2`, while the Euler chain obeys the exact recursion
/// `v <- (1 - dt)^2 v + dt`. The gap between the two is the discretization
/// bias, which must match the recursion's prediction and vanish at a rate
/// close to O(dt).
#[test]
fn euler_bias_shrinks_linearly_in_the_step() {
    let t_end = 1.0;
    let v_exact = (1.0 - (-2.0f64 * t_end).exp()) / 2.0;
    let steps = [0.2, 0.1, 0.05];
    let n_paths = 200_000;

    let mut biases = Vec::new();
    for (case, &dt) in steps.iter().enumerate() {
        let spec = SdeSpec::new(ou_drift(1.0, vec![0.0]), 1.0, vec![0.0], 0.0).unwrap();
        let clouds = euler_maruyama(&spec, dt, t_end, n_paths, RngStream::new(800 + case as u64))
            .unwrap();
        let v_hat = clouds.last().unwrap().variance()[0];

        // The discrete chain's variance law, iterated exactly.
        let mut v_law = 0.0;
        for _ in 0..(t_end / dt).round() as usize {
            v_law = (1.0 - dt) * (1.0 - dt) * v_law + dt;
        }
        // Monte Carlo std of a variance estimate is about v * sqrt(2/n).
        let mc_tol = 4.0 * v_law * (2.0 / n_paths as f64).sqrt();
        assert!(
            (v_hat - v_law).abs() <= mc_tol,
            "dt={dt}: sampled variance {v_hat} disagrees with the chain law {v_law}"
        );
        biases.push((v_hat - v_exact).abs());
    }

    let slope = rate_slope(&steps, &biases).unwrap();
    assert!(
        (0.7..=1.3).contains(&slope),
        "bias decay slope {slope} is not close to first order"
    );
}

/// Re-running the generator with the same seed but a different noise level
/// perturbs each observation by exactly `sigma * xi` with standard normal
/// `xi`, because paths and noise draw from separate derived streams.
#[test]
fn observation_noise_is_an_independent_gaussian_layer() {
    let sigma = 0.7;
    let times = TimeGrid::new(vec![0.1, 0.5, 1.0]).unwrap();
    let spec = SdeSpec::new(ou_drift(1.0, vec![0.0, 0.0]), 1.0, vec![0.0, 0.0], 0.5).unwrap();
    let clean = generate_snapshots(&spec, &times, 5_000, 0.0, 0.01, RngStream::new(99)).unwrap();
    let noisy = generate_snapshots(&spec, &times, 5_000, sigma, 0.01, RngStream::new(99)).unwrap();

    let mut z = Vec::new();
    for (a, b) in clean.snapshots().iter().zip(noisy.snapshots()) {
        for (pa, pb) in a.as_flat().iter().zip(b.as_flat()) {
            z.push((pb - pa) / sigma);
        }
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    assert!(mean.abs() <= 4.0 / n.sqrt(), "noise layer mean {mean} off zero");
    assert!(
        (var - 1.0).abs() <= 4.0 * (2.0 / n).sqrt(),
        "noise layer variance {var} off one"
    );
    assert_eq!(noisy.noise_sigma(), sigma);
}

/// The drifting double well from the experiment setup: by t = 1.25 the mass
/// must have split into the two advertised wells near x1 = ±1.5 while the
/// second coordinate tracks the moving minimum at x2 = -t.
#[test]
fn drifting_double_well_splits_into_both_wells() {
    let tau: f64 = 0.5;
    let spec = SdeSpec::new(
        double_well_descent_drift(),
        (2.0 * tau).sqrt(),
        vec![0.0, 0.0],
        0.1,
    )
    .unwrap();
    let times = TimeGrid::new(vec![1.25]).unwrap();
    let data = generate_snapshots(&spec, &times, 2_000, 0.0, 0.005, RngStream::new(4077)).unwrap();
    let cloud = data.snapshot(0);

    let (mut left, mut right) = (0usize, 0usize);
    let mut abs_x1 = 0.0;
    for p in cloud.iter() {
        if p[0] < -0.5 {
            left += 1;
        } else if p[0] > 0.5 {
            right += 1;
        }
        abs_x1 += p[0].abs();
    }
    let frac = |c: usize| c as f64 / cloud.len() as f64;
    assert!(frac(left) >= 0.25, "left well holds only {}", frac(left));
    assert!(frac(right) >= 0.25, "right well holds only {}", frac(right));
    assert!(frac(left + right) >= 0.9, "too much mass stuck on the barrier");
    let mean_abs = abs_x1 / cloud.len() as f64;
    assert!((1.0..=1.8).contains(&mean_abs), "wells sit at |x1| = {mean_abs}");

    let mean = cloud.mean();
    let var = cloud.variance();
    assert!((mean[1] + 1.25).abs() <= 0.15, "x2 tracks {} not -1.25", mean[1]);
    assert!(var[1].sqrt() <= 0.35, "x2 spread {} too wide", var[1].sqrt());
}
