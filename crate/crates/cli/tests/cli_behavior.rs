//! End-to-end tests that drive the `densityflow` binary as a subprocess:
//! exit codes, error wording, output files, determinism, and resume.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_densityflow")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn densityflow")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited without a code")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Small OU setup shared by most tests; kept tiny so each subprocess run
/// finishes in well under a second.
const BASE_CONFIG: &str = "\
[sde]
kind = ou
tau = 0.5
init_std = 0.5

[data]
m = 3
N = 16
sigma = 0.5
t_end = 0.75

[estimator]
tau = 0.5
lambda = 0.1
B = 16

[schedule]
K = 2
inner = fixed:40
c_h = 0.0005

[run]
seed = 11
";

fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("{BASE_CONFIG}{extra}")).expect("write config");
    path
}

/// Runs simulate then fit in `dir`, returning (config path, fit output dir).
fn simulate_and_fit(dir: &Path, extra: &str) -> (PathBuf, PathBuf) {
    let config = write_config(dir, "run.ini", extra);
    let sim = dir.join("sim");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "simulate failed: {}", stderr_text(&out));
    let fit_dir = dir.join("fit");
    let dataset = sim.join("dataset.csv");
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "fit failed: {}", stderr_text(&out));
    (config, fit_dir)
}

/// Parses the numeric data rows of a CSV, skipping the header and `#` lines.
fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    text.lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|f| f.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("read dir {dir:?}: {e}"))
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn assert_dirs_byte_identical(a: &Path, b: &Path) {
    let names = sorted_files(a);
    assert_eq!(names, sorted_files(b), "directories hold different files");
    for name in names {
        let left = fs::read(a.join(&name)).unwrap();
        let right = fs::read(b.join(&name)).unwrap();
        assert_eq!(left, right, "file {name} differs between runs");
    }
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for name in sorted_files(from) {
        fs::copy(from.join(&name), to.join(&name)).unwrap();
    }
}

#[test]
fn usage_errors_exit_two_and_help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout_text(&out).contains("densityflow"));

    let out = run(&["fit", "--config", "x.ini", "--bogus"]);
    assert_eq!(code(&out), 2, "unexpected flag should be a usage error");

    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 2, "unknown subcommand should be a usage error");
}

#[test]
fn missing_required_key_is_named() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.ini");
    // [data] lacks N entirely.
    fs::write(
        &path,
        "[sde]\nkind = ou\ntau = 0.5\ninit_std = 0.5\n\n[data]\nm = 3\nsigma = 0.5\nt_end = 0.75\n",
    )
    .unwrap();
    let out = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr_text(&out).contains("missing key data.N"),
        "stderr was: {}",
        stderr_text(&out)
    );
}

#[test]
fn unknown_key_reports_line_and_candidates() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "typo.ini", "\n[outputs]\ncheckpints = true\n");
    let out = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = stderr_text(&out);
    assert!(err.contains("unknown key outputs.checkpints"), "stderr was: {err}");
    assert!(err.contains("line"), "stderr should cite the line: {err}");
    assert!(err.contains("checkpoints"), "stderr should list known keys: {err}");
}

#[test]
fn duplicate_key_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("dup.ini");
    fs::write(&path, "[sde]\nkind = ou\ntau = 0.5\ntau = 0.6\n").unwrap();
    let out = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("duplicate"), "stderr was: {}", stderr_text(&out));
}

#[test]
fn zero_threads_rejected() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "run.ini", "");
    let out = run(&["simulate", "--config", path.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("--threads"), "stderr was: {}", stderr_text(&out));
}

#[test]
fn fit_requires_dataset_flag() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "run.ini", "");
    let out = run(&["fit", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr_text(&out).contains("--dataset"),
        "stderr was: {}",
        stderr_text(&out)
    );
}

#[test]
fn simulate_noiseless_dataset_parses() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("clean.ini");
    fs::write(
        &config,
        BASE_CONFIG.replace("sigma = 0.5", "sigma = 0"),
    )
    .unwrap();
    let out_dir = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let dataset = out_dir.join("dataset.csv");
    let text = fs::read_to_string(&dataset).unwrap();
    assert!(
        text.lines().any(|l| l.starts_with("# noise_sigma=0")),
        "noiseless sigma should be recorded in the trailer"
    );
    let rows = data_rows(&dataset);
    assert_eq!(rows.len(), 3 * 16, "m snapshots of N observations each");
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn fit_writes_checkpoints_and_decreasing_loss() {
    let dir = TempDir::new().unwrap();
    let (_, fit_dir) = simulate_and_fit(dir.path(), "");

    for k in 0..=2 {
        let name = format!("checkpoint_{k:02}.csv");
        assert!(fit_dir.join(&name).exists(), "{name} missing");
    }
    assert!(fit_dir.join("dataset.csv").exists(), "fit dir should be self-contained");

    let losses = data_rows(&fit_dir.join("losses.csv"));
    assert_eq!(losses.len(), 3, "one loss row per outer iteration plus the start");
    let first = losses.first().unwrap().last().copied().unwrap();
    let last = losses.last().unwrap().last().copied().unwrap();
    assert!(
        last < first,
        "objective should decrease over the run: start {first}, end {last}"
    );
    // Inner-iteration accounting: second column is cumulative and increases
    // by the fixed per-iteration budget of 40 ULA steps.
    let cum: Vec<f64> = losses.iter().map(|r| r[1]).collect();
    assert_eq!(cum, vec![0.0, 40.0, 80.0]);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (config, fit_a) = simulate_and_fit(dir.path(), "");
    let fit_b = dir.path().join("fit_b");
    let dataset = dir.path().join("sim").join("dataset.csv");
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        fit_b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    assert_dirs_byte_identical(&fit_a, &fit_b);
}

#[test]
fn resume_from_checkpoints_matches_uninterrupted_run() {
    let dir = TempDir::new().unwrap();
    let (config, fit_dir) = simulate_and_fit(dir.path(), "");
    let reference = dir.path().join("reference");
    copy_dir(&fit_dir, &reference);

    // Simulate a crash after the first outer iteration: drop the final
    // checkpoint and every output derived from it.
    fs::remove_file(fit_dir.join("checkpoint_02.csv")).unwrap();
    fs::remove_file(fit_dir.join("losses.csv")).unwrap();
    for name in sorted_files(&fit_dir) {
        if name.starts_with("final_cloud_") {
            fs::remove_file(fit_dir.join(name)).unwrap();
        }
    }

    let dataset = dir.path().join("sim").join("dataset.csv");
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    assert_dirs_byte_identical(&reference, &fit_dir);
}

#[test]
fn thread_count_does_not_change_output_bytes() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "run.ini", "");
    let sim = dir.path().join("sim");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let dataset = sim.join("dataset.csv");

    let mut dirs = Vec::new();
    for threads in ["1", "4"] {
        let fit_dir = dir.path().join(format!("fit_t{threads}"));
        let out = run(&[
            "fit",
            "--config",
            config.to_str().unwrap(),
            "--dataset",
            dataset.to_str().unwrap(),
            "--out",
            fit_dir.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
        dirs.push(fit_dir);
    }
    assert_dirs_byte_identical(&dirs[0], &dirs[1]);
}

#[test]
fn compare_starts_both_methods_from_the_same_loss() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "run.ini",
        "\n[baseline]\nenabled = true\nsteps = 40\nstep = 0.0005\nrefresh_every = 20\nloss_every = 20\n",
    );
    let sim = dir.path().join("sim");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let cmp_dir = dir.path().join("cmp");
    let out = run(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        sim.join("dataset.csv").to_str().unwrap(),
        "--out",
        cmp_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let text = fs::read_to_string(cmp_dir.join("compare.csv")).unwrap();
    let first_of = |method: &str| -> String {
        text.lines()
            .find(|l| l.starts_with("0,") && l.contains(method))
            .unwrap_or_else(|| panic!("no step-0 row for {method}"))
            .rsplit(',')
            .next()
            .unwrap()
            .to_string()
    };
    // Both optimizers are launched from one shared initialization, so their
    // recorded starting losses must agree to the last printed digit.
    assert_eq!(first_of("cklgd"), first_of("mfld"));
}

#[test]
fn compare_without_baseline_section_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "run.ini", "");
    let sim = dir.path().join("sim");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        sim.join("dataset.csv").to_str().unwrap(),
        "--out",
        dir.path().join("cmp").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr_text(&out).contains("baseline.enabled"),
        "stderr was: {}",
        stderr_text(&out)
    );
}

#[test]
fn zero_inner_iterations_leave_state_unchanged() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("frozen.ini");
    fs::write(
        &config,
        BASE_CONFIG.replace("inner = fixed:40", "inner = fixed:0"),
    )
    .unwrap();
    let sim = dir.path().join("sim");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let fit_dir = dir.path().join("fit");
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        sim.join("dataset.csv").to_str().unwrap(),
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let init = fs::read(fit_dir.join("checkpoint_00.csv")).unwrap();
    for k in 1..=2 {
        let later = fs::read(fit_dir.join(format!("checkpoint_{k:02}.csv"))).unwrap();
        assert_eq!(init, later, "zero sampling steps must not move the particles");
    }

    let losses = data_rows(&fit_dir.join("losses.csv"));
    let totals: Vec<f64> = losses.iter().map(|r| *r.last().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] == w[1]), "loss must be flat: {totals:?}");
}

#[test]
fn reconstruct_rejects_out_of_range_time_before_writing() {
    let dir = TempDir::new().unwrap();
    let (_, fit_dir) = simulate_and_fit(dir.path(), "");
    let config = write_config(dir.path(), "recon.ini", "\n[reconstruct]\ntimes = 0.3 9.9\ncount = 50\n");
    let recon_dir = dir.path().join("recon");
    let out = run(&[
        "reconstruct",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        fit_dir.to_str().unwrap(),
        "--out",
        recon_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr_text(&out).contains("reconstructable range"),
        "stderr was: {}",
        stderr_text(&out)
    );
    // The bad time is detected up front, so the valid earlier time must not
    // have produced a stray partial file.
    let leftovers: Vec<String> = sorted_files(&recon_dir)
        .into_iter()
        .filter(|n| n.starts_with("recon_"))
        .collect();
    assert!(leftovers.is_empty(), "partial outputs written: {leftovers:?}");
}

#[test]
fn reconstruct_midpoint_mean_interpolates_anchors() {
    let dir = TempDir::new().unwrap();
    let (_, fit_dir) = simulate_and_fit(dir.path(), "");
    // Snapshot times are 0.25/0.50/0.75, so 0.375 sits halfway between the
    // first two fitted clouds. A bridge sample at the halfway point has mean
    // equal to the average of its two endpoints, and with uniform weights
    // over atoms the population mean is the average of the two cloud means.
    let config = write_config(dir.path(), "recon.ini", "\n[reconstruct]\ntimes = 0.375\ncount = 4000\n");
    let recon_dir = dir.path().join("recon");
    let out = run(&[
        "reconstruct",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        fit_dir.to_str().unwrap(),
        "--out",
        recon_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let mean_of = |path: &Path| -> f64 {
        let rows = data_rows(path);
        rows.iter().map(|r| r[1]).sum::<f64>() / rows.len() as f64
    };
    let anchor_avg = (mean_of(&fit_dir.join("final_cloud_00.csv"))
        + mean_of(&fit_dir.join("final_cloud_01.csv")))
        / 2.0;

    let rows = data_rows(&recon_dir.join("recon_00.csv"));
    assert_eq!(rows.len(), 4000);
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r[1]).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r[1] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr_mean = (var / n).sqrt();
    assert!(
        (mean - anchor_avg).abs() <= 3.0 * stderr_mean,
        "midpoint mean {mean} should match anchor average {anchor_avg} \
         within 3 standard errors ({stderr_mean})"
    );
}

#[test]
fn sweep_with_single_size_skips_slope_but_succeeds() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "run.ini", "\n[sweep]\nN_list = 12\nseeds = 2\n");
    let sweep_dir = dir.path().join("sweep");
    let out = run(&[
        "rate-sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sweep_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    assert!(
        stdout_text(&out).contains("slope skipped"),
        "stdout was: {}",
        stdout_text(&out)
    );
    let summary = fs::read_to_string(sweep_dir.join("sweep_summary.csv")).unwrap();
    assert!(
        !summary.contains("fitted_slope"),
        "no slope should be recorded for a single point"
    );
    let rows = data_rows(&sweep_dir.join("sweep.csv"));
    assert_eq!(rows.len(), 2, "one row per (size, seed) pair");
}

#[test]
fn transport_non_convergence_exits_three() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("noconv.ini");
    fs::write(
        &config,
        BASE_CONFIG.replace(
            "B = 16",
            "B = 16\neot_max_iter = 1\neot_tol = 1e-14",
        ),
    )
    .unwrap();
    let sim = dir.path().join("sim");
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", sim.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        sim.join("dataset.csv").to_str().unwrap(),
        "--out",
        dir.path().join("fit").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "numerical failures use a dedicated exit code");
    assert!(
        stderr_text(&out).contains("did not converge"),
        "stderr was: {}",
        stderr_text(&out)
    );
}

#[test]
fn outputs_carry_a_provenance_stamp() {
    let dir = TempDir::new().unwrap();
    let (_, fit_dir) = simulate_and_fit(dir.path(), "");
    let stamp_of = |path: &Path| -> String {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .find(|l| l.starts_with("# densityflow "))
            .unwrap_or_else(|| panic!("no stamp in {path:?}"))
            .to_string()
    };
    let a = stamp_of(&fit_dir.join("losses.csv"));
    let b = stamp_of(&fit_dir.join("checkpoint_00.csv"));
    assert_eq!(a, b, "all outputs of one run share the stamp");
    assert!(a.contains("config="), "{a}");
    assert!(a.contains("seed=11"), "{a}");
    // No wall-clock content: rerunning must reproduce the stamp, which the
    // byte-identity tests above already enforce file-wide.
}
