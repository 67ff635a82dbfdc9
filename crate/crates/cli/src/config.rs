//! Strict INI-style experiment configuration.
//!
//! One flat file drives every subcommand. `[section]` headers group
//! `key = value` pairs; `#` or `;` start a comment line; a value runs to the
//! end of its line, so lists are whitespace-separated. Two rules keep runs
//! honest: unknown sections or keys are hard errors (a typo never silently
//! falls back to a default), and each command validates only the sections it
//! actually consumes, naming the offending `section.key` on failure.

use std::collections::BTreeMap;
use std::path::Path;

use densityflow_core::cloud::{BoundaryWeight, EstimatorConfig, TimeGrid};
use densityflow_core::optim::AnnealSchedule;
use densityflow_core::schedule::{scaled_schedule, Schedule};
use densityflow_core::sde::{double_well_descent_drift, ou_drift, SdeSpec};
use densityflow_core::{Error, Result};

/// The complete key surface, per section. Anything else is rejected.
const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("sde", &["kind", "tau", "dt", "theta", "center", "dim", "init_mean", "init_std"]),
    ("data", &["m", "N", "sigma", "t_end", "times"]),
    (
        "estimator",
        &["tau", "lambda", "B", "horizon", "boundary", "init", "init_mean", "init_std", "eot_tol", "eot_max_iter"],
    ),
    ("schedule", &["K", "inner", "c_h", "c_n", "eta_scale", "h"]),
    (
        "baseline",
        &["enabled", "steps", "step", "anneal_scale", "anneal_s0", "refresh_every", "loss_every"],
    ),
    ("outputs", &["dir", "checkpoints", "final_clouds", "potentials", "grids", "grid_cells"]),
    ("run", &["seed"]),
    ("reconstruct", &["times", "count"]),
    ("sweep", &["m", "N_list", "seeds", "lambda_mode", "b_mode"]),
];

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Section {
    entries: BTreeMap<String, Entry>,
}

/// A parsed configuration file plus the hash of its raw bytes (stamped into
/// every output file so artifacts can be traced back to their settings).
#[derive(Debug)]
pub struct RunConfig {
    sections: BTreeMap<String, Section>,
    hash: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Format(format!("cannot read config {}: {e}", path.display()))
        })?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Format(format!("empty section header (line {line})")));
                }
                if sections.contains_key(name) {
                    return Err(Error::Format(format!("duplicate section [{name}] (line {line})")));
                }
                sections.insert(name.to_string(), Section::default());
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Format(format!("unparseable line {line}: {trimmed:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Format(format!("missing key before '=' (line {line})")));
            }
            let Some(section) = &current else {
                return Err(Error::Format(format!(
                    "key {key:?} appears before any [section] (line {line})"
                )));
            };
            if value.is_empty() {
                return Err(Error::Format(format!("empty value for {section}.{key} (line {line})")));
            }
            let entries = &mut sections.get_mut(section).unwrap().entries;
            if entries.contains_key(key) {
                return Err(Error::Format(format!("duplicate key {section}.{key} (line {line})")));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        let cfg = RunConfig { sections, hash: fnv1a(text.as_bytes()) };
        cfg.check_known()?;
        Ok(cfg)
    }

    /// FNV-1a hash of the raw file bytes.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    fn check_known(&self) -> Result<()> {
        for (name, section) in &self.sections {
            let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| s == name) else {
                let known: Vec<&str> = KNOWN_KEYS.iter().map(|(s, _)| *s).collect();
                return Err(Error::Format(format!(
                    "unknown section [{name}]; known sections: {}",
                    known.join(", ")
                )));
            };
            for (key, entry) in &section.entries {
                if !keys.contains(&key.as_str()) {
                    return Err(Error::Format(format!(
                        "unknown key {name}.{key} (line {}); known keys: {}",
                        entry.line,
                        keys.join(", ")
                    )));
                }
            }
        }
        Ok(())
    }

    fn slice(&self, name: &'static str) -> Slice<'_> {
        Slice { name, section: self.sections.get(name) }
    }

    /// Base seed from `[run] seed` (0 when absent); the `--seed` flag wins.
    pub fn seed(&self) -> Result<u64> {
        self.slice("run").opt_u64("seed", 0)
    }
}

/// Typed accessors over one section; every error names `section.key`.
struct Slice<'a> {
    name: &'static str,
    section: Option<&'a Section>,
}

impl Slice<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.section.and_then(|s| s.entries.get(key)).map(|e| e.value.as_str())
    }

    fn req(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Format(format!("missing key {}.{key}", self.name)))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, value: &str, what: &str) -> Result<T> {
        value.parse::<T>().map_err(|_| {
            Error::Format(format!("invalid value for {}.{key}: {value:?} is not {what}", self.name))
        })
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        let v = self.req(key)?;
        self.parse(key, v, "a number")
    }

    fn opt_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => self.parse(key, v, "a number"),
            None => Ok(default),
        }
    }

    /// A required number that must be strictly positive and finite.
    fn req_pos(&self, key: &str) -> Result<f64> {
        let v = self.req_f64(key)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Format(format!(
                "invalid value for {}.{key}: must be positive, got {v}",
                self.name
            )));
        }
        Ok(v)
    }

    fn opt_pos(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.opt_f64(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Format(format!(
                "invalid value for {}.{key}: must be positive, got {v}",
                self.name
            )));
        }
        Ok(v)
    }

    fn req_usize(&self, key: &str) -> Result<usize> {
        let v = self.req(key)?;
        self.parse(key, v, "an unsigned integer")
    }

    fn opt_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(v) => self.parse(key, v, "an unsigned integer"),
            None => Ok(default),
        }
    }

    fn opt_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some(v) => self.parse(key, v, "an unsigned integer"),
            None => Ok(default),
        }
    }

    fn opt_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::Format(format!(
                "invalid value for {}.{key}: {v:?} is not \"true\" or \"false\"",
                self.name
            ))),
            None => Ok(default),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.req(key)?;
        raw.split_whitespace().map(|tok| self.parse(key, tok, "a number")).collect()
    }

    fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.req(key)?;
        raw.split_whitespace()
            .map(|tok| self.parse(key, tok, "an unsigned integer"))
            .collect()
    }

    fn forbid(&self, key: &str, reason: &str) -> Result<()> {
        if self.get(key).is_some() {
            return Err(Error::Format(format!("{}.{key} {reason}", self.name)));
        }
        Ok(())
    }
}

/// Ornstein–Uhlenbeck parameters: `dX = -theta (X - center) dt + sqrt(2 tau) dW`
/// from `N(init_mean, init_std^2 I)`, isotropic in `dim` coordinates.
#[derive(Debug, Clone)]
pub struct OuParams {
    pub theta: f64,
    pub center: f64,
    pub dim: usize,
    pub init_mean: f64,
    pub init_std: f64,
}

impl OuParams {
    /// Marginal mean at time `t` (every coordinate agrees by isotropy).
    pub fn mean_at(&self, t: f64) -> Vec<f64> {
        let m = self.center + (self.init_mean - self.center) * (-self.theta * t).exp();
        vec![m; self.dim]
    }

    /// Marginal per-coordinate variance at time `t` for diffusivity `tau`.
    pub fn variance_at(&self, tau: f64, t: f64) -> f64 {
        let decay = (-2.0 * self.theta * t).exp();
        self.init_std * self.init_std * decay + tau / self.theta * (1.0 - decay)
    }
}

#[derive(Debug, Clone)]
pub enum SdeKind {
    Ou(OuParams),
    /// The moving-double-well benchmark: gradient descent on
    /// `0.5 (x1-1.5)^2 (x1+1.5)^2 + 10 (x2+t)^2`, started from `N(0, 0.01 I)`.
    DoubleWell,
}

/// Ground-truth diffusion settings: the process, its diffusivity, and the
/// Euler–Maruyama resolution.
#[derive(Debug, Clone)]
pub struct SimLaw {
    pub kind: SdeKind,
    pub tau: f64,
    pub dt: f64,
}

impl SimLaw {
    pub fn spec(&self) -> Result<SdeSpec> {
        let diffusion = (2.0 * self.tau).sqrt();
        match &self.kind {
            SdeKind::Ou(p) => SdeSpec::new(
                ou_drift(p.theta, vec![p.center; p.dim]),
                diffusion,
                vec![p.init_mean; p.dim],
                p.init_std,
            ),
            SdeKind::DoubleWell => {
                SdeSpec::new(double_well_descent_drift(), diffusion, vec![0.0, 0.0], 0.1)
            }
        }
    }
}

/// Snapshot-generation settings (`[data]`).
#[derive(Debug, Clone)]
pub struct DataConfig {
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub t_end: f64,
    explicit_times: Option<Vec<f64>>,
}

impl DataConfig {
    /// Observation times: an explicit `times` list when given, otherwise the
    /// equal spacing `t_j = j * t_end / m` for `j = 1..=m` (the window start
    /// `t = 0` is not observed).
    pub fn times(&self) -> Result<TimeGrid> {
        match &self.explicit_times {
            Some(ts) => TimeGrid::new(ts.clone()),
            None => self.times_for(self.m),
        }
    }

    /// Equal spacing over `(0, t_end]` with `m_override` points.
    pub fn times_for(&self, m_override: usize) -> Result<TimeGrid> {
        TimeGrid::new(
            (1..=m_override).map(|j| j as f64 * self.t_end / m_override as f64).collect(),
        )
    }
}

/// How the optimizers' starting clouds are drawn.
#[derive(Debug, Clone)]
pub enum InitSpec {
    /// Jittered copies of the observations (the library default).
    Jitter,
    /// Isotropic Gaussian `N(mean, std^2 I)`, the same at every snapshot.
    Gauss { mean: f64, std: f64 },
}

/// Estimator settings (`[estimator]`) bound to a concrete dataset's noise
/// width and time span.
#[derive(Debug, Clone)]
pub struct EstimatorSettings {
    pub cfg: EstimatorConfig,
    pub b: usize,
    pub init: InitSpec,
    pub eot_tol: f64,
    pub eot_max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMode {
    Fixed(usize),
    Theory,
}

/// Outer-loop schedule settings (`[schedule]`).
#[derive(Debug, Clone)]
pub struct ScheduleSettings {
    pub k: usize,
    pub inner: InnerMode,
    pub c_h: f64,
    pub c_n: f64,
    pub eta_scale: f64,
    /// Constant Langevin step overriding the decayed `c_h * alpha_k * delta_k`
    /// sizes, for runs that fix the per-iteration sampling budget.
    pub fixed_h: Option<f64>,
}

impl ScheduleSettings {
    /// Schedule for the first `k_upto` outer iterations. Prefixes are exact:
    /// every per-iteration value depends only on its own index, so a shorter
    /// build agrees with the head of a longer one (the checkpoint/resume
    /// machinery relies on this).
    pub fn build(&self, tau: f64, k_upto: usize) -> Result<Schedule> {
        let mut sched = scaled_schedule(k_upto, tau, self.c_h, self.c_n, self.eta_scale)?;
        if let Some(h) = self.fixed_h {
            sched = sched.with_fixed_ula_step(h)?;
        }
        Ok(match self.inner {
            InnerMode::Fixed(n) => sched.with_fixed_inner(n),
            InnerMode::Theory => sched,
        })
    }

    /// Cumulative inner iterations after each outer iteration `0..=k`.
    pub fn cumulative_inner(&self, tau: f64) -> Result<Vec<usize>> {
        let sched = self.build(tau, self.k)?;
        let mut total = 0usize;
        let mut out = vec![0usize];
        for k in 1..=self.k {
            total += sched.ula_iters(k);
            out.push(total);
        }
        Ok(out)
    }
}

/// Mean-field Langevin baseline settings (`[baseline]`).
#[derive(Debug, Clone)]
pub struct BaselineSettings {
    pub enabled: bool,
    pub steps: usize,
    pub step: f64,
    pub anneal: AnnealSchedule,
    pub refresh_every: usize,
    pub loss_every: usize,
}

/// Which artifacts a fit writes (`[outputs]`).
#[derive(Debug, Clone)]
pub struct OutputFlags {
    pub dir: Option<String>,
    pub checkpoints: bool,
    pub final_clouds: bool,
    pub potentials: bool,
    pub grids: bool,
    pub grid_cells: usize,
}

#[derive(Debug, Clone)]
pub struct ReconstructSettings {
    pub times: Vec<f64>,
    pub count: usize,
}

/// How the sweep's regularization scales with the per-snapshot sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    /// `estimator.lambda` as-is for every cell.
    Fixed,
    /// `estimator.lambda / sqrt(N)`: tighter data fit as evidence grows.
    RootN,
}

/// Sweep settings (`[sweep]`).
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub m: usize,
    pub n_list: Vec<usize>,
    pub seeds: usize,
    pub lambda_mode: LambdaMode,
    /// When true, each cell uses `B = N` particles instead of `estimator.B`.
    pub b_match_n: bool,
}

impl RunConfig {
    pub fn sde(&self) -> Result<SimLaw> {
        let s = self.slice("sde");
        let kind = s.req("kind")?;
        let tau = s.req_pos("tau")?;
        let dt = s.opt_pos("dt", 0.005)?;
        let kind = match kind {
            "ou" => {
                let p = OuParams {
                    theta: s.opt_pos("theta", 1.0)?,
                    center: s.opt_f64("center", 0.0)?,
                    dim: s.opt_usize("dim", 1)?,
                    init_mean: s.opt_f64("init_mean", 0.0)?,
                    init_std: s.req_pos("init_std")?,
                };
                if p.dim == 0 {
                    return Err(Error::Format(
                        "invalid value for sde.dim: must be at least 1".into(),
                    ));
                }
                SdeKind::Ou(p)
            }
            "double_well" => {
                // The benchmark's shape and start are fixed; stray process
                // keys would be silently meaningless, so reject them.
                for key in ["theta", "center", "dim", "init_mean", "init_std"] {
                    s.forbid(key, "only applies to kind = ou")?;
                }
                SdeKind::DoubleWell
            }
            other => {
                return Err(Error::Format(format!(
                    "invalid value for sde.kind: {other:?} is not \"ou\" or \"double_well\""
                )))
            }
        };
        Ok(SimLaw { kind, tau, dt })
    }

    pub fn data(&self) -> Result<DataConfig> {
        let s = self.slice("data");
        let m = s.req_usize("m")?;
        if m == 0 {
            return Err(Error::Format("invalid value for data.m: must be at least 1".into()));
        }
        let n = s.req_usize("N")?;
        if n == 0 {
            return Err(Error::Format("invalid value for data.N: must be at least 1".into()));
        }
        let sigma = s.req_f64("sigma")?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Format(format!(
                "invalid value for data.sigma: must be non-negative, got {sigma}"
            )));
        }
        let explicit_times = match s.get("times") {
            Some(_) => {
                let ts = s.f64_list("times")?;
                if ts.len() != m {
                    return Err(Error::Format(format!(
                        "data.times lists {} entries but data.m = {m}",
                        ts.len()
                    )));
                }
                Some(ts)
            }
            None => None,
        };
        let t_end = match &explicit_times {
            Some(ts) => s.opt_pos("t_end", *ts.last().unwrap())?,
            None => s.req_pos("t_end")?,
        };
        Ok(DataConfig { m, n, sigma, t_end, explicit_times })
    }

    /// Estimator settings for a dataset with noise width `sigma` whose last
    /// snapshot sits at `t_last`. The default horizon is `t_last` itself with
    /// the last gap extended backwards, so the final snapshot keeps a
    /// positive likelihood weight even when it coincides with the horizon.
    pub fn estimator(&self, sigma: f64, t_last: f64) -> Result<EstimatorSettings> {
        let s = self.slice("estimator");
        let tau = s.req_pos("tau")?;
        let lambda = s.req_pos("lambda")?;
        let b = s.req_usize("B")?;
        if b < 2 {
            return Err(Error::Format("invalid value for estimator.B: need at least 2".into()));
        }
        let horizon = s.opt_pos("horizon", t_last)?;
        let boundary = match s.get("boundary").unwrap_or("extend") {
            "extend" => BoundaryWeight::ExtendLastGap,
            "horizon" => BoundaryWeight::HorizonTrailing,
            other => {
                return Err(Error::Format(format!(
                    "invalid value for estimator.boundary: {other:?} is not \"extend\" or \"horizon\""
                )))
            }
        };
        let init = match s.get("init").unwrap_or("jitter") {
            "jitter" => {
                s.forbid("init_mean", "only applies to init = gauss")?;
                s.forbid("init_std", "only applies to init = gauss")?;
                InitSpec::Jitter
            }
            "gauss" => InitSpec::Gauss {
                mean: s.opt_f64("init_mean", 0.0)?,
                std: s.req_pos("init_std")?,
            },
            other => {
                return Err(Error::Format(format!(
                    "invalid value for estimator.init: {other:?} is not \"jitter\" or \"gauss\""
                )))
            }
        };
        let eot_tol = s.opt_pos("eot_tol", densityflow_core::eot::DEFAULT_TOL)?;
        let eot_max_iter = s.opt_usize("eot_max_iter", densityflow_core::eot::DEFAULT_MAX_ITER)?;
        if eot_max_iter == 0 {
            return Err(Error::Format(
                "invalid value for estimator.eot_max_iter: must be at least 1".into(),
            ));
        }
        let cfg = EstimatorConfig::new(tau, lambda, sigma, horizon)
            .map_err(|e| Error::Format(format!("estimator section rejected: {e}")))?
            .with_boundary(boundary);
        Ok(EstimatorSettings { cfg, b, init, eot_tol, eot_max_iter })
    }

    pub fn schedule(&self) -> Result<ScheduleSettings> {
        let s = self.slice("schedule");
        let k = s.req_usize("K")?;
        if k == 0 {
            return Err(Error::Format("invalid value for schedule.K: must be at least 1".into()));
        }
        let inner = match s.req("inner")? {
            "theory" => InnerMode::Theory,
            spec => match spec.strip_prefix("fixed:") {
                Some(n) => InnerMode::Fixed(s.parse(
                    "inner",
                    n,
                    "an unsigned integer after \"fixed:\"",
                )?),
                None => {
                    return Err(Error::Format(format!(
                        "invalid value for schedule.inner: {spec:?} is not \"theory\" or \"fixed:<n>\""
                    )))
                }
            },
        };
        let fixed_h = match s.get("h") {
            Some(_) => Some(s.req_pos("h")?),
            None => None,
        };
        Ok(ScheduleSettings {
            k,
            inner,
            c_h: s.req_pos("c_h")?,
            c_n: s.opt_pos("c_n", 1.0)?,
            eta_scale: s.opt_pos("eta_scale", 1.0)?,
            fixed_h,
        })
    }

    pub fn baseline(&self) -> Result<BaselineSettings> {
        let s = self.slice("baseline");
        let enabled = s.opt_bool("enabled", false)?;
        let steps = s.opt_usize("steps", 0)?;
        let step = if enabled { s.req_pos("step")? } else { s.opt_pos("step", 1e-3)? };
        let anneal = AnnealSchedule::new(
            s.opt_f64("anneal_scale", 1.0)?,
            s.opt_pos("anneal_s0", 100.0)?,
        )
        .map_err(|e| Error::Format(format!("baseline section rejected: {e}")))?;
        let refresh_every = s.opt_usize("refresh_every", 50)?;
        let loss_every = s.opt_usize("loss_every", refresh_every)?;
        Ok(BaselineSettings { enabled, steps, step, anneal, refresh_every, loss_every })
    }

    pub fn outputs(&self) -> Result<OutputFlags> {
        let s = self.slice("outputs");
        Ok(OutputFlags {
            dir: s.get("dir").map(str::to_string),
            checkpoints: s.opt_bool("checkpoints", true)?,
            final_clouds: s.opt_bool("final_clouds", true)?,
            potentials: s.opt_bool("potentials", false)?,
            grids: s.opt_bool("grids", false)?,
            grid_cells: s.opt_usize("grid_cells", 200)?,
        })
    }

    pub fn reconstruct(&self) -> Result<ReconstructSettings> {
        let s = self.slice("reconstruct");
        let times = s.f64_list("times")?;
        if times.is_empty() {
            return Err(Error::Format("reconstruct.times lists no times".into()));
        }
        let count = s.opt_usize("count", 1000)?;
        if count == 0 {
            return Err(Error::Format(
                "invalid value for reconstruct.count: must be at least 1".into(),
            ));
        }
        Ok(ReconstructSettings { times, count })
    }

    /// Sweep settings; `m` falls back to `default_m` (usually `data.m`).
    pub fn sweep(&self, default_m: usize) -> Result<SweepSettings> {
        let s = self.slice("sweep");
        let m = s.opt_usize("m", default_m)?;
        if m == 0 {
            return Err(Error::Format("invalid value for sweep.m: must be at least 1".into()));
        }
        let n_list = s.usize_list("N_list")?;
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(Error::Format(
                "sweep.N_list needs at least one positive sample size".into(),
            ));
        }
        let seeds = s.opt_usize("seeds", 10)?;
        if seeds == 0 {
            return Err(Error::Format("invalid value for sweep.seeds: must be at least 1".into()));
        }
        let lambda_mode = match s.get("lambda_mode").unwrap_or("fixed") {
            "fixed" => LambdaMode::Fixed,
            "root_n" => LambdaMode::RootN,
            other => {
                return Err(Error::Format(format!(
                    "invalid value for sweep.lambda_mode: {other:?} is not \"fixed\" or \"root_n\""
                )))
            }
        };
        let b_match_n = match s.get("b_mode").unwrap_or("fixed") {
            "fixed" => false,
            "match_n" => true,
            other => {
                return Err(Error::Format(format!(
                    "invalid value for sweep.b_mode: {other:?} is not \"fixed\" or \"match_n\""
                )))
            }
        };
        Ok(SweepSettings { m, n_list, seeds, lambda_mode, b_match_n })
    }
}
