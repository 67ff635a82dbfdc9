//! Outer-iteration schedules for the particle optimizer.
//!
//! A [`Schedule`] carries, for each outer iteration `k = 1..=K`:
//! the mirror step size `eta_k`, the quadratic-confinement (annealing)
//! weight `alpha_k`, the inner-sampler accuracy budget `delta_k`, the
//! Langevin step `h_k`, and the inner iteration count `n_k`. The default
//! generator uses `eta_k = alpha_k = k^{-1/2}`, `delta_k = k^{-3/2}`,
//! `h_k = c_h * alpha_k * delta_k`, and
//! `n_k = ceil(c_n * alpha_k^{-2} * delta_k^{-1} * log(1/delta_k))`.

use crate::error::{Error, Result};

/// Per-outer-iteration step and sampling parameters (1-based accessors).
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    eta: Vec<f64>,
    alpha: Vec<f64>,
    delta: Vec<f64>,
    ula_step: Vec<f64>,
    ula_iters: Vec<usize>,
    tau: f64,
}

impl Schedule {
    /// Build from explicit sequences; all five must share a length `K >= 1`.
    ///
    /// Validates: every entry finite and strictly positive (`ula_iters` may
    /// contain zeros, meaning "skip inner sampling"), `eta` non-increasing,
    /// and `tau * eta_k < 1` for all `k` so the multiplicative update keeps a
    /// positive exponent on the previous iterate.
    pub fn new(
        eta: Vec<f64>,
        alpha: Vec<f64>,
        delta: Vec<f64>,
        ula_step: Vec<f64>,
        ula_iters: Vec<usize>,
        tau: f64,
    ) -> Result<Self> {
        let k_max = eta.len();
        if k_max == 0 {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        for (name, seq) in [("alpha", &alpha), ("delta", &delta), ("ula_step", &ula_step)] {
            if seq.len() != k_max {
                return Err(Error::InvalidSchedule(format!(
                    "{name} has length {}, expected {k_max}",
                    seq.len()
                )));
            }
        }
        if ula_iters.len() != k_max {
            return Err(Error::InvalidSchedule(format!(
                "ula_iters has length {}, expected {k_max}",
                ula_iters.len()
            )));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidSchedule(format!("tau must be non-negative, got {tau}")));
        }
        for (name, seq) in [("eta", &eta), ("alpha", &alpha), ("delta", &delta), ("ula_step", &ula_step)]
        {
            if let Some(v) = seq.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidSchedule(format!("{name} entry {v} not positive finite")));
            }
        }
        if eta.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSchedule("eta must be non-increasing".into()));
        }
        if let Some(e) = eta.iter().find(|e| tau * **e >= 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "tau*eta = {} >= 1; rescale tau or shrink eta via an extra multiplier",
                tau * e
            )));
        }
        Ok(Schedule { eta, alpha, delta, ula_step, ula_iters, tau })
    }

    /// Number of outer iterations `K`.
    pub fn k_max(&self) -> usize {
        self.eta.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Mirror step size at outer iteration `k` (1-based).
    pub fn eta(&self, k: usize) -> f64 {
        self.eta[k - 1]
    }

    /// Quadratic-confinement weight at outer iteration `k` (1-based).
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[k - 1]
    }

    /// Inner-sampler accuracy budget at outer iteration `k` (1-based).
    pub fn delta(&self, k: usize) -> f64 {
        self.delta[k - 1]
    }

    /// Langevin step size at outer iteration `k` (1-based).
    pub fn ula_step(&self, k: usize) -> f64 {
        self.ula_step[k - 1]
    }

    /// Inner Langevin iteration count at outer iteration `k` (1-based).
    pub fn ula_iters(&self, k: usize) -> usize {
        self.ula_iters[k - 1]
    }

    /// Copy with every inner iteration count replaced by `n`.
    pub fn with_fixed_inner(mut self, n: usize) -> Self {
        self.ula_iters = vec![n; self.k_max()];
        self
    }

    /// Copy with every Langevin step size replaced by `h`. Pairs with
    /// [`Schedule::with_fixed_inner`] for experiment-style runs where a
    /// constant per-iteration sampling budget replaces the theory-decayed
    /// one; the decayed sizes remain the default.
    pub fn with_fixed_ula_step(self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "fixed Langevin step must be positive and finite, got {h}"
            )));
        }
        let mut out = self;
        out.ula_step = vec![h; out.k_max()];
        Ok(out)
    }
}

/// Default schedule: `eta_k = alpha_k = s * k^{-1/2}` (with `s` an optional
/// shrink factor, 1 by default via [`default_schedule`]), `delta_k = k^{-3/2}`,
/// `h_k = c_h * alpha_k * delta_k`, and theory-suggested inner counts
/// `n_k = ceil(c_n * alpha_k^{-2} * delta_k^{-1} * log(1/delta_k))`, clamped
/// to at least 1 (the log factor vanishes at `k = 1`).
pub fn scaled_schedule(
    k_max: usize,
    tau: f64,
    c_h: f64,
    c_n: f64,
    eta_scale: f64,
) -> Result<Schedule> {
    if k_max == 0 {
        return Err(Error::InvalidSchedule("need at least one outer iteration".into()));
    }
    if !(c_h > 0.0 && c_n > 0.0 && eta_scale > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "constants must be positive: c_h={c_h}, c_n={c_n}, eta_scale={eta_scale}"
        )));
    }
    let mut eta = Vec::with_capacity(k_max);
    let mut alpha = Vec::with_capacity(k_max);
    let mut delta = Vec::with_capacity(k_max);
    let mut ula_step = Vec::with_capacity(k_max);
    let mut ula_iters = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let kf = k as f64;
        let e = eta_scale * kf.powf(-0.5);
        let a = e;
        let d = kf.powf(-1.5);
        eta.push(e);
        alpha.push(a);
        delta.push(d);
        ula_step.push(c_h * a * d);
        let n = (c_n * a.powi(-2) * d.recip() * (1.0 / d).ln()).ceil();
        ula_iters.push((n as usize).max(1));
    }
    Schedule::new(eta, alpha, delta, ula_step, ula_iters, tau)
}

/// [`scaled_schedule`] with the canonical `eta_k = k^{-1/2}` (no shrink).
pub fn default_schedule(k_max: usize, tau: f64, c_h: f64, c_n: f64) -> Result<Schedule> {
    scaled_schedule(k_max, tau, c_h, c_n, 1.0)
}

/// History weights `w_l(k) = eta_l * prod_{l < l' <= k} (1 - tau*eta_{l'})`
/// for `l = 1..=k`: the coefficients with which past first-variation
/// potentials enter the outer-iteration-`k` sampling target.
pub fn history_weights(schedule: &Schedule, k: usize) -> Vec<f64> {
    assert!(
        k >= 1 && k <= schedule.k_max(),
        "history weights need 1 <= k <= {}, got {k}",
        schedule.k_max()
    );
    let mut w = vec![0.0; k];
    let mut prod = 1.0;
    for l in (1..=k).rev() {
        w[l - 1] = schedule.eta(l) * prod;
        prod *= 1.0 - schedule.tau() * schedule.eta(l);
    }
    w
}
