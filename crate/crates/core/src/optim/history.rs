//! Ledger of past outer iterates and the history-weighted drift.
//!
//! Outer iteration `k` samples against a mixture over all past states:
//! the drift at a point `z` for coordinate `j` is
//! `sum_{l<=k} w_l(k) * [grad V_j(z; state_{l-1}) + 2 alpha_l z]` with
//! `w_l(k) = eta_l * prod_{l<l'<=k} (1 - tau*eta_{l'})`. Every stored state
//! keeps its solved potentials, so no transport problem is ever re-solved
//! for a past iterate.

use crate::cloud::{EstimatorConfig, SnapshotDataset};
use crate::error::{Error, Result};
use crate::objective::{grad_vj, StatePotentials};
use crate::schedule::{history_weights, Schedule};

/// Entries whose weight falls below `max_weight * WEIGHT_FLOOR` are dropped
/// from the drift sum; they are numerically invisible.
const WEIGHT_FLOOR: f64 = 1e-10;

/// Prepared past states, in outer-iteration order: entry `l` (1-based)
/// holds the state the `l`-th outer iteration sampled from.
#[derive(Debug, Default)]
pub struct HistoryLedger {
    entries: Vec<StatePotentials>,
}

impl HistoryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, prepared: StatePotentials) {
        self.entries.push(prepared);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Prepared state of outer iteration `l` (1-based).
    pub fn entry(&self, l: usize) -> &StatePotentials {
        &self.entries[l - 1]
    }

    /// Most recently pushed entry.
    pub fn latest(&self) -> Option<&StatePotentials> {
        self.entries.last()
    }

    /// `(l, w_l(k))` pairs that survive the relative weight floor.
    pub fn active_weights(&self, schedule: &Schedule, k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.entries.len() {
            return Err(Error::ShapeMismatch(format!(
                "ledger holds {} entries, outer iteration {k} requested",
                self.entries.len()
            )));
        }
        let weights = history_weights(schedule, k);
        let max_w = weights.iter().cloned().fold(0.0f64, f64::max);
        Ok(weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w >= WEIGHT_FLOOR * max_w)
            .map(|(idx, w)| (idx + 1, w))
            .collect())
    }

    /// History-weighted drift at `z` for coordinate `j`.
    pub fn drift(
        &self,
        active: &[(usize, f64)],
        schedule: &Schedule,
        data: &SnapshotDataset,
        cfg: &EstimatorConfig,
        j: usize,
        z: &[f64],
    ) -> Result<Vec<f64>> {
        let mut g = vec![0.0; z.len()];
        for &(l, w) in active {
            let grad = grad_vj(self.entry(l), data, cfg, j, z)?;
            let alpha = schedule.alpha(l);
            for ((acc, gc), zc) in g.iter_mut().zip(&grad).zip(z) {
                *acc += w * (gc + 2.0 * alpha * zc);
            }
        }
        Ok(g)
    }
}
