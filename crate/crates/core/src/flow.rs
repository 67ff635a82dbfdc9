//! Continuous-time reconstruction between fitted snapshots.
//!
//! A fitted state only pins down the marginals at the snapshot times. To
//! evaluate the flow at an arbitrary `t` in between, draw an anchor chain
//! `x_1, ..., x_m` through the segment couplings (first anchor from the
//! uniform atom marginal, each next one from the conditional coupling row)
//! and connect consecutive anchors with Brownian bridges matching the
//! model's diffusivity `tau`. Times outside `[t_1, t_m]` are refused: the
//! construction interpolates, it never extrapolates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cloud::{ParticleCloud, TimeGrid};
use crate::eot;
use crate::error::{Error, Result};
use crate::objective::StatePotentials;
use crate::rng::{tags, RngStream};

/// One sampled anchor path: a position at every snapshot time, bridged with
/// diffusivity `tau` in between.
#[derive(Debug, Clone)]
pub struct BridgeChain {
    times: TimeGrid,
    anchors: Vec<Vec<f64>>,
    tau: f64,
}

impl BridgeChain {
    pub fn new(times: TimeGrid, anchors: Vec<Vec<f64>>, tau: f64) -> Result<Self> {
        if anchors.len() != times.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} anchors for {} snapshot times",
                anchors.len(),
                times.len()
            )));
        }
        let dim = anchors[0].len();
        if dim == 0 {
            return Err(Error::ShapeMismatch("anchors must have at least one coordinate".into()));
        }
        for a in &anchors {
            if a.len() != dim || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCoordinate(format!("anchor {a:?}")));
            }
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::ShapeMismatch(format!("diffusivity must be non-negative, got {tau}")));
        }
        Ok(BridgeChain { times, anchors, tau })
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Position of this chain at time `t`. Snapshot times return the anchor
    /// itself (no randomness consumed); interior times draw one bridge
    /// point.
    pub fn position_at(&self, t: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let ts = self.times.as_slice();
        check_range(t, self.times.first(), self.times.last())?;
        if let Some(j) = ts.iter().position(|&tj| tj == t) {
            return Ok(self.anchors[j].clone());
        }
        let hi = ts.partition_point(|&tj| tj < t);
        brownian_bridge_point(
            &self.anchors[hi - 1],
            &self.anchors[hi],
            ts[hi - 1],
            ts[hi],
            t,
            self.tau,
            rng,
        )
    }
}

fn check_range(t: f64, lo: f64, hi: f64) -> Result<()> {
    if !t.is_finite() || t < lo || t > hi {
        return Err(Error::OutOfRange { t, lo, hi });
    }
    Ok(())
}

/// Draw one point of the Brownian bridge from `(t0, x0)` to `(t1, x1)` at
/// `t`, with per-coordinate variance `tau * (t - t0)(t1 - t)/(t1 - t0)`.
/// `tau = 0` degenerates to the chord.
pub fn brownian_bridge_point(
    x0: &[f64],
    x1: &[f64],
    t0: f64,
    t1: f64,
    t: f64,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if x0.len() != x1.len() || x0.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "bridge endpoints of dims {} and {}",
            x0.len(),
            x1.len()
        )));
    }
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::NonMonotoneTimes(format!("bridge over [{t0}, {t1}]")));
    }
    check_range(t, t0, t1)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::ShapeMismatch(format!("diffusivity must be non-negative, got {tau}")));
    }
    let ratio = (t - t0) / (t1 - t0);
    let std = (tau * (t - t0) * (t1 - t) / (t1 - t0)).sqrt();
    Ok(x0
        .iter()
        .zip(x1)
        .map(|(a, b)| a + ratio * (b - a) + std * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

fn check_segments_fresh(prepared: &StatePotentials) -> Result<()> {
    for j in 0..prepared.state().m().saturating_sub(1) {
        prepared.segment(j).check_fresh()?;
    }
    Ok(())
}

/// Walk atom indices forward through the couplings up to snapshot `upto`
/// (inclusive): uniform first atom, conditional rows afterwards.
fn walk_indices(prepared: &StatePotentials, upto: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let b = prepared.state().b();
    let mut indices = Vec::with_capacity(upto + 1);
    indices.push(rng.gen_range(0..b));
    for j in 0..upto {
        let problem = prepared.segment_problem(j);
        indices.push(eot::sample_conditional(&problem, prepared.segment(j), indices[j], rng));
    }
    indices
}

/// One full anchor-index chain `i_1, ..., i_m` through the segment
/// couplings.
pub fn sample_index_chain(prepared: &StatePotentials, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    check_segments_fresh(prepared)?;
    Ok(walk_indices(prepared, prepared.state().m() - 1, rng))
}

/// One full anchor chain as positions, ready for bridging.
pub fn sample_anchor_chain(
    prepared: &StatePotentials,
    tau: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BridgeChain> {
    let indices = sample_index_chain(prepared, rng)?;
    let anchors = indices
        .iter()
        .enumerate()
        .map(|(j, &i)| prepared.state().cloud(j).point(i).to_vec())
        .collect();
    BridgeChain::new(prepared.state().times().clone(), anchors, tau)
}

/// `count` independent draws from the reconstructed time-`t` marginal.
/// Each draw walks its own anchor chain (only as far as the bracketing
/// snapshot) and, at interior times, adds one Brownian-bridge displacement.
pub fn reconstruct_marginal(
    prepared: &StatePotentials,
    tau: f64,
    t: f64,
    count: usize,
    rng: RngStream,
) -> Result<ParticleCloud> {
    if count == 0 {
        return Err(Error::ShapeMismatch("reconstruction needs at least one draw".into()));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::ShapeMismatch(format!("diffusivity must be non-negative, got {tau}")));
    }
    let state = prepared.state();
    let ts = state.times().as_slice();
    check_range(t, state.times().first(), state.times().last())?;
    check_segments_fresh(prepared)?;

    let exact = ts.iter().position(|&tj| tj == t);
    let upto = exact.unwrap_or_else(|| ts.partition_point(|&tj| tj < t));
    let draws: Vec<Result<Vec<f64>>> = (0..count)
        .into_par_iter()
        .map(|draw| {
            let mut anchor_rng = rng.derive(tags::ANCHOR).derive(draw as u64).rng();
            let indices = walk_indices(prepared, upto, &mut anchor_rng);
            match exact {
                Some(j) => Ok(state.cloud(j).point(indices[j]).to_vec()),
                None => {
                    let x0 = state.cloud(upto - 1).point(indices[upto - 1]);
                    let x1 = state.cloud(upto).point(indices[upto]);
                    let mut bridge_rng = rng.derive(tags::BRIDGE).derive(draw as u64).rng();
                    brownian_bridge_point(x0, x1, ts[upto - 1], ts[upto], t, tau, &mut bridge_rng)
                }
            }
        })
        .collect();
    let dim = state.dim();
    let mut flat = Vec::with_capacity(count * dim);
    for d in draws {
        flat.extend_from_slice(&d?);
    }
    ParticleCloud::new(dim, flat)
}
