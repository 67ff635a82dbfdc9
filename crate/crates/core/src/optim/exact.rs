//! Exact coordinate descent on finite supports: each step multiplies every
//! coordinate's density by `exp(-eta_k * first_variation)` and renormalizes
//! (computed in the log domain), all coordinates updating in parallel from
//! the previous iterate.

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::vecmath::log_sum_exp;

/// A functional on tuples of probability vectors over a fixed grid,
/// exposed through its per-coordinate first variation.
pub struct GridFunctional {
    /// Grid points (context for the variation callback; not interpreted
    /// by the optimizer).
    pub support: Vec<Vec<f64>>,
    /// `(densities, j) -> dF/d rho_j` as one real per grid cell.
    pub first_variation: Box<dyn Fn(&[Vec<f64>], usize) -> Vec<f64> + Send + Sync>,
    /// Optional objective evaluator, used to log values and track the best
    /// iterate.
    pub objective: Option<Box<dyn Fn(&[Vec<f64>]) -> f64 + Send + Sync>>,
    /// Known minimum, when available, for gap reporting in experiments.
    pub known_minimum: Option<f64>,
}

/// Full iterate history of an exact run.
#[derive(Debug, Clone)]
pub struct ExactTrajectory {
    /// `iterates[k][j]` is coordinate `j` after `k` steps (`k = 0` is the
    /// initial point).
    pub iterates: Vec<Vec<Vec<f64>>>,
    /// Objective value per iterate (empty when no objective is supplied).
    pub values: Vec<f64>,
    /// Smallest recorded value.
    pub best_value: Option<f64>,
}

fn validate_density(p: &[f64], cells: usize) -> Result<()> {
    if p.len() != cells {
        return Err(Error::ShapeMismatch(format!(
            "density over {} cells, support has {cells}",
            p.len()
        )));
    }
    if p.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::ShapeMismatch(
            "initial densities must be strictly positive".into(),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::ShapeMismatch(format!("density sums to {total}, expected 1")));
    }
    Ok(())
}

/// Run the multiplicative-update scheme for the full schedule length.
pub fn cklgd_exact(
    functional: &GridFunctional,
    init: &[Vec<f64>],
    schedule: &Schedule,
) -> Result<ExactTrajectory> {
    if init.is_empty() {
        return Err(Error::ShapeMismatch("need at least one coordinate density".into()));
    }
    let cells = functional.support.len();
    for p in init {
        validate_density(p, cells)?;
    }

    let mut current: Vec<Vec<f64>> = init.to_vec();
    let mut iterates = vec![current.clone()];
    let mut values = Vec::new();
    if let Some(obj) = &functional.objective {
        values.push(obj(&current));
    }

    for k in 1..=schedule.k_max() {
        let eta = schedule.eta(k);
        // All coordinates step from the frozen previous iterate.
        let variations: Vec<Vec<f64>> =
            (0..current.len()).map(|j| (functional.first_variation)(&current, j)).collect();
        let mut next = Vec::with_capacity(current.len());
        for (p, dv) in current.iter().zip(&variations) {
            if dv.len() != cells {
                return Err(Error::ShapeMismatch(format!(
                    "first variation returned {} cells, support has {cells}",
                    dv.len()
                )));
            }
            let logs: Vec<f64> =
                p.iter().zip(dv).map(|(pc, vc)| pc.ln() - eta * vc).collect();
            let norm = log_sum_exp(&logs);
            let renormed: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
            if renormed.iter().any(|&v| v < 1e-300) {
                return Err(Error::NumericalUnderflow(format!(
                    "density cell collapsed below 1e-300 at step {k}; reduce eta"
                )));
            }
            next.push(renormed);
        }
        current = next;
        iterates.push(current.clone());
        if let Some(obj) = &functional.objective {
            values.push(obj(&current));
        }
    }

    let best_value = values.iter().cloned().fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.min(v)))
    });
    Ok(ExactTrajectory { iterates, values, best_value })
}
