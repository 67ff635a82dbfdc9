//! Isotropic Gaussian kernel: pointwise evaluation, log-domain cloud
//! convolution, and the analytic gradient used by the potential fields.

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};
use crate::vecmath::{log_sum_exp, norm_sq};

/// `K_sigma(x) = (2*pi*sigma^2)^{-d/2} * exp(-|x|^2 / (2*sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussKernel {
    sigma: f64,
    dim: usize,
}

impl GaussKernel {
    pub fn new(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        if dim == 0 {
            return Err(Error::ShapeMismatch("kernel dimension must be at least 1".into()));
        }
        Ok(GaussKernel { sigma, dim })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `log K_sigma(x)`; never under/overflows for finite `x`.
    pub fn log_eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let s2 = self.sigma * self.sigma;
        let log_norm = -0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI * s2).ln();
        log_norm - norm_sq(x) / (2.0 * s2)
    }

    /// Density value; may underflow to 0 far from the origin (use
    /// [`Self::log_eval`] in likelihood computations).
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.log_eval(x).exp()
    }

    /// Analytic gradient `-x / sigma^2 * K_sigma(x)`.
    pub fn grad_eval(&self, x: &[f64]) -> Vec<f64> {
        let k = self.eval(x);
        let scale = -k / (self.sigma * self.sigma);
        x.iter().map(|xi| scale * xi).collect()
    }

    /// Kernel-density value `(1/B) * sum_b K_sigma(query - Y_b)`.
    pub fn convolve_at(&self, cloud: &ParticleCloud, query: &[f64]) -> f64 {
        self.log_convolve_at(cloud, query).exp()
    }

    /// `log[(1/B) * sum_b K_sigma(query - Y_b)]` via log-sum-exp, stable
    /// even when every summand underflows individually.
    pub fn log_convolve_at(&self, cloud: &ParticleCloud, query: &[f64]) -> f64 {
        debug_assert_eq!(cloud.dim(), self.dim);
        debug_assert_eq!(query.len(), self.dim);
        let s2 = self.sigma * self.sigma;
        let log_norm = -0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI * s2).ln();
        let logs: Vec<f64> = cloud
            .iter()
            .map(|p| {
                let d2: f64 = p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                -d2 / (2.0 * s2)
            })
            .collect();
        log_norm + log_sum_exp(&logs) - (cloud.len() as f64).ln()
    }
}
