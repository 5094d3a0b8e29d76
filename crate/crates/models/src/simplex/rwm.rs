//! Adaptive random-walk Metropolis.
//!
//! Warmup starts with a spherical proposal. At a quarter and at half of
//! warmup the proposal is reshaped by the covariance of recent states; the
//! step scale is adapted toward the target acceptance rate throughout.
//! Adaptation stops after warmup so the retained chain is a proper Markov
//! chain.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use sbc_core::ess::ess;
use sbc_core::RngStream;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RwmError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("log density is not finite at the initial point")]
    BadInit,
    #[error("no proposal accepted after warmup")]
    NoAcceptance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwmConfig {
    pub warmup: usize,
    /// Draws returned after thinning.
    pub draws: usize,
    pub thin: usize,
    pub initial_scale: f64,
    pub target_acceptance: f64,
}

impl Default for RwmConfig {
    fn default() -> Self {
        Self {
            warmup: 2000,
            draws: 100,
            thin: 20,
            initial_scale: 0.5,
            target_acceptance: 0.3,
        }
    }
}

impl RwmConfig {
    fn validate(&self) -> Result<(), RwmError> {
        if self.warmup < 100 {
            return Err(RwmError::InvalidConfig("warmup must be at least 100".into()));
        }
        if self.draws == 0 || self.thin == 0 {
            return Err(RwmError::InvalidConfig("draws and thin must be positive".into()));
        }
        if !(self.initial_scale > 0.0) || !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(RwmError::InvalidConfig("scale must be positive, target acceptance in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RwmOutput {
    pub draws: Vec<Vec<f64>>,
    /// Every post-warmup state, before thinning.
    pub chain: Vec<Vec<f64>>,
    /// Acceptance rate after warmup.
    pub acceptance_rate: f64,
    /// Smallest per-coordinate ESS of the full post-warmup chain.
    pub ess_min: f64,
}

struct Chain<'a, F> {
    log_density: &'a F,
    state: Vec<f64>,
    current: f64,
}

impl<F: Fn(&[f64]) -> f64> Chain<'_, F> {
    /// One step with proposal `state + scale * L z`. Returns the acceptance
    /// probability and whether the move was taken.
    fn step(&mut self, chol: &DMatrix<f64>, scale: f64, rng: &mut RngStream) -> (f64, bool) {
        let dim = self.state.len();
        let z = DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let delta = chol * z;
        let proposal: Vec<f64> = self.state.iter().zip(delta.iter()).map(|(s, d)| s + scale * d).collect();
        let proposed = (self.log_density)(&proposal);
        let log_alpha = if proposed.is_nan() { f64::NEG_INFINITY } else { proposed - self.current };
        let alpha = log_alpha.min(0.0).exp();
        let u: f64 = rng.random();
        if u < alpha {
            self.state = proposal;
            self.current = proposed;
            (alpha, true)
        } else {
            (alpha, false)
        }
    }
}

fn covariance_cholesky(samples: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    let n = samples.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n).collect();
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]) / (n - 1.0).max(1.0);
            }
        }
    }
    for i in 0..dim {
        cov[(i, i)] += 1e-8;
    }
    match cov.clone().cholesky() {
        Some(c) => c.l(),
        None => DMatrix::identity(dim, dim),
    }
}

pub fn rwm_sample<F>(log_density: &F, init: &[f64], config: &RwmConfig, rng: &mut RngStream) -> Result<RwmOutput, RwmError>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let dim = init.len();
    let current = log_density(init);
    if !current.is_finite() {
        return Err(RwmError::BadInit);
    }
    let mut chain = Chain { log_density, state: init.to_vec(), current };

    // Covariance windows end at a quarter and a half of warmup; the scale
    // keeps adapting until warmup ends.
    let windows = [config.warmup / 4, config.warmup / 2];
    let mut chol = DMatrix::<f64>::identity(dim, dim);
    let mut log_scale = config.initial_scale.ln();
    let mut history = Vec::with_capacity(windows[1]);
    let mut stage_start = 0;
    for t in 0..config.warmup {
        if let Some(w) = windows.iter().position(|&w| w == t) {
            let from = if w == 0 { t / 2 } else { windows[0] };
            chol = covariance_cholesky(&history[from..t], dim);
            log_scale = (2.38 / (dim as f64).sqrt()).ln();
            stage_start = t;
        }
        let (alpha, _) = chain.step(&chol, log_scale.exp(), rng);
        log_scale += (alpha - config.target_acceptance) / ((t - stage_start + 1) as f64).powf(0.6);
        if t < windows[1] {
            history.push(chain.state.clone());
        }
    }

    let scale = log_scale.exp();
    let total = config.draws * config.thin;
    let mut accepted = 0usize;
    let mut trace: Vec<Vec<f64>> = vec![Vec::with_capacity(total); dim];
    let mut draws = Vec::with_capacity(config.draws);
    let mut states = Vec::with_capacity(total);
    for t in 0..total {
        if chain.step(&chol, scale, rng).1 {
            accepted += 1;
        }
        for (j, column) in trace.iter_mut().enumerate() {
            column.push(chain.state[j]);
        }
        states.push(chain.state.clone());
        if (t + 1) % config.thin == 0 {
            draws.push(chain.state.clone());
        }
    }
    if accepted == 0 {
        return Err(RwmError::NoAcceptance);
    }
    let ess_min = trace
        .iter()
        .map(|c| ess(c).map(|e| e.ess).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    Ok(RwmOutput {
        draws,
        chain: states,
        acceptance_rate: accepted as f64 / total as f64,
        ess_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_target() {
        let target = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let config = RwmConfig { draws: 10_000, thin: 5, ..Default::default() };
        let out = rwm_sample(&target, &[0.0, 0.0], &config, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(out.draws.len(), 10_000);
        for j in 0..2 {
            let xs: Vec<f64> = out.draws.iter().map(|d| d[j]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            assert!(mean.abs() < 0.05, "mean {mean}");
            assert!((var - 1.0).abs() < 0.1, "var {var}");
        }
        assert!(out.acceptance_rate > 0.15 && out.acceptance_rate < 0.5);
    }

    #[test]
    fn acceptance_depends_only_on_density_difference() {
        // Shifting the log density by a constant leaves the accept decisions unchanged.
        let a = |x: &[f64]| -0.5 * x[0] * x[0];
        let b = |x: &[f64]| -0.5 * x[0] * x[0] + 123.0;
        let config = RwmConfig { draws: 50, thin: 2, warmup: 200, ..Default::default() };
        let ra = rwm_sample(&a, &[0.3], &config, &mut RngStream::new(2, 0)).unwrap();
        let rb = rwm_sample(&b, &[0.3], &config, &mut RngStream::new(2, 0)).unwrap();
        // Only rounding in the adaptation separates the two chains.
        assert_eq!(ra.draws.len(), rb.draws.len());
        for (x, y) in ra.draws.iter().zip(&rb.draws) {
            assert!((x[0] - y[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn impossible_target_is_rejected() {
        let target = |x: &[f64]| if x[0] == 0.0 { 0.0 } else { f64::NEG_INFINITY };
        let config = RwmConfig { draws: 20, thin: 1, warmup: 100, ..Default::default() };
        assert_eq!(
            rwm_sample(&target, &[0.0], &config, &mut RngStream::new(3, 0)).unwrap_err(),
            RwmError::NoAcceptance
        );
        let nowhere = |_: &[f64]| f64::NEG_INFINITY;
        assert_eq!(rwm_sample(&nowhere, &[0.0], &config, &mut RngStream::new(3, 0)).unwrap_err(), RwmError::BadInit);
    }

    #[test]
    fn config_checks() {
        let target = |_: &[f64]| 0.0;
        let config = RwmConfig { warmup: 10, ..Default::default() };
        assert!(rwm_sample(&target, &[0.0], &config, &mut RngStream::new(4, 0)).is_err());
    }
}
