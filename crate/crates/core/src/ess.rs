//! Effective sample size by Geyer's initial monotone sequence estimator.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EssError {
    #[error("chain of length {0} is too short; need at least 10 draws")]
    TooShort(usize),
    #[error("chain contains non-finite values")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    /// The chain has zero variance; `ess` is reported as 0.
    pub degenerate: bool,
}

/// Never exceeds `1.05 * chain.len()`.
pub fn ess(chain: &[f64]) -> Result<EssEstimate, EssError> {
    let n = chain.len();
    if n < 10 {
        return Err(EssError::TooShort(n));
    }
    if chain.iter().any(|x| !x.is_finite()) {
        return Err(EssError::NonFinite);
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if c0 <= 0.0 || c0 < 1e-300 {
        return Ok(EssEstimate {
            ess: 0.0,
            degenerate: true,
        });
    }

    // Sum of paired autocorrelations while positive, forced non-increasing.
    let mut sum_pairs = 0.0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum_pairs += pair;
        prev = pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / 1.05);
    Ok(EssEstimate {
        ess: n as f64 / tau,
        degenerate: false,
    })
}
