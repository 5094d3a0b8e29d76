//! `ln(γ/γ̄)` recomputed on growing prefixes of a rank sequence.

use serde::{Deserialize, Serialize};

use super::gamma::ln_gamma_from_below;
use super::{DiagnosticsError, NullCalibrator, RankSet};

pub const DEFAULT_STEP: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionPoint {
    pub n_sims: usize,
    pub quantity: String,
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub points: Vec<EvolutionPoint>,
}

impl EvolutionTrace {
    /// Smallest prefix length at which uniformity is rejected.
    pub fn first_rejection(&self) -> Option<usize> {
        self.points.iter().find(|p| p.log_ratio < 0.0).map(|p| p.n_sims)
    }

    /// True when some prefix of at most `horizon` simulations is rejected.
    pub fn fails_within(&self, horizon: usize) -> bool {
        self.first_rejection().is_some_and(|n| n <= horizon)
    }

    pub fn final_log_ratio(&self) -> Option<f64> {
        self.points.last().map(|p| p.log_ratio)
    }

    /// Log ratio of the longest evaluated prefix not exceeding `n`.
    pub fn log_ratio_at(&self, n: usize) -> Option<f64> {
        self.points.iter().take_while(|p| p.n_sims <= n).last().map(|p| p.log_ratio)
    }
}

/// Evaluates prefixes of length `step, 2*step, ...` and always the full set.
/// `ranks` must be ordered by simulation index.
pub fn evolution_trace(
    ranks: &RankSet,
    quantity: &str,
    step: usize,
    calibrator: &NullCalibrator,
) -> Result<EvolutionTrace, DiagnosticsError> {
    if step == 0 {
        return Err(DiagnosticsError::InvalidStep);
    }
    if ranks.is_empty() {
        return Err(DiagnosticsError::EmptyRankSet);
    }
    let total = ranks.len();
    let mut lengths: Vec<usize> = (1..=total / step).map(|k| k * step).collect();
    if lengths.last() != Some(&total) {
        lengths.push(total);
    }

    let mut counts = vec![0u64; ranks.max_rank() as usize + 1];
    let mut consumed = 0;
    let mut points = Vec::with_capacity(lengths.len());
    for n in lengths {
        for &r in &ranks.ranks()[consumed..n] {
            counts[r as usize] += 1;
        }
        consumed = n;
        let mut acc = 0;
        let below: Vec<u64> = counts
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        let ln_gamma = ln_gamma_from_below(&below, n as u64);
        let ln_bar = calibrator.ln_threshold(n, ranks.max_rank())?;
        points.push(EvolutionPoint {
            n_sims: n,
            quantity: quantity.to_string(),
            log_ratio: ln_gamma - ln_bar,
        });
    }
    Ok(EvolutionTrace { points })
}
