//! Uniformity diagnostics on rank sets.

mod band;
mod chisq;
mod evolution;
mod gamma;
mod null;
mod split;

pub use band::{ecdf_band, EcdfBand};
pub use chisq::{chi_square_uniformity, ChiSquareResult};
pub use evolution::{evolution_trace, EvolutionPoint, EvolutionTrace, DEFAULT_STEP};
pub use gamma::{gamma_statistic, ln_gamma_statistic, GammaResult};
pub use null::{gamma_null_quantile, ln_gamma_null_quantile, NullCalibrator, DEFAULT_N_MC, NULL_SEED};
pub use split::{split_ranks, SplitRanks};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("rank {rank} outside 0..={max_rank}")]
    RankOutOfRange { rank: u32, max_rank: u32 },
    #[error("rank set is empty")]
    EmptyRankSet,
    #[error("level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),
    #[error("at least {min} Monte Carlo replicates required, got {got}")]
    TooFewReplicates { min: usize, got: usize },
    #[error("step must be at least 1")]
    InvalidStep,
    #[error("number of bins must lie in 1..={max}, got {got}")]
    InvalidBins { got: usize, max: usize },
}

/// Ranks of one quantity across simulations, each in `0..=max_rank`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSet {
    ranks: Vec<u32>,
    max_rank: u32,
}

impl RankSet {
    pub fn new(ranks: Vec<u32>, max_rank: u32) -> Result<Self, DiagnosticsError> {
        if let Some(&rank) = ranks.iter().find(|&&r| r > max_rank) {
            return Err(DiagnosticsError::RankOutOfRange { rank, max_rank });
        }
        Ok(Self { ranks, max_rank })
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn max_rank(&self) -> u32 {
        self.max_rank
    }

    /// Number of ranks (simulations).
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// The first `n` ranks.
    pub fn prefix(&self, n: usize) -> RankSet {
        RankSet {
            ranks: self.ranks[..n.min(self.ranks.len())].to_vec(),
            max_rank: self.max_rank,
        }
    }

    /// Histogram over `0..=max_rank`.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.max_rank as usize + 1];
        for &r in &self.ranks {
            counts[r as usize] += 1;
        }
        counts
    }

    /// `below[i-1] = #{ranks < i}` for `i` in `1..=max_rank+1`.
    pub fn counts_below(&self) -> Vec<u64> {
        let mut acc = 0;
        self.counts()
            .into_iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect()
    }
}
