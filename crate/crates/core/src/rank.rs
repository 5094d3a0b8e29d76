//! Rank of a prior draw among posterior draws, with random tie-breaking.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("no posterior values supplied")]
    Empty,
    #[error("NaN encountered in {0}")]
    NotANumber(&'static str),
}

/// `rank = n_less + k` where `k` is uniform on `0..=n_equals`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankStatistic {
    pub n_less: u32,
    pub n_equals: u32,
    pub k: u32,
    pub rank: u32,
    pub max_rank: u32,
}

/// A rank statistic tagged with the quantity it was computed for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantityRank {
    pub quantity: String,
    pub stat: RankStatistic,
}

/// Counts posterior values below and equal to `prior_value` and resolves
/// ties uniformly. Exactly one draw is taken from `rng` per call, so the
/// rng position does not depend on the data. Infinities are ordinary values.
pub fn compute_rank<R: Rng + ?Sized>(
    prior_value: f64,
    posterior_values: &[f64],
    rng: &mut R,
) -> Result<RankStatistic, RankError> {
    if posterior_values.is_empty() {
        return Err(RankError::Empty);
    }
    if prior_value.is_nan() {
        return Err(RankError::NotANumber("prior value"));
    }
    let mut n_less = 0u32;
    let mut n_equals = 0u32;
    for &v in posterior_values {
        if v.is_nan() {
            return Err(RankError::NotANumber("posterior values"));
        }
        if v < prior_value {
            n_less += 1;
        } else if v == prior_value {
            n_equals += 1;
        }
    }
    let k = rng.random_range(0..=n_equals);
    Ok(RankStatistic {
        n_less,
        n_equals,
        k,
        rank: n_less + k,
        max_rank: posterior_values.len() as u32,
    })
}
