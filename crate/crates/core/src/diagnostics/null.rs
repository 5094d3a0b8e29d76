//! Monte Carlo null distribution of γ under uniform ranks.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;

use super::gamma::GammaResult;
use super::{ln_gamma_statistic, DiagnosticsError, RankSet};
use crate::binomial::TailTable;
use crate::rng::RngStream;

pub const DEFAULT_N_MC: usize = 5000;
/// Seed of the library's null streams. Thresholds are a property of
/// `(S, M)`, not of an experiment, so they share one fixed seed.
pub const NULL_SEED: u64 = 0x5bc_0001;
const MIN_N_MC: usize = 1000;

/// Precomputed log tails for every evaluation point of an `(S, M)` pair.
pub(crate) struct GammaTable {
    rows: Vec<TailTable>,
}

impl GammaTable {
    pub(crate) fn new(sims: u64, max_rank: u32) -> Self {
        let points = max_rank as usize + 1;
        let rows = (1..points)
            .map(|i| TailTable::new(sims, i as f64 / points as f64))
            .collect();
        Self { rows }
    }

    /// Same value as the direct computation, by table lookup.
    pub(crate) fn ln_gamma(&self, below: &[u64]) -> f64 {
        let mut min = 0.0f64;
        for (row, &count) in self.rows.iter().zip(below) {
            let k = count as usize;
            min = min.min(row.ln_lower(k)).min(row.ln_upper(k));
        }
        std::f64::consts::LN_2 + min
    }
}

fn check_args(level: f64, n_mc: usize) -> Result<(), DiagnosticsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(DiagnosticsError::InvalidLevel(level));
    }
    if n_mc < MIN_N_MC {
        return Err(DiagnosticsError::TooFewReplicates {
            min: MIN_N_MC,
            got: n_mc,
        });
    }
    Ok(())
}

/// Sorted `ln γ` of `n_mc` uniform rank sets of size `sims`. Replicate `r`
/// draws from `rng.derive(r)`, so the result does not depend on threading.
pub(crate) fn null_ln_gammas(sims: usize, max_rank: u32, n_mc: usize, rng: &RngStream) -> Vec<f64> {
    let table = GammaTable::new(sims as u64, max_rank);
    let mut values: Vec<f64> = (0..n_mc as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng.derive(r);
            let mut counts = vec![0u64; max_rank as usize + 1];
            for _ in 0..sims {
                counts[stream.random_range(0..=max_rank) as usize] += 1;
            }
            let mut acc = 0;
            for c in counts.iter_mut() {
                acc += *c;
                *c = acc;
            }
            table.ln_gamma(&counts)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Empirical `level` quantile: the `ceil(level * n)`-th smallest value.
pub(crate) fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let idx = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

pub fn ln_gamma_null_quantile(
    sims: usize,
    max_rank: u32,
    level: f64,
    n_mc: usize,
    rng: &RngStream,
) -> Result<f64, DiagnosticsError> {
    check_args(level, n_mc)?;
    if sims == 0 {
        return Err(DiagnosticsError::EmptyRankSet);
    }
    Ok(empirical_quantile(&null_ln_gammas(sims, max_rank, n_mc, rng), level))
}

/// The `level` quantile of γ for `sims` uniform ranks on `0..=max_rank`.
pub fn gamma_null_quantile(
    sims: usize,
    max_rank: u32,
    level: f64,
    n_mc: usize,
    rng: &RngStream,
) -> Result<f64, DiagnosticsError> {
    ln_gamma_null_quantile(sims, max_rank, level, n_mc, rng).map(f64::exp)
}

/// Computes and caches γ̄ per `(S, M)`.
pub struct NullCalibrator {
    level: f64,
    n_mc: usize,
    seed: u64,
    cache: Mutex<HashMap<(usize, u32), f64>>,
}

impl Default for NullCalibrator {
    fn default() -> Self {
        Self::new(0.05, DEFAULT_N_MC, NULL_SEED).expect("defaults are valid")
    }
}

impl NullCalibrator {
    pub fn new(level: f64, n_mc: usize, seed: u64) -> Result<Self, DiagnosticsError> {
        check_args(level, n_mc)?;
        Ok(Self {
            level,
            n_mc,
            seed,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    pub fn stream(&self, sims: usize, max_rank: u32) -> RngStream {
        RngStream::new(self.seed, ((sims as u64) << 32) | max_rank as u64)
    }

    /// `ln γ̄` for `sims` ranks on `0..=max_rank`.
    pub fn ln_threshold(&self, sims: usize, max_rank: u32) -> Result<f64, DiagnosticsError> {
        if sims == 0 {
            return Err(DiagnosticsError::EmptyRankSet);
        }
        if let Some(&v) = self.cache.lock().unwrap().get(&(sims, max_rank)) {
            return Ok(v);
        }
        // Computed outside the lock; concurrent misses produce the same value.
        let rng = self.stream(sims, max_rank);
        let v = ln_gamma_null_quantile(sims, max_rank, self.level, self.n_mc, &rng)?;
        self.cache.lock().unwrap().insert((sims, max_rank), v);
        Ok(v)
    }

    pub fn assess(&self, ranks: &RankSet) -> Result<GammaResult, DiagnosticsError> {
        let ln_gamma = ln_gamma_statistic(ranks)?;
        let ln_bar = self.ln_threshold(ranks.len(), ranks.max_rank())?;
        Ok(GammaResult::new(ln_gamma, ln_bar, ranks.len(), ranks.max_rank()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct() {
        let mut rng = RngStream::new(4, 4);
        let table = GammaTable::new(300, 30);
        for _ in 0..50 {
            let ranks: Vec<u32> = (0..300).map(|_| rng.random_range(0..=30)).collect();
            let set = RankSet::new(ranks, 30).unwrap();
            let direct = ln_gamma_statistic(&set).unwrap();
            let looked_up = table.ln_gamma(&set.counts_below());
            assert!((direct - looked_up).abs() < 1e-9 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn quantile_monotone_in_level() {
        let rng = RngStream::new(1, 1);
        let lo = ln_gamma_null_quantile(200, 20, 0.05, 2000, &rng).unwrap();
        let hi = ln_gamma_null_quantile(200, 20, 0.5, 2000, &rng).unwrap();
        assert!(lo <= hi);
    }

    #[test]
    fn stable_across_seeds() {
        let a = gamma_null_quantile(1000, 100, 0.05, 5000, &RngStream::new(1, 0)).unwrap();
        let b = gamma_null_quantile(1000, 100, 0.05, 5000, &RngStream::new(2, 0)).unwrap();
        assert!((a - b).abs() / a.max(b) < 0.15, "{a} vs {b}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let rng = RngStream::new(0, 0);
        assert!(gamma_null_quantile(10, 5, 0.0, 2000, &rng).is_err());
        assert!(gamma_null_quantile(10, 5, 0.05, 10, &rng).is_err());
    }

    #[test]
    fn null_rejection_rate_matches_level() {
        let calibrator = NullCalibrator::default();
        let ln_bar = calibrator.ln_threshold(500, 100).unwrap();
        let trials = 1000;
        let rejected = (0..trials)
            .filter(|&t| {
                let mut rng = RngStream::new(777, t);
                let ranks: Vec<u32> = (0..500).map(|_| rng.random_range(0..=100)).collect();
                ln_gamma_statistic(&RankSet::new(ranks, 100).unwrap()).unwrap() < ln_bar
            })
            .count();
        let rate = rejected as f64 / trials as f64;
        assert!((rate - 0.05).abs() <= 0.02, "rejection rate {rate}");
    }

    #[test]
    fn cache_returns_same_value() {
        let c = NullCalibrator::new(0.05, 1000, 3).unwrap();
        let a = c.ln_threshold(50, 10).unwrap();
        let b = c.ln_threshold(50, 10).unwrap();
        assert_eq!(a, b);
    }
}
