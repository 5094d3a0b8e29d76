//! Simultaneous prediction band for the rank ECDF under uniformity.

use serde::{Deserialize, Serialize};

use super::null::{empirical_quantile, null_ln_gammas};
use super::{DiagnosticsError, RankSet};
use crate::binomial::ln_tails;
use crate::rng::RngStream;

/// Bounds on `#{ranks < i}` for `i = 1..=M+1`.
///
/// A rank set lies inside the band exactly when its γ is at least `alpha`,
/// so the band's coverage is that of the γ test at level `1 - coverage`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcdfBand {
    pub sims: usize,
    pub max_rank: u32,
    pub coverage: f64,
    /// Pointwise two-sided level; each tail gets `alpha / 2`.
    pub alpha: f64,
    pub lower: Vec<u64>,
    pub upper: Vec<u64>,
}

impl EcdfBand {
    pub fn contains(&self, ranks: &RankSet) -> bool {
        ranks
            .counts_below()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(c, (lo, hi))| lo <= c && c <= hi)
    }
}

pub fn ecdf_band(
    sims: usize,
    max_rank: u32,
    coverage: f64,
    n_mc: usize,
    rng: &RngStream,
) -> Result<EcdfBand, DiagnosticsError> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(DiagnosticsError::InvalidLevel(coverage));
    }
    if sims == 0 {
        return Err(DiagnosticsError::EmptyRankSet);
    }
    let level = 1.0 - coverage;
    let ln_alpha = if (level * n_mc as f64).floor() == 0.0 {
        // Too few replicates to resolve the tail: the band is trivial.
        f64::NEG_INFINITY
    } else {
        empirical_quantile(&null_ln_gammas(sims, max_rank, n_mc, rng), level)
    };
    let ln_half = ln_alpha - std::f64::consts::LN_2;

    let points = max_rank as usize + 1;
    let n = sims as u64;
    let mut lower = Vec::with_capacity(points);
    let mut upper = Vec::with_capacity(points);
    for i in 1..=points {
        let z = i as f64 / points as f64;
        let expected = n as f64 * z;
        let lo = (0..=n).find(|&k| ln_tails(n, z, k).0 >= ln_half).unwrap_or(n);
        let hi = (0..=n).rev().find(|&k| ln_tails(n, z, k).1 >= ln_half).unwrap_or(0);
        lower.push(lo.min(expected.floor() as u64));
        upper.push(hi.max(expected.ceil() as u64).min(n));
    }
    Ok(EcdfBand {
        sims,
        max_rank,
        coverage,
        alpha: ln_alpha.exp(),
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn full_coverage_limit_is_trivial() {
        let band = ecdf_band(50, 9, 0.9999, 1000, &RngStream::new(1, 1)).unwrap();
        assert!(band.lower.iter().all(|&l| l == 0));
        assert!(band.upper.iter().all(|&u| u == 50));
    }

    #[test]
    fn band_is_ordered_and_contains_expectation() {
        let band = ecdf_band(200, 19, 0.95, 2000, &RngStream::new(2, 2)).unwrap();
        for (i, (lo, hi)) in band.lower.iter().zip(&band.upper).enumerate() {
            let expected = 200.0 * (i + 1) as f64 / 20.0;
            assert!(lo <= hi && *hi <= 200);
            assert!(*lo as f64 <= expected && expected <= *hi as f64);
        }
        assert_eq!(*band.lower.last().unwrap(), 200);
    }

    #[test]
    fn uniform_sets_covered_at_nominal_rate() {
        let band = ecdf_band(300, 30, 0.95, 5000, &RngStream::new(3, 3)).unwrap();
        let trials = 1000;
        let inside = (0..trials)
            .filter(|&t| {
                let mut rng = RngStream::new(99, t);
                let ranks: Vec<u32> = (0..300).map(|_| rng.random_range(0..=30)).collect();
                band.contains(&RankSet::new(ranks, 30).unwrap())
            })
            .count();
        let rate = inside as f64 / trials as f64;
        assert!((rate - 0.95).abs() <= 0.03, "coverage {rate}");
    }
}
