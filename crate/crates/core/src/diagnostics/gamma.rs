//! The γ statistic: twice the smallest binomial tail probability of the
//! empirical rank CDF over all evaluation points.

use serde::{Deserialize, Serialize};

use super::{DiagnosticsError, RankSet};
use crate::binomial::ln_tails;

/// γ for one rank set together with its null threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub gamma: f64,
    pub ln_gamma: f64,
    pub gamma_bar: f64,
    pub ln_gamma_bar: f64,
    /// `ln(gamma / gamma_bar)`; negative means uniformity is rejected.
    pub log_ratio: f64,
    pub sims: usize,
    pub max_rank: u32,
}

impl GammaResult {
    pub fn new(ln_gamma: f64, ln_gamma_bar: f64, sims: usize, max_rank: u32) -> Self {
        Self {
            gamma: ln_gamma.exp(),
            ln_gamma,
            gamma_bar: ln_gamma_bar.exp(),
            ln_gamma_bar,
            log_ratio: ln_gamma - ln_gamma_bar,
            sims,
            max_rank,
        }
    }

    pub fn passes(&self) -> bool {
        self.log_ratio >= 0.0
    }
}

/// Natural log of γ. Stays finite when γ itself underflows.
pub fn ln_gamma_statistic(ranks: &RankSet) -> Result<f64, DiagnosticsError> {
    if ranks.is_empty() {
        return Err(DiagnosticsError::EmptyRankSet);
    }
    Ok(ln_gamma_from_below(&ranks.counts_below(), ranks.len() as u64))
}

pub fn gamma_statistic(ranks: &RankSet) -> Result<f64, DiagnosticsError> {
    ln_gamma_statistic(ranks).map(f64::exp)
}

/// `below[i-1] = #{ranks < i}`; the final point `i = M+1` always contributes 1.
pub(crate) fn ln_gamma_from_below(below: &[u64], sims: u64) -> f64 {
    let points = below.len();
    let mut min = 0.0f64;
    for (idx, &count) in below.iter().enumerate().take(points.saturating_sub(1)) {
        let z = (idx + 1) as f64 / points as f64;
        let (lower, upper) = ln_tails(sims, z, count);
        min = min.min(lower).min(upper);
    }
    std::f64::consts::LN_2 + min
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Brute-force γ: binomial pmfs summed term by term. The upper tail
    /// `1 - Bin(R-1)` is summed directly to avoid cancellation.
    fn oracle(ranks: &[u32], max_rank: u32) -> f64 {
        let s = ranks.len() as u64;
        let pmf = |k: u64, z: f64| -> f64 {
            let ln_choose: f64 = (1..=k).map(|j| ((s - j + 1) as f64 / j as f64).ln()).sum();
            (ln_choose + k as f64 * z.ln() + (s - k) as f64 * (1.0 - z).ln()).exp()
        };
        let mut best = f64::INFINITY;
        for i in 1..=max_rank {
            let z = i as f64 / (max_rank + 1) as f64;
            let r = ranks.iter().filter(|&&x| x < i).count() as u64;
            let lower: f64 = (0..=r).map(|k| pmf(k, z)).sum();
            let upper: f64 = (r..=s).map(|k| pmf(k, z)).sum();
            best = best.min(lower).min(upper);
        }
        // i = M + 1 has z = 1 and contributes min(1, 1).
        2.0 * best.min(1.0)
    }

    #[test]
    fn hand_computed_examples() {
        let set = RankSet::new(vec![0; 10], 1).unwrap();
        assert!((gamma_statistic(&set).unwrap() - 2f64.powi(-9)).abs() < 1e-15);
        let set = RankSet::new(vec![0], 1).unwrap();
        assert!((gamma_statistic(&set).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_is_error() {
        let set = RankSet::new(vec![], 4).unwrap();
        assert_eq!(gamma_statistic(&set), Err(DiagnosticsError::EmptyRankSet));
    }

    #[test]
    fn agrees_with_summation_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let s = rng.random_range(1..=200usize);
            let m = rng.random_range(1..=50u32);
            // Skewing toward low ranks produces a mix of passing and failing sets.
            let power: f64 = rng.random_range(0.3..3.0);
            let ranks: Vec<u32> = (0..s)
                .map(|_| ((rng.random::<f64>().powf(power)) * (m + 1) as f64).floor().min(m as f64) as u32)
                .collect();
            let expected = oracle(&ranks, m);
            let got = gamma_statistic(&RankSet::new(ranks, m).unwrap()).unwrap();
            let rel = (got - expected).abs() / expected;
            worst = worst.max(rel);
        }
        assert!(worst < 1e-12, "worst relative error {worst}");
    }

    #[test]
    fn extreme_sets_stay_in_log_space() {
        let set = RankSet::new(vec![0; 5000], 100).unwrap();
        let ln = ln_gamma_statistic(&set).unwrap();
        assert!(ln.is_finite() && ln < -1000.0);
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut ranks in prop::collection::vec(0u32..=20, 1..80), seed in any::<u64>()) {
            let a = gamma_statistic(&RankSet::new(ranks.clone(), 20).unwrap()).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for i in (1..ranks.len()).rev() {
                let j = rng.random_range(0..=i);
                ranks.swap(i, j);
            }
            let b = gamma_statistic(&RankSet::new(ranks, 20).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn bounded(ranks in prop::collection::vec(0u32..=10, 1..50)) {
            let g = gamma_statistic(&RankSet::new(ranks, 10).unwrap()).unwrap();
            prop_assert!(g > 0.0 && g <= 2.0);
        }
    }
}
