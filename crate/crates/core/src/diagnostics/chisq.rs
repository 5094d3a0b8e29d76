//! Pearson χ² test of rank uniformity over contiguous cells.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{DiagnosticsError, RankSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Some cell expects fewer than five ranks; the p-value is unreliable.
    pub low_expected_count: bool,
}

/// Cells `j` cover ranks `floor(j(M+1)/n_bins) .. floor((j+1)(M+1)/n_bins)`,
/// each expecting `S * width / (M+1)` ranks.
pub fn chi_square_uniformity(ranks: &RankSet, n_bins: usize) -> Result<ChiSquareResult, DiagnosticsError> {
    let points = ranks.max_rank() as usize + 1;
    if n_bins == 0 || n_bins > points {
        return Err(DiagnosticsError::InvalidBins {
            got: n_bins,
            max: points,
        });
    }
    if ranks.is_empty() {
        return Err(DiagnosticsError::EmptyRankSet);
    }
    let counts = ranks.counts();
    let s = ranks.len() as f64;
    let mut statistic = 0.0;
    let mut low = false;
    for j in 0..n_bins {
        let start = j * points / n_bins;
        let end = (j + 1) * points / n_bins;
        let observed: u64 = counts[start..end].iter().sum();
        let expected = s * (end - start) as f64 / points as f64;
        low |= expected < 5.0;
        statistic += (observed as f64 - expected).powi(2) / expected;
    }
    let df = n_bins - 1;
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(statistic)
    };
    Ok(ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        p_value,
        low_expected_count: low,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn balanced_ranks_give_zero_statistic() {
        let ranks: Vec<u32> = (0..100).map(|i| i % 10).collect();
        let r = chi_square_uniformity(&RankSet::new(ranks, 9).unwrap(), 10).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert!(!r.low_expected_count);
    }

    #[test]
    fn single_bin_is_extreme() {
        let r = chi_square_uniformity(&RankSet::new(vec![0; 100], 99).unwrap(), 10).unwrap();
        assert!(r.p_value < 1e-15);
    }

    #[test]
    fn flags_sparse_cells() {
        let r = chi_square_uniformity(&RankSet::new(vec![0, 1, 2], 9).unwrap(), 10).unwrap();
        assert!(r.low_expected_count);
    }

    #[test]
    fn bin_count_validated() {
        let set = RankSet::new(vec![0, 1], 3).unwrap();
        assert!(chi_square_uniformity(&set, 0).is_err());
        assert!(chi_square_uniformity(&set, 5).is_err());
    }

    /// Under uniformity p-values are uniform; KS distance at the 1% level.
    #[test]
    fn null_p_values_are_uniform() {
        let trials = 1000;
        let mut ps: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = RngStream::new(12, t);
                let ranks: Vec<u32> = (0..500).map(|_| rng.random_range(0..=99)).collect();
                chi_square_uniformity(&RankSet::new(ranks, 99).unwrap(), 20).unwrap().p_value
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        let n = ps.len() as f64;
        let d = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| ((i + 1) as f64 / n - p).max(p - i as f64 / n))
            .fold(0.0, f64::max);
        assert!(d < 1.63 / n.sqrt(), "KS distance {d}");
    }
}
