//! Uniform prior on a success probability, one Bernoulli observation.
//!
//! Small enough that continuous SBC can be evaluated exactly, which makes it
//! the reference for what a given test quantity can and cannot detect.

mod companion;
mod discrete;
mod family;
mod q;

pub use companion::{
    companion_family, projection_likelihood_family, required_midpoint, solve_companion_quantile, CompanionError,
};
pub use discrete::{discrete_sbc_scan, DiscreteFamily, ScanPoint, TwoPointLaw, SCAN_THRESHOLD};
pub use family::{QuantileFamily, CDF_TOLERANCE};
pub use q::{
    data_averaged_density, q_curve, q_value, residual_grid, sbc_residual, value_of_q, AnalyticQuantity, Pushforward,
    QEvaluator, QPoint, ScalarLaw, PASS_THRESHOLD,
};

use rand::Rng;
use sbc_core::{FitError, Generator, ParameterVector, PosteriorFamily, RngStream, TestQuantity};

use crate::ModelError;

/// `theta ~ uniform(0, 1)`, `y ~ Bernoulli(theta)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BernoulliModel;

impl Generator for BernoulliModel {
    type Data = u8;

    fn generate(&self, rng: &mut RngStream) -> (ParameterVector, u8) {
        let theta: f64 = rng.random();
        let y = u8::from(rng.random::<f64>() < theta);
        (ParameterVector::new(vec![theta]).expect("finite"), y)
    }
}

/// `theta_m = quantile(u_m | y)` with `u_m` uniform.
pub fn sample_family(family: &QuantileFamily, y: u8, draws: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..draws).map(|_| family.quantile(y, rng.random::<f64>())).collect()
}

#[derive(Clone, Debug)]
pub struct FamilyPosterior {
    family: QuantileFamily,
}

impl FamilyPosterior {
    pub fn new(family: QuantileFamily) -> Self {
        Self { family }
    }
}

impl PosteriorFamily<u8> for FamilyPosterior {
    fn name(&self) -> String {
        self.family.name().to_string()
    }

    fn sample(&self, y: &u8, draws: usize, _thin: usize, rng: &mut RngStream) -> Result<Vec<ParameterVector>, FitError> {
        sample_family(&self.family, *y, draws, rng)
            .into_iter()
            .map(|t| ParameterVector::new(vec![t]).map_err(|e| FitError(e.to_string())))
            .collect()
    }
}

pub fn quantity(name: &str) -> Result<TestQuantity<u8>, ModelError> {
    let q = AnalyticQuantity::from_name(name)?;
    Ok(TestQuantity::new(name, move |t: &ParameterVector, y: &u8| q.apply(t[0], *y)))
}

pub fn quantity_library() -> Vec<TestQuantity<u8>> {
    AnalyticQuantity::ALL
        .iter()
        .map(|q| quantity(q.name()).expect("listed quantity"))
        .collect()
}

/// Composite Simpson rule on `[0, 1]` with `intervals` (even) pieces.
fn simpson(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    let h = 1.0 / n as f64;
    let inner: f64 = values[1..n]
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    h / 3.0 * (values[0] + inner + values[n])
}

/// `P(rank <= i)` for `i = 0..=max_rank` implied by exact `q`:
/// `P(rank <= i | y) = integral of q(x|y) * Beta(x; i+1, M-i)`, averaged
/// over the two equally likely observations.
pub fn predicted_rank_cdf(family: &QuantileFamily, quantity: AnalyticQuantity, max_rank: u32) -> Vec<f64> {
    const INTERVALS: usize = 20_000;
    let eval = QEvaluator::new(family, quantity);
    let xs: Vec<f64> = (0..=INTERVALS).map(|k| k as f64 / INTERVALS as f64).collect();
    let avg_q: Vec<f64> = xs.iter().map(|&x| eval.averaged(x)).collect();
    let m = max_rank as i32;
    (0..=max_rank)
        .map(|i| {
            if i == max_rank {
                return 1.0;
            }
            let (a, b) = (i as f64 + 1.0, (m - i as i32) as f64);
            let ln_norm = statrs::function::beta::ln_beta(a, b);
            let integrand: Vec<f64> = xs
                .iter()
                .zip(&avg_q)
                .map(|(&x, &q)| {
                    let density = if (x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0) {
                        0.0
                    } else {
                        let left = if a > 1.0 { (a - 1.0) * x.ln() } else { 0.0 };
                        let right = if b > 1.0 { (b - 1.0) * (-x).ln_1p() } else { 0.0 };
                        (left + right - ln_norm).exp()
                    };
                    q * density
                })
                .collect();
            simpson(&integrand)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_quantile_gives_constant_draws() {
        let fam = QuantileFamily::new("const", |_| 0.3, |_| 0.3);
        let draws = sample_family(&fam, 1, 50, &mut RngStream::new(1, 1));
        assert!(draws.iter().all(|&d| d == 0.3));
    }

    #[test]
    fn correct_family_draws_match_cdf() {
        let fam = QuantileFamily::correct();
        let mut rng = RngStream::new(2, 2);
        for y in 0..2u8 {
            let mut draws = sample_family(&fam, y, 100_000, &mut rng);
            draws.sort_by(f64::total_cmp);
            let n = draws.len() as f64;
            let cdf = |s: f64| if y == 0 { 2.0 * s - s * s } else { s * s };
            let d = draws
                .iter()
                .enumerate()
                .map(|(i, &s)| ((i + 1) as f64 / n - cdf(s)).max(cdf(s) - i as f64 / n))
                .fold(0.0, f64::max);
            // KS critical value at the 0.001 level.
            assert!(d < 1.95 / n.sqrt(), "y={y} D={d}");
        }
    }

    #[test]
    fn uniform_prediction_for_correct_family() {
        let cdf = predicted_rank_cdf(&QuantileFamily::correct(), AnalyticQuantity::Projection, 10);
        for (i, p) in cdf.iter().enumerate() {
            assert!((p - (i + 1) as f64 / 11.0).abs() < 1e-9, "{i} {p}");
        }
    }

    #[test]
    fn generator_is_bernoulli() {
        let mut rng = RngStream::new(3, 0);
        let ones = (0..100_000).filter(|_| BernoulliModel.generate(&mut rng).1 == 1).count();
        assert!((ones as f64 / 100_000.0 - 0.5).abs() < 0.01);
    }
}
