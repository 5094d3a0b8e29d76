//! Bivariate normal model with known covariance, its exact conjugate
//! posterior, and a set of deliberately broken posteriors.

use rand::Rng;
use rand_distr::StandardNormal;
use sbc_core::{FitError, Generator, ParameterVector, PosteriorFamily, RngStream, TestQuantity};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ModelError;

/// Off-diagonal of the fixed covariance `[[1, r], [r, 1]]`.
pub const CORRELATION: f64 = 0.8;
const DET: f64 = 1.0 - CORRELATION * CORRELATION;
/// Lower Cholesky factor entries `[[1, 0], [r, sqrt(1 - r^2)]]`.
const CHOL_21: f64 = CORRELATION;
const CHOL_22: f64 = 0.6;

/// Observations `y_1..y_n`, each a point in the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianData {
    pub obs: Vec<[f64; 2]>,
}

impl GaussianData {
    pub fn mean(&self) -> [f64; 2] {
        mean_of(&self.obs)
    }

    /// Mean of all coordinates of all observations.
    pub fn grand_mean(&self) -> f64 {
        let m = self.mean();
        (m[0] + m[1]) / 2.0
    }
}

fn mean_of(obs: &[[f64; 2]]) -> [f64; 2] {
    let n = obs.len() as f64;
    let (a, b) = obs.iter().fold((0.0, 0.0), |(a, b), y| (a + y[0], b + y[1]));
    [a / n, b / n]
}

/// `mu ~ MVN(0, Sigma)`, `y_i ~ MVN(mu, Sigma)` for `i = 1..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MvnModel {
    n: usize,
}

impl MvnModel {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("n must be at least 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Draws `L z` with `z` standard normal, i.e. MVN(0, Sigma).
fn correlated_normal(rng: &mut RngStream) -> [f64; 2] {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    [z1, CHOL_21 * z1 + CHOL_22 * z2]
}

impl Generator for MvnModel {
    type Data = GaussianData;

    fn generate(&self, rng: &mut RngStream) -> (ParameterVector, GaussianData) {
        let mu = correlated_normal(rng);
        let obs = (0..self.n)
            .map(|_| {
                let e = correlated_normal(rng);
                [mu[0] + e[0], mu[1] + e[1]]
            })
            .collect();
        (params(mu), GaussianData { obs })
    }
}

fn params(v: [f64; 2]) -> ParameterVector {
    ParameterVector::new(v.to_vec()).expect("finite draw")
}

/// `ln MVN(x | mean, scale * Sigma)`.
pub fn ln_mvn(x: [f64; 2], mean: [f64; 2], scale: f64) -> f64 {
    let d0 = x[0] - mean[0];
    let d1 = x[1] - mean[1];
    let quad = (d0 * d0 - 2.0 * CORRELATION * d0 * d1 + d1 * d1) / DET;
    -(2.0 * std::f64::consts::PI).ln() - 0.5 * (scale * scale * DET).ln() - 0.5 * quad / scale
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * d * d / var
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GaussianVariant {
    Correct,
    /// Returns the prior regardless of the data.
    PriorOnly,
    /// Exact posterior computed without the first observation.
    IgnoreFirst,
    /// Correct marginals, correlation dropped.
    IndependentMarginals,
    /// Correct draws shifted by one normal(0, sd) offset per simulation.
    SmallBias { sd: f64 },
    /// Correct marginals warped differently depending on the sign of the
    /// data's grand mean; see [`warp`].
    NonMonotonic { power: f64 },
}

impl GaussianVariant {
    pub const NAMES: [&'static str; 6] = [
        "correct",
        "prior-only",
        "ignore-first",
        "independent-marginals",
        "small-bias",
        "non-monotonic",
    ];

    pub fn from_name(name: &str) -> Result<Self, ModelError> {
        Ok(match name {
            "correct" => Self::Correct,
            "prior-only" => Self::PriorOnly,
            "ignore-first" => Self::IgnoreFirst,
            "independent-marginals" => Self::IndependentMarginals,
            "small-bias" => Self::SmallBias { sd: 0.3 },
            "non-monotonic" => Self::NonMonotonic { power: 2.0 },
            other => {
                return Err(ModelError::UnknownVariant {
                    name: other.to_string(),
                    valid: Self::NAMES.join(", "),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Correct => "correct",
            Self::PriorOnly => "prior-only",
            Self::IgnoreFirst => "ignore-first",
            Self::IndependentMarginals => "independent-marginals",
            Self::SmallBias { .. } => "small-bias",
            Self::NonMonotonic { .. } => "non-monotonic",
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::SmallBias { sd } if !(sd.is_finite() && sd >= 0.0) => {
                Err(ModelError::InvalidParameter(format!("bias sd must be finite and non-negative, got {sd}")))
            }
            Self::NonMonotonic { power } if !(power.is_finite() && power > 0.0) => {
                Err(ModelError::InvalidParameter(format!("warp power must be positive, got {power}")))
            }
            _ => Ok(()),
        }
    }

    /// Log density of this variant's posterior at `mu`, when it has one.
    pub fn ln_density(&self, mu: [f64; 2], data: &GaussianData) -> Option<f64> {
        let n = data.obs.len() as f64;
        let ybar = data.mean();
        let shrink = n / (n + 1.0);
        match self {
            Self::Correct => Some(ln_mvn(mu, [shrink * ybar[0], shrink * ybar[1]], 1.0 / (n + 1.0))),
            Self::PriorOnly => Some(ln_mvn(mu, [0.0, 0.0], 1.0)),
            Self::IgnoreFirst => {
                if data.obs.len() < 2 {
                    return Some(ln_mvn(mu, [0.0, 0.0], 1.0));
                }
                let rest = mean_of(&data.obs[1..]);
                let k = (n - 1.0) / n;
                Some(ln_mvn(mu, [k * rest[0], k * rest[1]], 1.0 / n))
            }
            Self::IndependentMarginals => {
                let var = 1.0 / (n + 1.0);
                Some(ln_normal(mu[0], shrink * ybar[0], var) + ln_normal(mu[1], shrink * ybar[1], var))
            }
            Self::SmallBias { .. } | Self::NonMonotonic { .. } => None,
        }
    }
}

/// `u^p` on one side of the data space, `1 - (1-u)^p` on the other. The two
/// warps average to the identity only for `p = 2`, where they are `u^2` and
/// `2u - u^2`.
pub fn warp(u: f64, positive_region: bool, power: f64) -> f64 {
    if positive_region {
        u.powf(power)
    } else {
        1.0 - (1.0 - u).powf(power)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GaussianPosterior {
    variant: GaussianVariant,
}

impl GaussianPosterior {
    pub fn new(variant: GaussianVariant) -> Result<Self, ModelError> {
        variant.validate()?;
        Ok(Self { variant })
    }

    pub fn variant(&self) -> GaussianVariant {
        self.variant
    }

    /// `draws` samples of mu given the data.
    pub fn draw(&self, data: &GaussianData, draws: usize, rng: &mut RngStream) -> Vec<[f64; 2]> {
        let n = data.obs.len() as f64;
        let ybar = data.mean();
        let shrink = n / (n + 1.0);
        let post_mean = [shrink * ybar[0], shrink * ybar[1]];
        let post_sd = (1.0 / (n + 1.0)).sqrt();
        let correct = |rng: &mut RngStream| {
            let e = correlated_normal(rng);
            [post_mean[0] + post_sd * e[0], post_mean[1] + post_sd * e[1]]
        };
        match self.variant {
            GaussianVariant::Correct => (0..draws).map(|_| correct(rng)).collect(),
            GaussianVariant::PriorOnly => (0..draws).map(|_| correlated_normal(rng)).collect(),
            GaussianVariant::IgnoreFirst => {
                if data.obs.len() < 2 {
                    return (0..draws).map(|_| correlated_normal(rng)).collect();
                }
                let rest = mean_of(&data.obs[1..]);
                let k = (n - 1.0) / n;
                let sd = (1.0 / n).sqrt();
                (0..draws)
                    .map(|_| {
                        let e = correlated_normal(rng);
                        [k * rest[0] + sd * e[0], k * rest[1] + sd * e[1]]
                    })
                    .collect()
            }
            GaussianVariant::IndependentMarginals => (0..draws)
                .map(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    [post_mean[0] + post_sd * a, post_mean[1] + post_sd * b]
                })
                .collect(),
            GaussianVariant::SmallBias { sd } => {
                let b0: f64 = rng.sample(StandardNormal);
                let b1: f64 = rng.sample(StandardNormal);
                let bias = [sd * b0, sd * b1];
                (0..draws)
                    .map(|_| {
                        let d = correct(rng);
                        [d[0] + bias[0], d[1] + bias[1]]
                    })
                    .collect()
            }
            GaussianVariant::NonMonotonic { power } => {
                let positive = data.grand_mean() > 0.0;
                let marginals = [
                    Normal::new(post_mean[0], post_sd).expect("valid normal"),
                    Normal::new(post_mean[1], post_sd).expect("valid normal"),
                ];
                (0..draws)
                    .map(|_| {
                        let d = correct(rng);
                        let mut out = [0.0; 2];
                        for i in 0..2 {
                            let u = marginals[i].cdf(d[i]);
                            let w = warp(u, positive, power).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                            out[i] = marginals[i].inverse_cdf(w);
                        }
                        out
                    })
                    .collect()
            }
        }
    }
}

impl PosteriorFamily<GaussianData> for GaussianPosterior {
    fn name(&self) -> String {
        self.variant.name().to_string()
    }

    fn sample(
        &self,
        data: &GaussianData,
        draws: usize,
        _thin: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<ParameterVector>, FitError> {
        self.draw(data, draws, rng)
            .into_iter()
            .map(|d| ParameterVector::new(d.to_vec()).map_err(|e| FitError(e.to_string())))
            .collect()
    }
}

/// Quantities evaluated by default: those not tied to a particular variant
/// or case study.
pub const DEFAULT_QUANTITIES: [&str; 8] = [
    "mu[1]",
    "mu[2]",
    "sum",
    "diff",
    "product",
    "mvn_log_lik",
    "mvn_log_lik[1]",
    "mvn_log_lik[2]",
];

pub const ALL_QUANTITIES: [&str; 11] = [
    "mu[1]",
    "mu[2]",
    "sum",
    "diff",
    "product",
    "mvn_log_lik",
    "mvn_log_lik[1]",
    "mvn_log_lik[2]",
    "abs_mu1",
    "drop_mu1",
    "density_ratio",
];

fn mu(theta: &ParameterVector) -> [f64; 2] {
    [theta[0], theta[1]]
}

fn pointwise(index: usize) -> TestQuantity<GaussianData> {
    TestQuantity::fallible(format!("mvn_log_lik[{}]", index + 1), move |t: &ParameterVector, d: &GaussianData| {
        d.obs
            .get(index)
            .map(|y| ln_mvn(*y, mu(t), 1.0))
            .ok_or_else(|| format!("dataset has only {} observations", d.obs.len()))
    })
}

/// Builds the named quantity. `density_ratio` depends on `variant` and is
/// only defined where the variant has a closed-form density.
pub fn quantity(name: &str, variant: GaussianVariant) -> Result<TestQuantity<GaussianData>, ModelError> {
    let q = match name {
        "mu[1]" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| t[0]),
        "mu[2]" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| t[1]),
        "sum" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| t[0] + t[1]),
        "diff" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| t[0] - t[1]),
        "product" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| t[0] * t[1]),
        "mvn_log_lik" => TestQuantity::new(name, |t: &ParameterVector, d: &GaussianData| {
            d.obs.iter().map(|y| ln_mvn(*y, mu(t), 1.0)).sum()
        }),
        "mvn_log_lik[1]" => pointwise(0),
        "mvn_log_lik[2]" => pointwise(1),
        "abs_mu1" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| t[0].abs()),
        "drop_mu1" => TestQuantity::new(name, |t: &ParameterVector, _: &GaussianData| {
            if t[0] < 1.0 {
                t[0]
            } else {
                t[0] - 5.0
            }
        }),
        "density_ratio" => {
            if variant.ln_density([0.0, 0.0], &GaussianData { obs: vec![[0.0, 0.0]] }).is_none() {
                return Err(ModelError::UnsupportedQuantity {
                    quantity: name.to_string(),
                    variant: variant.name().to_string(),
                });
            }
            if variant == GaussianVariant::Correct {
                TestQuantity::new(name, |_: &ParameterVector, _: &GaussianData| 1.0)
            } else {
                TestQuantity::new(name, move |t: &ParameterVector, d: &GaussianData| {
                    let correct = GaussianVariant::Correct.ln_density(mu(t), d).expect("closed form");
                    let fitted = variant.ln_density(mu(t), d).expect("closed form");
                    (correct - fitted).exp()
                })
            }
        }
        other => {
            return Err(ModelError::UnknownQuantity {
                name: other.to_string(),
                valid: ALL_QUANTITIES.join(", "),
            })
        }
    };
    Ok(q)
}

pub fn quantities(names: &[&str], variant: GaussianVariant) -> Result<Vec<TestQuantity<GaussianData>>, ModelError> {
    names.iter().map(|n| quantity(n, variant)).collect()
}

/// Every quantity the variant supports.
pub fn quantity_library(variant: GaussianVariant) -> Vec<TestQuantity<GaussianData>> {
    ALL_QUANTITIES.iter().filter_map(|n| quantity(n, variant).ok()).collect()
}
