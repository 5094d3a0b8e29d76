//! Exact continuous-SBC evaluation for the Bernoulli model.
//!
//! For an observation `y`, `q(x | y)` is the probability, under the true
//! posterior, that a draw's test quantity falls below the `x`-quantile of
//! the same quantity under the fitted posterior (with ties split linearly).
//! A family passes continuous SBC for a quantity exactly when
//! `(q(x|0) + q(x|1)) / 2 = x` for every `x`.

use serde::Serialize;

use super::family::QuantileFamily;
use crate::ModelError;

/// Distribution of a scalar test quantity.
pub trait ScalarLaw {
    /// `P(f < s)`.
    fn below(&self, s: f64) -> f64;
    /// `P(f = s)`.
    fn tie(&self, s: f64) -> f64;
    /// A value `s` with `below(s) <= x <= below(s) + tie(s)`.
    fn quantile(&self, x: f64) -> f64;
}

/// `q` at level `x` for the fitted law against the true law. Ties in the
/// fitted law are spread linearly over the true law's tie mass.
pub fn value_of_q<F: ScalarLaw + ?Sized, T: ScalarLaw + ?Sized>(fitted: &F, truth: &T, x: f64) -> f64 {
    let s = fitted.quantile(x);
    let fitted_tie = fitted.tie(s);
    let base = truth.below(s);
    if fitted_tie > 0.0 {
        base + truth.tie(s) / fitted_tie * (x - fitted.below(s))
    } else {
        base
    }
}

/// The four test quantities of the Bernoulli case study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AnalyticQuantity {
    /// `theta` itself.
    Projection,
    /// The Bernoulli likelihood of the observation, `theta` or `1 - theta`.
    Likelihood,
    /// `theta` below one half, `theta - 1` above: a non-monotone bijection.
    Wrapped,
    /// `theta` clamped to at most one half, which introduces ties.
    Clamped,
}

impl AnalyticQuantity {
    pub const ALL: [AnalyticQuantity; 4] = [Self::Projection, Self::Likelihood, Self::Wrapped, Self::Clamped];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Projection => "theta",
            Self::Likelihood => "lik",
            Self::Wrapped => "wrapped",
            Self::Clamped => "clamped",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ModelError> {
        Self::ALL.into_iter().find(|q| q.name() == name).ok_or_else(|| ModelError::UnknownQuantity {
            name: name.to_string(),
            valid: Self::ALL.map(|q| q.name()).join(", "),
        })
    }

    pub fn apply(&self, theta: f64, y: u8) -> f64 {
        match self {
            Self::Projection => theta,
            Self::Likelihood => {
                if y == 1 {
                    theta
                } else {
                    1.0 - theta
                }
            }
            Self::Wrapped => {
                if theta < 0.5 {
                    theta
                } else {
                    theta - 1.0
                }
            }
            Self::Clamped => theta.min(0.5),
        }
    }
}

/// Law of `f(theta, y)` when `theta` follows `family` given `y`.
pub struct Pushforward<'a> {
    family: &'a QuantileFamily,
    quantity: AnalyticQuantity,
    y: u8,
    half_mass: f64,
}

impl<'a> Pushforward<'a> {
    pub fn new(family: &'a QuantileFamily, quantity: AnalyticQuantity, y: u8) -> Self {
        let half_mass = match quantity {
            AnalyticQuantity::Wrapped | AnalyticQuantity::Clamped => family.mass_below_half(y),
            _ => f64::NAN,
        };
        Self {
            family,
            quantity,
            y,
            half_mass,
        }
    }

    fn cdf(&self, s: f64) -> f64 {
        self.family.cdf(self.y, s)
    }

    fn inv(&self, x: f64) -> f64 {
        self.family.quantile(self.y, x)
    }

    fn reflected(&self) -> bool {
        self.quantity == AnalyticQuantity::Likelihood && self.y == 0
    }
}

impl ScalarLaw for Pushforward<'_> {
    fn below(&self, s: f64) -> f64 {
        let h = self.half_mass;
        match self.quantity {
            _ if self.reflected() => 1.0 - self.cdf(1.0 - s),
            AnalyticQuantity::Projection | AnalyticQuantity::Likelihood => self.cdf(s),
            AnalyticQuantity::Wrapped => {
                if s < -0.5 {
                    0.0
                } else if s < 0.0 {
                    (self.cdf(1.0 + s) - h).max(0.0)
                } else if s < 0.5 {
                    1.0 - h + self.cdf(s)
                } else {
                    1.0
                }
            }
            AnalyticQuantity::Clamped => {
                if s < 0.5 {
                    self.cdf(s)
                } else if s == 0.5 {
                    h
                } else {
                    1.0
                }
            }
        }
    }

    fn tie(&self, s: f64) -> f64 {
        if self.quantity == AnalyticQuantity::Clamped && s == 0.5 {
            1.0 - self.half_mass
        } else {
            0.0
        }
    }

    fn quantile(&self, x: f64) -> f64 {
        let h = self.half_mass;
        match self.quantity {
            _ if self.reflected() => 1.0 - self.inv(1.0 - x),
            AnalyticQuantity::Projection | AnalyticQuantity::Likelihood => self.inv(x),
            AnalyticQuantity::Wrapped => {
                if x < 1.0 - h {
                    self.inv(x + h) - 1.0
                } else {
                    self.inv(x - (1.0 - h))
                }
            }
            AnalyticQuantity::Clamped => {
                if x < h {
                    self.inv(x).min(0.5)
                } else {
                    0.5
                }
            }
        }
    }
}

/// `q(x | y)` for `family` and `quantity`.
pub fn q_value(family: &QuantileFamily, quantity: AnalyticQuantity, x: f64, y: u8) -> f64 {
    let truth = QuantileFamily::correct();
    value_of_q(
        &Pushforward::new(family, quantity, y),
        &Pushforward::new(&truth, quantity, y),
        x,
    )
}

/// Evaluates `q` for both observations on many levels, sharing the
/// one-off work (true family, half masses).
pub struct QEvaluator<'a> {
    fitted: [Pushforward<'a>; 2],
    truth: [Pushforward<'static>; 2],
}

static CORRECT: std::sync::LazyLock<QuantileFamily> = std::sync::LazyLock::new(QuantileFamily::correct);

impl<'a> QEvaluator<'a> {
    pub fn new(family: &'a QuantileFamily, quantity: AnalyticQuantity) -> Self {
        Self {
            fitted: [Pushforward::new(family, quantity, 0), Pushforward::new(family, quantity, 1)],
            truth: [Pushforward::new(&CORRECT, quantity, 0), Pushforward::new(&CORRECT, quantity, 1)],
        }
    }

    pub fn q(&self, x: f64, y: u8) -> f64 {
        value_of_q(&self.fitted[y as usize], &self.truth[y as usize], x)
    }

    /// `(q(x|0) + q(x|1)) / 2`, which equals `x` for a passing family.
    pub fn averaged(&self, x: f64) -> f64 {
        0.5 * (self.q(x, 0) + self.q(x, 1))
    }
}

/// Levels `(j + 1/2) / n` for `j = 0..n`; branch points sit on open segments.
pub fn residual_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| (j as f64 + 0.5) / n as f64)
}

/// Residual below which a family is taken to pass.
pub const PASS_THRESHOLD: f64 = 1e-8;

/// `max |(q(x|0) + q(x|1))/2 - x|` over the residual grid.
pub fn sbc_residual(family: &QuantileFamily, quantity: AnalyticQuantity, grid_size: usize) -> Result<f64, ModelError> {
    if grid_size < 100 {
        return Err(ModelError::InvalidParameter(format!("grid size must be at least 100, got {grid_size}")));
    }
    let eval = QEvaluator::new(family, quantity);
    Ok(residual_grid(grid_size).map(|x| (eval.averaged(x) - x).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QPoint {
    pub x: f64,
    pub q0: f64,
    pub q1: f64,
    pub avg: f64,
}

pub fn q_curve(family: &QuantileFamily, quantity: AnalyticQuantity, grid_size: usize) -> Vec<QPoint> {
    let eval = QEvaluator::new(family, quantity);
    residual_grid(grid_size)
        .map(|x| {
            let q0 = eval.q(x, 0);
            let q1 = eval.q(x, 1);
            QPoint { x, q0, q1, avg: 0.5 * (q0 + q1) }
        })
        .collect()
}

/// `(density(theta|0) + density(theta|1)) / 2` by central differences of
/// the CDFs. Equals 1 everywhere iff the data-averaged posterior is the
/// prior.
pub fn data_averaged_density(family: &QuantileFamily, theta: f64, step: f64) -> f64 {
    let d = |y| (family.cdf(y, theta + step) - family.cdf(y, theta - step)) / (2.0 * step);
    0.5 * (d(0) + d(1))
}
