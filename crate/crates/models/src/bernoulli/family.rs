//! Posterior families for the uniform-prior Bernoulli model, given by
//! their quantile functions.

use std::fmt;
use std::sync::Arc;

use crate::ModelError;

type UnitFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bisection stops once the bracket is narrower than this.
pub const CDF_TOLERANCE: f64 = 1e-12;

/// One quantile function (and optionally its CDF) per observation
/// `y in {0, 1}`.
#[derive(Clone)]
pub struct QuantileFamily {
    name: String,
    quantiles: [UnitFn; 2],
    cdfs: Option<[UnitFn; 2]>,
}

impl fmt::Debug for QuantileFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileFamily")
            .field("name", &self.name)
            .field("closed_form_cdf", &self.cdfs.is_some())
            .finish()
    }
}

impl QuantileFamily {
    pub fn new<Q0, Q1>(name: impl Into<String>, q0: Q0, q1: Q1) -> Self
    where
        Q0: Fn(f64) -> f64 + Send + Sync + 'static,
        Q1: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            quantiles: [Arc::new(q0), Arc::new(q1)],
            cdfs: None,
        }
    }

    pub fn with_cdfs<C0, C1>(mut self, c0: C0, c1: C1) -> Self
    where
        C0: Fn(f64) -> f64 + Send + Sync + 'static,
        C1: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.cdfs = Some([Arc::new(c0), Arc::new(c1)]);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_closed_form_cdf(&self) -> bool {
        self.cdfs.is_some()
    }

    /// Posterior quantile at level `x` given observation `y`.
    pub fn quantile(&self, y: u8, x: f64) -> f64 {
        (self.quantiles[y as usize])(x.clamp(0.0, 1.0))
    }

    /// Posterior CDF `P(theta <= s | y)`, by bisection on the quantile
    /// function when no closed form was supplied.
    pub fn cdf(&self, y: u8, s: f64) -> f64 {
        if s <= 0.0 && self.quantile(y, 0.0) > s {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        match &self.cdfs {
            Some(c) => (c[y as usize])(s).clamp(0.0, 1.0),
            None => {
                // Largest x with quantile(x) <= s.
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                if self.quantile(y, 1.0) <= s {
                    return 1.0;
                }
                while hi - lo > CDF_TOLERANCE {
                    let mid = 0.5 * (lo + hi);
                    if self.quantile(y, mid) <= s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Posterior mass below one half, `P(theta <= 1/2 | y)`.
    pub fn mass_below_half(&self, y: u8) -> f64 {
        self.cdf(y, 0.5)
    }

    /// Checks that both quantile functions are non-decreasing maps into
    /// `[0, 1]` on a probe grid of `probes + 1` points.
    pub fn validate(&self, probes: usize) -> Result<(), ModelError> {
        for y in 0..2u8 {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=probes {
                let x = i as f64 / probes as f64;
                let v = self.quantile(y, x);
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(ModelError::InvalidFamily(format!(
                        "{}: quantile({x}|{y}) = {v} outside [0, 1]",
                        self.name
                    )));
                }
                if v < prev - 1e-12 {
                    return Err(ModelError::InvalidFamily(format!(
                        "{}: quantile(.|{y}) decreases at {x}",
                        self.name
                    )));
                }
                prev = v;
            }
        }
        Ok(())
    }

    /// The exact posterior: Beta(1, 2) after a 0, Beta(2, 1) after a 1.
    pub fn correct() -> Self {
        Self::new("correct", |x| 1.0 - (1.0 - x).sqrt(), |x: f64| x.sqrt())
            .with_cdfs(|s| 2.0 * s - s * s, |s| s * s)
    }

    /// The correct posteriors swapped between the two observations.
    pub fn flipped() -> Self {
        Self::new("phi-A", |x: f64| x.sqrt(), |x| 1.0 - (1.0 - x).sqrt())
            .with_cdfs(|s| s * s, |s| 2.0 * s - s * s)
    }

    /// Piecewise family that matches the projection check but not the
    /// data-averaged posterior.
    pub fn piecewise() -> Self {
        Self::new(
            "phi-B",
            |x| if x < 0.75 { 2.0 * x / 3.0 } else { 0.5 + 2.0 * (x - 0.75) },
            |x| {
                if x < 0.75 {
                    (6.0 * x + 4.0 * x * x).sqrt() / 3.0
                } else {
                    (3.0 - 6.0 * x + 4.0 * x * x).sqrt()
                }
            },
        )
        .with_cdfs(
            |s| if s < 0.5 { 1.5 * s } else { 0.75 + (s - 0.5) / 2.0 },
            |s| {
                if s < 3f64.sqrt() / 2.0 {
                    0.75 * ((1.0 + 4.0 * s * s).sqrt() - 1.0)
                } else {
                    (3.0 + (4.0 * s * s - 3.0).max(0.0).sqrt()) / 4.0
                }
            },
        )
    }

    /// Equal mixture of the correct posterior and the prior.
    pub fn prior_mixture() -> Self {
        Self::new(
            "phi-C",
            |x| 1.5 - 0.5 * (9.0 - 8.0 * x).sqrt(),
            |x| -0.5 + 0.5 * (1.0 + 8.0 * x).sqrt(),
        )
        .with_cdfs(|s| 0.5 * (3.0 * s - s * s), |s| 0.5 * (s + s * s))
    }

    /// Passes the projection check by construction but not the clamped one.
    /// No closed-form CDF for the second observation, so it goes through
    /// the bisection path.
    pub fn squared() -> Self {
        Self::new("phi-D", |x| x * x, |x: f64| (2.0 * x - 2.0 * x * x + x.powi(4)).max(0.0).sqrt())
    }

    pub const NAMES: [&'static str; 5] = ["correct", "phi-A", "phi-B", "phi-C", "phi-D"];

    pub fn from_name(name: &str) -> Result<Self, ModelError> {
        Ok(match name {
            "correct" => Self::correct(),
            "phi-A" => Self::flipped(),
            "phi-B" => Self::piecewise(),
            "phi-C" => Self::prior_mixture(),
            "phi-D" => Self::squared(),
            other => {
                return Err(ModelError::UnknownVariant {
                    name: other.to_string(),
                    valid: Self::NAMES.join(", "),
                })
            }
        })
    }
}
