//! Ordered-simplex case study: a Dirichlet(2, 2, 2, 2) prior restricted to
//! increasing coordinates, ten multinomial counts, and four ways of
//! parameterizing the ordered simplex for a Metropolis sampler.

mod rwm;
mod transform;

pub use rwm::{rwm_sample, RwmConfig, RwmError, RwmOutput};
pub use transform::{
    logit_inverse, positive_ordered, transform_gamma, transform_min, transform_softmax, TransformError,
    TransformResult,
};

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use sbc_core::ess::ess;
use sbc_core::{FitError, Generator, ParameterVector, PosteriorFamily, RngStream, TestQuantity};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::ModelError;

pub const K: usize = 4;
pub const TOTAL_COUNT: u32 = 10;
const CONCENTRATION: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimplexData {
    pub counts: [u32; K],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderedSimplexVariant {
    Min,
    /// Softmax with the log-Jacobian exponent off by one.
    SoftmaxBad,
    SoftmaxFixed,
    /// Normalized increasing gamma variables, sampled in gamma space.
    Gamma,
}

impl OrderedSimplexVariant {
    pub const ALL: [OrderedSimplexVariant; 4] = [Self::Min, Self::SoftmaxBad, Self::SoftmaxFixed, Self::Gamma];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Min => "min",
            Self::SoftmaxBad => "softmax-bad",
            Self::SoftmaxFixed => "softmax-fixed",
            Self::Gamma => "gamma",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ModelError> {
        Self::ALL.into_iter().find(|v| v.name() == name).ok_or_else(|| ModelError::UnknownVariant {
            name: name.to_string(),
            valid: Self::ALL.map(|v| v.name()).join(", "),
        })
    }

    /// Dimension of the unconstrained space.
    pub fn dim(&self) -> usize {
        match self {
            Self::Gamma => K,
            _ => K - 1,
        }
    }

    /// Point on the ordered simplex for unconstrained `z`, with the total
    /// log-Jacobian of the constrained map (base transform included).
    /// For the gamma variant the second value is the gamma-space log prior
    /// plus its base log-Jacobian instead.
    pub fn constrain(&self, z: &[f64]) -> Option<(Vec<f64>, f64)> {
        match self {
            Self::Min => {
                let (u, base) = logit_inverse(z);
                let r = transform_min(&u).ok()?;
                Some((r.x, base + r.log_jacobian))
            }
            Self::SoftmaxBad | Self::SoftmaxFixed => {
                let (v, base) = positive_ordered(z);
                let r = transform_softmax(&v, *self == Self::SoftmaxFixed).ok()?;
                Some((r.x, base + r.log_jacobian))
            }
            Self::Gamma => {
                let (w, base) = positive_ordered(z);
                let x = transform_gamma(&w).ok()?;
                let prior: f64 = w.iter().map(|wi| (CONCENTRATION - 1.0) * wi.ln() - wi).sum();
                Some((x, base + prior))
            }
        }
    }
}

/// Dirichlet(2, ..., 2) log density.
pub fn ln_dirichlet(x: &[f64]) -> f64 {
    let k = x.len() as f64;
    ln_gamma(CONCENTRATION * k) - k * ln_gamma(CONCENTRATION)
        + (CONCENTRATION - 1.0) * x.iter().map(|v| v.ln()).sum::<f64>()
}

/// Multinomial log probability of `counts` given cell probabilities `x`.
pub fn ln_multinomial(x: &[f64], counts: &[u32; K]) -> f64 {
    let n: u32 = counts.iter().sum();
    let mut total = ln_factorial(n as u64);
    for (xi, &c) in x.iter().zip(counts) {
        total -= ln_factorial(c as u64);
        if c > 0 {
            total += c as f64 * xi.ln();
        }
    }
    total
}

/// Unnormalized log posterior of `variant` at unconstrained `z`; `-inf`
/// wherever the map leaves the ordered simplex numerically.
pub fn log_posterior(variant: OrderedSimplexVariant, z: &[f64], data: &SimplexData) -> f64 {
    if z.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let Some((x, adjust)) = variant.constrain(z) else {
        return f64::NEG_INFINITY;
    };
    if x.iter().any(|&v| !(v > 0.0)) || x.windows(2).any(|w| w[0] >= w[1]) {
        return f64::NEG_INFINITY;
    }
    let prior = match variant {
        OrderedSimplexVariant::Gamma => 0.0,
        _ => ln_dirichlet(&x),
    };
    let value = adjust + prior + ln_multinomial(&x, &data.counts);
    if value.is_nan() {
        f64::NEG_INFINITY
    } else {
        value
    }
}

fn dirichlet(alpha: &[f64; K], rng: &mut RngStream) -> [f64; K] {
    let mut w = [0.0; K];
    for (wi, &a) in w.iter_mut().zip(alpha) {
        *wi = rng.sample(Gamma::new(a, 1.0).expect("positive shape"));
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Sorted Dirichlet(2, 2, 2, 2) draw and ten multinomial counts.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimplexModel;

impl Generator for SimplexModel {
    type Data = SimplexData;

    fn generate(&self, rng: &mut RngStream) -> (ParameterVector, SimplexData) {
        let mut x = dirichlet(&[CONCENTRATION; K], rng);
        x.sort_by(f64::total_cmp);
        let mut counts = [0u32; K];
        for _ in 0..TOTAL_COUNT {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut cell = K - 1;
            for (i, xi) in x.iter().enumerate() {
                acc += xi;
                if u < acc {
                    cell = i;
                    break;
                }
            }
            counts[cell] += 1;
        }
        (ParameterVector::new(x.to_vec()).expect("finite"), SimplexData { counts })
    }
}

#[derive(Clone, Debug)]
pub struct SimplexFit {
    pub draws: Vec<ParameterVector>,
    pub acceptance_rate: f64,
    /// Smallest ESS over the four simplex coordinates.
    pub ess_min: f64,
}

/// Random-walk Metropolis on one of the parameterizations.
#[derive(Clone, Copy, Debug)]
pub struct SimplexPosterior {
    variant: OrderedSimplexVariant,
    sampler: RwmConfig,
}

impl SimplexPosterior {
    pub fn new(variant: OrderedSimplexVariant) -> Self {
        Self { variant, sampler: RwmConfig::default() }
    }

    pub fn with_sampler(mut self, sampler: RwmConfig) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn fit(&self, data: &SimplexData, draws: usize, thin: usize, rng: &mut RngStream) -> Result<SimplexFit, RwmError> {
        let config = RwmConfig { draws, thin, ..self.sampler };
        let target = |z: &[f64]| log_posterior(self.variant, z, data);
        let out = rwm_sample(&target, &vec![0.0; self.variant.dim()], &config, rng)?;
        let to_simplex = |z: &Vec<f64>| self.variant.constrain(z).expect("accepted states are in the domain").0;
        let draws = out
            .draws
            .iter()
            .map(|z| ParameterVector::new(to_simplex(z)).expect("finite"))
            .collect();
        // Effective size of the simplex coordinates over the unthinned chain.
        let chain: Vec<Vec<f64>> = out.chain.iter().map(to_simplex).collect();
        let ess_min = (0..K)
            .map(|j| {
                let column: Vec<f64> = chain.iter().map(|x| x[j]).collect();
                ess(&column).map(|e| e.ess).unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        Ok(SimplexFit { draws, acceptance_rate: out.acceptance_rate, ess_min })
    }
}

impl PosteriorFamily<SimplexData> for SimplexPosterior {
    fn name(&self) -> String {
        self.variant.name().to_string()
    }

    fn sample(&self, data: &SimplexData, draws: usize, thin: usize, rng: &mut RngStream) -> Result<Vec<ParameterVector>, FitError> {
        self.fit(data, draws, thin, rng).map(|f| f.draws).map_err(|e| FitError(e.to_string()))
    }
}

/// Exact posterior draws. The ordered posterior is the normalized vector of
/// independent `Gamma(2 + y_i, 1)` variables conditioned to increase. Writing
/// them as cumulative sums of increments `d`, the increment density is
/// `prod_i (d_1 + ... + d_i)^(1 + y_i) exp(-sum_j (K - j + 1) d_j)`, a finite
/// mixture of independent Gamma laws once the polynomial is expanded.
#[derive(Debug, Default)]
pub struct ExactOrderedPosterior {
    mixtures: Mutex<HashMap<[u32; K], Arc<IncrementMixture>>>,
}

#[derive(Debug)]
struct IncrementMixture {
    exponents: Vec<[u32; K]>,
    picker: WeightedIndex<f64>,
}

impl ExactOrderedPosterior {
    fn mixture(&self, counts: &[u32; K]) -> Result<Arc<IncrementMixture>, FitError> {
        if let Some(m) = self.mixtures.lock().expect("cache lock").get(counts) {
            return Ok(Arc::clone(m));
        }
        let components = increment_mixture(counts);
        let top = components.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let picker = WeightedIndex::new(components.iter().map(|c| (c.1 - top).exp())).map_err(|e| FitError(e.to_string()))?;
        let mixture = Arc::new(IncrementMixture { exponents: components.into_iter().map(|c| c.0).collect(), picker });
        self.mixtures.lock().expect("cache lock").insert(*counts, Arc::clone(&mixture));
        Ok(mixture)
    }
}

/// Mixture components as `(exponents, log weight)`.
fn increment_mixture(counts: &[u32; K]) -> Vec<([u32; K], f64)> {
    let mut poly: BTreeMap<[u32; K], f64> = BTreeMap::from([([0; K], 1.0)]);
    for (i, &y) in counts.iter().enumerate() {
        for _ in 0..(CONCENTRATION as u32 - 1 + y) {
            let mut next = BTreeMap::new();
            for (exponents, coef) in &poly {
                for j in 0..=i {
                    let mut e = *exponents;
                    e[j] += 1;
                    *next.entry(e).or_insert(0.0) += coef;
                }
            }
            poly = next;
        }
    }
    poly.into_iter()
        .map(|(e, coef)| {
            let log_weight = coef.ln()
                + e.iter()
                    .enumerate()
                    .map(|(j, &k)| ln_factorial(k as u64) - (k as f64 + 1.0) * ((K - j) as f64).ln())
                    .sum::<f64>();
            (e, log_weight)
        })
        .collect()
}

impl PosteriorFamily<SimplexData> for ExactOrderedPosterior {
    fn name(&self) -> String {
        "exact".into()
    }

    fn sample(&self, data: &SimplexData, draws: usize, _thin: usize, rng: &mut RngStream) -> Result<Vec<ParameterVector>, FitError> {
        let mixture = self.mixture(&data.counts)?;
        let mut out = Vec::with_capacity(draws);
        while out.len() < draws {
            let exponents = mixture.exponents[mixture.picker.sample(rng)];
            let mut w = [0.0; K];
            let mut acc = 0.0;
            for j in 0..K {
                let rate = (K - j) as f64;
                acc += Gamma::new(exponents[j] as f64 + 1.0, 1.0 / rate).expect("valid shape").sample(rng);
                w[j] = acc;
            }
            let total: f64 = w.iter().sum();
            let x = w.map(|wi| wi / total);
            // Ties from underflow have probability zero in exact arithmetic.
            if x.windows(2).all(|p| p[0] < p[1]) {
                out.push(ParameterVector::new(x.to_vec()).expect("finite"));
            }
        }
        Ok(out)
    }
}

pub const QUANTITIES: [&str; 6] = ["x[1]", "x[2]", "x[3]", "x[4]", "log_lik", "log_prior"];

pub fn quantity(name: &str) -> Result<TestQuantity<SimplexData>, ModelError> {
    let q = match name {
        "log_lik" => TestQuantity::new(name, |t: &ParameterVector, d: &SimplexData| ln_multinomial(t.as_slice(), &d.counts)),
        "log_prior" => TestQuantity::new(name, |t: &ParameterVector, _: &SimplexData| ln_dirichlet(t.as_slice())),
        _ => {
            let index = QUANTITIES[..K].iter().position(|n| *n == name).ok_or_else(|| ModelError::UnknownQuantity {
                name: name.to_string(),
                valid: QUANTITIES.join(", "),
            })?;
            TestQuantity::new(name, move |t: &ParameterVector, _: &SimplexData| t[index])
        }
    };
    Ok(q)
}

pub fn quantity_library() -> Vec<TestQuantity<SimplexData>> {
    QUANTITIES.iter().map(|n| quantity(n).expect("listed quantity")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_output() {
        let mut rng = RngStream::new(1, 0);
        let mut mean_last = 0.0;
        for _ in 0..10_000 {
            let (x, y) = SimplexModel.generate(&mut rng);
            assert!(x.as_slice().windows(2).all(|w| w[0] < w[1]));
            assert!((x.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(y.counts.iter().sum::<u32>(), TOTAL_COUNT);
            mean_last += x[3] / 10_000.0;
        }
        // Sorted-Dirichlet oracle by brute force.
        let mut rng = RngStream::new(2, 0);
        let oracle: f64 = (0..100_000)
            .map(|_| {
                let d = dirichlet(&[2.0; K], &mut rng);
                d.iter().cloned().fold(0.0, f64::max)
            })
            .sum::<f64>()
            / 100_000.0;
        assert!((mean_last - oracle).abs() < 0.01 * oracle * 3.0, "{mean_last} vs {oracle}");
    }

    #[test]
    fn every_variant_finite_at_origin() {
        let data = SimplexData { counts: [1, 2, 3, 4] };
        for v in OrderedSimplexVariant::ALL {
            assert!(log_posterior(v, &vec![0.0; v.dim()], &data).is_finite(), "{v:?}");
        }
    }

    #[test]
    fn gamma_density_is_not_a_function_of_x() {
        let data = SimplexData { counts: [1, 2, 3, 4] };
        // Scaling every w by e leaves x unchanged but moves the gamma-space prior.
        let z = [0.0, 0.0, 0.0, 0.0];
        let shifted = [1.0, 1.0, 1.0, 1.0];
        let (xa, _) = OrderedSimplexVariant::Gamma.constrain(&z).unwrap();
        let (xb, _) = OrderedSimplexVariant::Gamma.constrain(&shifted).unwrap();
        for (a, b) in xa.iter().zip(&xb) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = OrderedSimplexVariant::Gamma;
        assert_ne!(log_posterior(g, &z, &data), log_posterior(g, &shifted, &data));
    }

    #[test]
    fn extreme_inputs_are_rejected_not_nan() {
        let data = SimplexData { counts: [0, 0, 0, 10] };
        for v in OrderedSimplexVariant::ALL {
            let z = vec![800.0; v.dim()];
            assert_eq!(log_posterior(v, &z, &data), f64::NEG_INFINITY, "{v:?}");
        }
    }

    #[test]
    fn exact_sampler_orders_draws() {
        let data = SimplexData { counts: [0, 1, 3, 6] };
        let draws = ExactOrderedPosterior::default().sample(&data, 200, 1, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(draws.len(), 200);
        assert!(draws.iter().all(|d| d.as_slice().windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn exact_sampler_matches_rejection() {
        let data = SimplexData { counts: [3, 1, 4, 2] };
        let alpha = data.counts.map(|c| CONCENTRATION + c as f64);
        let n = 20_000;
        let mut rng = RngStream::new(8, 0);
        let mut kept: Vec<[f64; K]> = Vec::new();
        while kept.len() < n {
            let x = dirichlet(&alpha, &mut rng);
            if x.windows(2).all(|w| w[0] < w[1]) {
                kept.push(x);
            }
        }
        let exact = ExactOrderedPosterior::default().sample(&data, n, 1, &mut RngStream::new(9, 0)).unwrap();
        for i in 0..K {
            let reference: Vec<f64> = kept.iter().map(|x| x[i]).collect();
            let mean_ref = reference.iter().sum::<f64>() / n as f64;
            let sd = (reference.iter().map(|v| (v - mean_ref).powi(2)).sum::<f64>() / n as f64).sqrt();
            let mean = exact.iter().map(|d| d.as_slice()[i]).sum::<f64>() / n as f64;
            // Two independent means: 5 standard errors of their difference.
            assert!((mean - mean_ref).abs() < 5.0 * sd * (2.0 / n as f64).sqrt(), "x[{}]: {mean} vs {mean_ref}", i + 1);
        }
    }

    #[test]
    fn exact_sampler_handles_concentrated_counts() {
        let data = SimplexData { counts: [10, 0, 0, 0] };
        let draws = ExactOrderedPosterior::default().sample(&data, 500, 1, &mut RngStream::new(4, 0)).unwrap();
        assert!(draws.iter().all(|d| d.as_slice().windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn quantity_names() {
        assert_eq!(quantity_library().len(), 6);
        assert!(quantity("x[5]").is_err());
        let d = SimplexData { counts: [1, 2, 3, 4] };
        let t = ParameterVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let lp = quantity("log_prior").unwrap().evaluate(&t, &d).unwrap();
        let expected = 5040f64.ln() + [0.1f64, 0.2, 0.3, 0.4].iter().map(|v| v.ln()).sum::<f64>();
        assert!((lp - expected).abs() < 1e-12);
    }
}
