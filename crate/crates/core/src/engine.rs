//! The simulation harness: generate, fit, rank.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::RankSet;
use crate::quantity::{evaluate_quantities, ParameterVector, TestQuantity};
use crate::rank::{compute_rank, QuantityRank};
use crate::rng::{simulation_streams, RngStream};

/// Draws a parameter from the prior and a dataset given that parameter.
pub trait Generator: Send + Sync {
    type Data: Send + Sync;

    fn generate(&self, rng: &mut RngStream) -> (ParameterVector, Self::Data);
}

/// The posterior approximation under test.
///
/// Samplers that produce correlated chains keep every `thin`-th retained
/// draw until `draws` draws have accumulated; exact samplers ignore `thin`.
pub trait PosteriorFamily<D>: Send + Sync {
    fn name(&self) -> String;

    fn sample(
        &self,
        data: &D,
        draws: usize,
        thin: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<ParameterVector>, FitError>;
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("posterior fit failed: {0}")]
pub struct FitError(pub String);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SbcError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbcConfig {
    pub sims: usize,
    pub draws: usize,
    pub seed: u64,
    pub thin: usize,
}

impl SbcConfig {
    pub fn new(sims: usize, draws: usize, seed: u64) -> Self {
        Self {
            sims,
            draws,
            seed,
            thin: 1,
        }
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    fn validate(&self) -> Result<(), SbcError> {
        if self.sims == 0 {
            return Err(SbcError::InvalidConfig("sims must be at least 1".into()));
        }
        if self.draws == 0 {
            return Err(SbcError::InvalidConfig("draws must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(SbcError::InvalidConfig("thin stride must be at least 1".into()));
        }
        if self.draws > u32::MAX as usize {
            return Err(SbcError::InvalidConfig("draws exceeds u32 range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub global_seed: u64,
    pub stream_id: u64,
}

/// One simulation: prior draw, data, and the posterior draws fitted to it.
#[derive(Clone, Debug)]
pub struct SimulationRecord<D> {
    pub sim_index: usize,
    pub prior_draw: ParameterVector,
    pub data: D,
    pub posterior_draws: Vec<ParameterVector>,
    pub variant_name: String,
    pub seed_info: SeedInfo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantityFailure {
    pub quantity: String,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SimulationResult<D> {
    pub record: SimulationRecord<D>,
    pub ranks: Vec<QuantityRank>,
    pub quantity_errors: Vec<QuantityFailure>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailedSimulation {
    pub sim_index: usize,
    pub reason: String,
}

/// Output of [`run_sbc`]. Failed simulations are excluded from `results`
/// and listed in `failures`.
#[derive(Clone, Debug)]
pub struct SbcRun<D> {
    pub config: SbcConfig,
    pub quantity_names: Vec<String>,
    pub results: Vec<SimulationResult<D>>,
    pub failures: Vec<FailedSimulation>,
}

/// One line of the rank table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRow {
    pub sim_index: usize,
    pub quantity: String,
    pub rank: u32,
    pub max_rank: u32,
    pub n_less: u32,
    pub n_equals: u32,
}

impl<D> SbcRun<D> {
    pub fn max_rank(&self) -> u32 {
        self.config.draws as u32
    }

    /// Ranks of `quantity` in simulation order.
    pub fn ranks(&self, quantity: &str) -> Vec<u32> {
        self.results
            .iter()
            .filter_map(|r| r.ranks.iter().find(|q| q.quantity == quantity))
            .map(|q| q.stat.rank)
            .collect()
    }

    pub fn rank_set(&self, quantity: &str) -> RankSet {
        RankSet::new(self.ranks(quantity), self.max_rank())
            .expect("ranks produced by run_sbc lie in 0..=M")
    }

    pub fn rank_rows(&self) -> Vec<RankRow> {
        self.results
            .iter()
            .flat_map(|r| {
                r.ranks.iter().map(move |q| RankRow {
                    sim_index: r.record.sim_index,
                    quantity: q.quantity.clone(),
                    rank: q.stat.rank,
                    max_rank: q.stat.max_rank,
                    n_less: q.stat.n_less,
                    n_equals: q.stat.n_equals,
                })
            })
            .collect()
    }
}

/// Runs `config.sims` independent simulations.
///
/// Simulation `i` draws its data from stream `(seed, i)`, its posterior from
/// `(seed, i + 2^62)` and its tie-breaks from `(seed, i + 2^63)`, so the
/// output is identical for any thread schedule.
pub fn run_sbc<G, P>(
    generator: &G,
    family: &P,
    quantities: &[TestQuantity<G::Data>],
    config: SbcConfig,
) -> Result<SbcRun<G::Data>, SbcError>
where
    G: Generator,
    P: PosteriorFamily<G::Data> + ?Sized,
{
    config.validate()?;
    let variant_name = family.name();
    let outcomes: Vec<Result<SimulationResult<G::Data>, FailedSimulation>> = (0..config.sims)
        .into_par_iter()
        .map(|i| simulate(generator, family, quantities, config, i, &variant_name))
        .collect();

    let mut results = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(SbcRun {
        config,
        quantity_names: quantities.iter().map(|q| q.name().to_string()).collect(),
        results,
        failures,
    })
}

fn simulate<G, P>(
    generator: &G,
    family: &P,
    quantities: &[TestQuantity<G::Data>],
    config: SbcConfig,
    index: usize,
    variant_name: &str,
) -> Result<SimulationResult<G::Data>, FailedSimulation>
where
    G: Generator,
    P: PosteriorFamily<G::Data> + ?Sized,
{
    let fail = |reason: String| FailedSimulation {
        sim_index: index,
        reason,
    };
    let (mut gen_rng, mut post_rng, mut tie_rng) = simulation_streams(config.seed, index as u64);
    let (prior_draw, data) = generator.generate(&mut gen_rng);
    let posterior_draws = family
        .sample(&data, config.draws, config.thin, &mut post_rng)
        .map_err(|e| fail(e.to_string()))?;
    if posterior_draws.len() != config.draws {
        return Err(fail(format!(
            "expected {} posterior draws, got {}",
            config.draws,
            posterior_draws.len()
        )));
    }
    if posterior_draws.iter().any(|d| d.dim() != prior_draw.dim()) {
        return Err(fail("posterior draw dimension differs from prior draw".into()));
    }
    let record = SimulationRecord {
        sim_index: index,
        prior_draw,
        data,
        posterior_draws,
        variant_name: variant_name.to_string(),
        seed_info: SeedInfo {
            global_seed: config.seed,
            stream_id: index as u64,
        },
    };

    let mut ranks = Vec::with_capacity(quantities.len());
    let mut quantity_errors = Vec::new();
    for values in evaluate_quantities(&record, quantities) {
        match values {
            Ok(v) => match compute_rank(v.prior_value, &v.posterior_values, &mut tie_rng) {
                Ok(stat) => ranks.push(QuantityRank {
                    quantity: v.quantity,
                    stat,
                }),
                Err(e) => quantity_errors.push(QuantityFailure {
                    quantity: v.quantity,
                    reason: e.to_string(),
                }),
            },
            Err(e) => {
                let quantity = match &e {
                    crate::quantity::QuantityError::Evaluation { quantity, .. }
                    | crate::quantity::QuantityError::NotANumber { quantity } => quantity.clone(),
                    crate::quantity::QuantityError::NonFiniteParameter(_) => String::new(),
                };
                quantity_errors.push(QuantityFailure {
                    quantity,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(SimulationResult {
        record,
        ranks,
        quantity_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    struct UnitNormal;

    fn normal(rng: &mut RngStream) -> f64 {
        // Box-Muller keeps the test free of extra dependencies.
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    impl Generator for UnitNormal {
        type Data = f64;

        fn generate(&self, rng: &mut RngStream) -> (ParameterVector, f64) {
            let theta = normal(rng);
            let y = theta + normal(rng);
            (ParameterVector::new(vec![theta]).unwrap(), y)
        }
    }

    /// Exact posterior N(y/2, 1/2); fails whenever y > 2.5.
    struct Exact;

    impl PosteriorFamily<f64> for Exact {
        fn name(&self) -> String {
            "exact".into()
        }

        fn sample(
            &self,
            y: &f64,
            draws: usize,
            _thin: usize,
            rng: &mut RngStream,
        ) -> Result<Vec<ParameterVector>, FitError> {
            if *y > 2.5 {
                return Err(FitError("diverged".into()));
            }
            Ok((0..draws)
                .map(|_| ParameterVector::new(vec![y / 2.0 + normal(rng) * 0.5f64.sqrt()]).unwrap())
                .collect())
        }
    }

    fn quantities() -> Vec<TestQuantity<f64>> {
        vec![
            TestQuantity::new("theta", |t: &ParameterVector, _: &f64| t[0]),
            TestQuantity::new("const", |_: &ParameterVector, _: &f64| 1.0),
        ]
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = SbcConfig::new(3, 10, 42);
        let a = run_sbc(&UnitNormal, &Exact, &quantities(), cfg).unwrap();
        let b = run_sbc(&UnitNormal, &Exact, &quantities(), cfg).unwrap();
        assert_eq!(a.rank_rows(), b.rank_rows());
        assert_eq!(a.results.len() + a.failures.len(), 3);
    }

    #[test]
    fn schedule_does_not_matter() {
        let cfg = SbcConfig::new(64, 20, 5);
        let parallel = run_sbc(&UnitNormal, &Exact, &quantities(), cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| run_sbc(&UnitNormal, &Exact, &quantities(), cfg).unwrap());
        assert_eq!(parallel.rank_rows(), serial.rank_rows());
    }

    #[test]
    fn failures_are_excluded_and_counted() {
        let cfg = SbcConfig::new(400, 5, 9);
        let run = run_sbc(&UnitNormal, &Exact, &quantities(), cfg).unwrap();
        assert!(!run.failures.is_empty());
        assert_eq!(run.results.len() + run.failures.len(), 400);
        assert_eq!(run.ranks("theta").len(), run.results.len());
        for f in &run.failures {
            assert!(f.reason.contains("diverged"));
        }
    }

    #[test]
    fn constant_quantity_ranks_are_spread_by_ties() {
        let cfg = SbcConfig::new(200, 4, 3);
        let run = run_sbc(&UnitNormal, &Exact, &quantities(), cfg).unwrap();
        let ranks = run.ranks("const");
        for r in 0..=4u32 {
            assert!(ranks.contains(&r));
        }
        for row in run.rank_rows().iter().filter(|r| r.quantity == "const") {
            assert_eq!((row.n_less, row.n_equals), (0, 4));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SbcConfig::new(0, 10, 1);
        assert!(run_sbc(&UnitNormal, &Exact, &quantities(), cfg).is_err());
        let cfg = SbcConfig::new(1, 10, 1).with_thin(0);
        assert!(run_sbc(&UnitNormal, &Exact, &quantities(), cfg).is_err());
    }
}
