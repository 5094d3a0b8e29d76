//! Ranks from exact posteriors pass the chi-square uniformity test in nearly
//! every seeded repetition, for every model and quantity.

use sbc_core::diagnostics::chi_square_uniformity;
use sbc_core::{run_sbc, Generator, PosteriorFamily, SbcConfig, TestQuantity};
use sbc_models::bernoulli::{self, BernoulliModel, FamilyPosterior, QuantileFamily};
use sbc_models::gaussian::{self, GaussianPosterior, GaussianVariant, MvnModel};
use sbc_models::simplex::{self, ExactOrderedPosterior, SimplexModel};

const SIMS: usize = 2000;
const DRAWS: usize = 19;
const REPETITIONS: u64 = 100;
const REQUIRED: usize = 99;

fn assert_calibrated<G, P>(model: &G, posterior: &P, quantities: &[TestQuantity<G::Data>])
where
    G: Generator,
    P: PosteriorFamily<G::Data>,
{
    let mut passes = vec![0usize; quantities.len()];
    let mut names = Vec::new();
    for seed in 0..REPETITIONS {
        let run = run_sbc(model, posterior, quantities, SbcConfig::new(SIMS, DRAWS, 1000 + seed)).unwrap();
        assert!(run.failures.is_empty(), "{:?}", run.failures.first());
        for (count, q) in passes.iter_mut().zip(&run.quantity_names) {
            let chi = chi_square_uniformity(&run.rank_set(q), DRAWS + 1).unwrap();
            *count += usize::from(chi.p_value > 1e-3);
        }
        names = run.quantity_names;
    }
    for (q, count) in names.iter().zip(&passes) {
        assert!(*count >= REQUIRED, "{q}: {count}/{REPETITIONS} repetitions uniform");
    }
}

#[test]
fn gaussian_correct_posterior() {
    let variant = GaussianVariant::Correct;
    assert_calibrated(
        &MvnModel::new(3).unwrap(),
        &GaussianPosterior::new(variant).unwrap(),
        &gaussian::quantity_library(variant),
    );
}

#[test]
fn bernoulli_correct_family() {
    assert_calibrated(
        &BernoulliModel,
        &FamilyPosterior::new(QuantileFamily::correct()),
        &bernoulli::quantity_library(),
    );
}

#[test]
fn simplex_exact_posterior() {
    assert_calibrated(&SimplexModel, &ExactOrderedPosterior::default(), &simplex::quantity_library());
}
