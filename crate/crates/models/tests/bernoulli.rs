use sbc_core::diagnostics::chi_square_uniformity;
use sbc_core::{run_sbc, SbcConfig};
use sbc_models::bernoulli::{
    self, companion_family, q_curve, required_midpoint, sbc_residual, AnalyticQuantity, BernoulliModel,
    FamilyPosterior, QuantileFamily,
};

#[test]
fn correct_family_sbc_run_is_uniform() {
    let run = run_sbc(
        &BernoulliModel,
        &FamilyPosterior::new(QuantileFamily::correct()),
        &bernoulli::quantity_library(),
        SbcConfig::new(4000, 19, 3),
    )
    .unwrap();
    for q in &run.quantity_names {
        let chi = chi_square_uniformity(&run.rank_set(q), 20).unwrap();
        assert!(chi.p_value > 1e-3, "{q}: p = {}", chi.p_value);
    }
}

#[test]
fn q_curve_of_correct_family_is_the_diagonal() {
    for point in q_curve(&QuantileFamily::correct(), AnalyticQuantity::Wrapped, 200) {
        assert!((point.avg - point.x).abs() < 1e-10);
    }
}

#[test]
fn companion_of_the_correct_lower_quantile_is_correct() {
    let family = companion_family("companion", |x: f64| 1.0 - (1.0 - x).sqrt()).unwrap();
    for q in AnalyticQuantity::ALL {
        assert!(sbc_residual(&family, q, 200).unwrap() < 1e-8, "{}", q.name());
    }
    assert!((family.quantile(0, 0.5) - required_midpoint()).abs() < 1e-8);
}

#[test]
fn named_families_against_projection() {
    let residual = |name: &str| sbc_residual(&QuantileFamily::from_name(name).unwrap(), AnalyticQuantity::Projection, 400).unwrap();
    assert!(residual("correct") < 1e-10);
    assert!(residual("phi-B") < 1e-8);
    assert!(residual("phi-A") > 1e-2);
    assert!(residual("phi-C") > 1e-2);
}
