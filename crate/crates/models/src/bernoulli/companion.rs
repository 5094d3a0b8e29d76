//! Building families that pass the projection check (and optionally the
//! likelihood check) from a freely chosen quantile function for `y = 0`.

use std::sync::Arc;

use thiserror::Error;

use super::family::QuantileFamily;

/// Slack allowed below zero in the square-root argument.
const RADICAND_SLACK: f64 = 1e-12;
const PROBES: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompanionError {
    #[error("quantile for y = 0 is too high at x = {x}: square-root argument {radicand} < 0")]
    RadicandNegative { x: f64, radicand: f64 },
    #[error("quantile for y = 0 is too low at x = {x}: companion quantile {value} exceeds 1")]
    AboveUnit { x: f64, value: f64 },
    #[error("companion quantile decreases near x = {x}")]
    NotMonotone { x: f64 },
    #[error("quantile for y = 0 at one half is {value}, must be 1 - sqrt(2)/2")]
    MidpointMismatch { value: f64 },
}

/// The quantile for `y = 1` that makes the pair pass the projection check
/// at level `x`: `sqrt(2x + (q0(x) - 1)^2 - 1)`.
pub fn solve_companion_quantile<F: Fn(f64) -> f64>(phi_inv_0: F, x: f64) -> Result<f64, CompanionError> {
    let p = phi_inv_0(x);
    let radicand = 2.0 * x + (p - 1.0).powi(2) - 1.0;
    if radicand < -RADICAND_SLACK {
        return Err(CompanionError::RadicandNegative { x, radicand });
    }
    let value = radicand.max(0.0).sqrt();
    if value > 1.0 + RADICAND_SLACK {
        return Err(CompanionError::AboveUnit { x, value });
    }
    Ok(value.min(1.0))
}

fn check_probes<F: Fn(f64) -> f64>(phi_inv_0: &F) -> Result<(), CompanionError> {
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=PROBES {
        let x = i as f64 / PROBES as f64;
        let v = solve_companion_quantile(phi_inv_0, x)?;
        if v < prev - 1e-12 {
            return Err(CompanionError::NotMonotone { x });
        }
        prev = v;
    }
    Ok(())
}

/// Pairs `phi_inv_0` with its companion after checking validity on a
/// probe grid.
pub fn companion_family<F>(name: &str, phi_inv_0: F) -> Result<QuantileFamily, CompanionError>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    check_probes(&phi_inv_0)?;
    let q0 = Arc::new(phi_inv_0);
    let q1 = q0.clone();
    Ok(QuantileFamily::new(
        name,
        move |x| q0(x),
        move |x| solve_companion_quantile(|t| q1(t), x).unwrap_or(f64::NAN),
    ))
}

/// The value every family passing both the projection and the likelihood
/// checks must take at level one half (for `y = 0`).
pub fn required_midpoint() -> f64 {
    1.0 - std::f64::consts::SQRT_2 / 2.0
}

/// Completes a quantile for `y = 0` given only on `[0, 1/2]` so that the
/// family passes both the projection and the likelihood checks. The upper
/// half follows from the likelihood condition, the `y = 1` quantile from
/// the projection condition.
pub fn projection_likelihood_family<F>(name: &str, lower_half: F) -> Result<QuantileFamily, CompanionError>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let mid = lower_half(0.5);
    if (mid - required_midpoint()).abs() > 1e-8 {
        return Err(CompanionError::MidpointMismatch { value: mid });
    }
    let lower = Arc::new(lower_half);
    let full = move |x: f64| {
        if x <= 0.5 {
            lower(x)
        } else {
            let reflected = 1.0 - lower(1.0 - x);
            1.0 - (1.0 - reflected * reflected).max(0.0).sqrt()
        }
    };
    companion_family(name, full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correct_posterior_is_a_fixed_point() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let v = solve_companion_quantile(|t| 1.0 - (1.0 - t).sqrt(), x).unwrap();
            assert!((v - x.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_lower_piece() {
        for i in 0..75 {
            let x = i as f64 / 100.0;
            let v = solve_companion_quantile(|t| 2.0 * t / 3.0, x).unwrap();
            assert!((v - (6.0 * x + 4.0 * x * x).sqrt() / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn per_condition_errors() {
        // Too high below one half.
        assert!(matches!(
            solve_companion_quantile(|t: f64| t.sqrt(), 0.25),
            Err(CompanionError::RadicandNegative { .. })
        ));
        // Too low above one half.
        assert!(matches!(
            solve_companion_quantile(|_| 0.0, 0.9),
            Err(CompanionError::AboveUnit { .. })
        ));
        // A jump in the y = 0 quantile pulls the companion down.
        let steep = |t: f64| if t < 0.4 { 0.0 } else { 0.3 };
        assert!(matches!(companion_family("steep", steep), Err(CompanionError::NotMonotone { .. })));
    }

    #[test]
    fn midpoint_is_enforced() {
        assert!(matches!(
            projection_likelihood_family("bad", |x| 0.5 * x),
            Err(CompanionError::MidpointMismatch { .. })
        ));
        let c = 2.0 * required_midpoint();
        let family = projection_likelihood_family("good", move |x| c * x).unwrap();
        assert!((family.quantile(0, 0.5) - required_midpoint()).abs() < 1e-12);
        family.validate(1000).unwrap();
    }
}
