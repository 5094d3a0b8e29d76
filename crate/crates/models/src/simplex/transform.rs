//! Maps onto the ordered simplex `0 < x_1 < ... < x_K`, `sum x = 1`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("input {index} = {value} outside the open unit interval")]
    OutsideUnitInterval { index: usize, value: f64 },
    #[error("input must be positive and strictly increasing (fails at index {0})")]
    NotIncreasing(usize),
    #[error("need at least {0} inputs")]
    TooShort(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformResult {
    pub x: Vec<f64>,
    /// `ln |det J|` of the map from the inputs to the first coordinates.
    pub log_jacobian: f64,
}

/// Stick-breaking with each break limited to the share that keeps the
/// remaining coordinates larger. `u` has length `K - 1`.
pub fn transform_min(u: &[f64]) -> Result<TransformResult, TransformError> {
    if u.is_empty() {
        return Err(TransformError::TooShort(1));
    }
    let k = u.len() + 1;
    let mut x = Vec::with_capacity(k);
    let mut base = 0.0;
    let mut remaining = 1.0;
    let mut log_jacobian = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        if !(ui > 0.0 && ui < 1.0) {
            return Err(TransformError::OutsideUnitInterval { index: i, value: ui });
        }
        let slots = (k - i) as f64;
        let xi = base + remaining * ui / slots;
        log_jacobian += remaining.ln() - slots.ln();
        x.push(xi);
        base = xi;
        remaining *= 1.0 - ui;
    }
    let last = 1.0 - x.iter().sum::<f64>();
    x.push(last);
    Ok(TransformResult { x, log_jacobian })
}

/// Softmax of `(0, v_1, ..., v_{K-1})` for increasing positive `v`. With
/// `fixed = false` the log-Jacobian is off by `ln s`.
pub fn transform_softmax(v: &[f64], fixed: bool) -> Result<TransformResult, TransformError> {
    if v.is_empty() {
        return Err(TransformError::TooShort(1));
    }
    check_increasing(v)?;
    let k = v.len() + 1;
    let max = v[v.len() - 1];
    // s = 1 + sum exp(v), computed relative to the largest term.
    let scaled: f64 = (-max).exp() + v.iter().map(|&vi| (vi - max).exp()).sum::<f64>();
    let ln_s = max + scaled.ln();
    let mut x = Vec::with_capacity(k);
    x.push((-ln_s).exp());
    x.extend(v.iter().map(|&vi| (vi - ln_s).exp()));
    let power = if fixed { k } else { k - 1 } as f64;
    let log_jacobian = v.iter().sum::<f64>() - power * ln_s;
    Ok(TransformResult { x, log_jacobian })
}

/// Normalizes increasing positive `w`.
pub fn transform_gamma(w: &[f64]) -> Result<Vec<f64>, TransformError> {
    if w.len() < 2 {
        return Err(TransformError::TooShort(2));
    }
    check_increasing(w)?;
    let total: f64 = w.iter().sum();
    Ok(w.iter().map(|wi| wi / total).collect())
}

fn check_increasing(v: &[f64]) -> Result<(), TransformError> {
    let mut prev = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        if !(vi > prev) || !vi.is_finite() {
            return Err(TransformError::NotIncreasing(i));
        }
        prev = vi;
    }
    Ok(())
}

/// Unconstrained `z` to `(0,1)^d` by the logistic map, with
/// `ln |det| = sum ln(u (1 - u))`.
pub fn logit_inverse(z: &[f64]) -> (Vec<f64>, f64) {
    let mut log_jacobian = 0.0;
    let u = z
        .iter()
        .map(|&zi| {
            // ln u + ln(1-u) = -|z| - 2 ln(1 + e^{-|z|})
            log_jacobian += -zi.abs() - 2.0 * (-zi.abs()).exp().ln_1p();
            1.0 / (1.0 + (-zi).exp())
        })
        .collect();
    (u, log_jacobian)
}

/// Unconstrained `z` to an increasing positive vector through cumulative
/// sums of `exp(z)`, with `ln |det| = sum z`.
pub fn positive_ordered(z: &[f64]) -> (Vec<f64>, f64) {
    let mut acc = 0.0;
    let v = z
        .iter()
        .map(|&zi| {
            acc += zi.exp();
            acc
        })
        .collect();
    (v, z.iter().sum())
}
