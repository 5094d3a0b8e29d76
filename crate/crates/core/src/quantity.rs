//! Parameter vectors and test quantities.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimulationRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantityError {
    #[error("parameter vector contains a non-finite entry at index {0}")]
    NonFiniteParameter(usize),
    #[error("quantity `{quantity}` failed: {reason}")]
    Evaluation { quantity: String, reason: String },
    #[error("quantity `{quantity}` returned NaN")]
    NotANumber { quantity: String },
}

/// A point in a model's parameter space. All entries are finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self, QuantityError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QuantityError::NonFiniteParameter(i));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.0.get(index).copied()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

type Evaluator<D> = dyn Fn(&ParameterVector, &D) -> Result<f64, String> + Send + Sync;

/// A named scalar function of parameters and data.
///
/// Evaluators may return `-inf` (for example a log density at a boundary);
/// such values take part in ordering and ties. Returning NaN is an error.
pub struct TestQuantity<D> {
    name: String,
    evaluator: Arc<Evaluator<D>>,
}

impl<D> Clone for TestQuantity<D> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            evaluator: Arc::clone(&self.evaluator),
        }
    }
}

impl<D> fmt::Debug for TestQuantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestQuantity").field("name", &self.name).finish()
    }
}

impl<D> TestQuantity<D> {
    /// Wraps an infallible evaluator.
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&ParameterVector, &D) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            evaluator: Arc::new(move |theta, data| Ok(f(theta, data))),
        }
    }

    pub fn fallible<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&ParameterVector, &D) -> Result<f64, String> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            evaluator: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluate(&self, theta: &ParameterVector, data: &D) -> Result<f64, QuantityError> {
        let value = (self.evaluator)(theta, data).map_err(|reason| QuantityError::Evaluation {
            quantity: self.name.clone(),
            reason,
        })?;
        if value.is_nan() {
            return Err(QuantityError::NotANumber {
                quantity: self.name.clone(),
            });
        }
        Ok(value)
    }
}

/// A quantity projected onto one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantityValues {
    pub quantity: String,
    pub prior_value: f64,
    pub posterior_values: Vec<f64>,
}

/// Evaluates each quantity on the prior draw and on every posterior draw of
/// `record`, preserving draw order. A failing quantity does not affect the
/// others.
pub fn evaluate_quantities<D>(
    record: &SimulationRecord<D>,
    quantities: &[TestQuantity<D>],
) -> Vec<Result<QuantityValues, QuantityError>> {
    quantities
        .iter()
        .map(|q| {
            let prior_value = q.evaluate(&record.prior_draw, &record.data)?;
            let posterior_values = record
                .posterior_draws
                .iter()
                .map(|theta| q.evaluate(theta, &record.data))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(QuantityValues {
                quantity: q.name().to_string(),
                prior_value,
                posterior_values,
            })
        })
        .collect()
}
