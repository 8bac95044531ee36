//! Aggregate metrics: BBQ accuracies and bias scores, CrowS-Pairs
//! percentages, Belebele accuracy, microaverages and Cohen's kappa.
//!
//! Every value is a fraction (`[0, 1]` or `[-1, 1]`); percent conventions
//! belong to [`crate::report`]. Ratios of counts are a single division of
//! exact integers and means are summed exactly, so every value is the
//! correctly rounded result of the underlying rational.

mod bbq;
mod crows;
mod kappa;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bbq::{bbq_metrics, bbq_metrics_all, classify_biased_answer, AnswerClass, BbqCategoryMetrics};
pub use crows::{crows_metrics, crows_metrics_all, CrowsCategoryMetrics};
pub use kappa::{cohens_kappa, cohens_kappa_on_scale, AgreementResult, Weighting};

use crate::corpus::BelebeleExample;
use crate::scoring::PredictionRecord;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no items to aggregate{0}")]
    Empty(String),
    #[error("no prediction for example `{0}`")]
    MissingPrediction(String),
    #[error("prediction `{found}` does not belong to example `{expected}`")]
    IdMismatch { expected: String, found: String },
    #[error("rating lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label `{0}` is not on the rating scale")]
    UnknownLabel(String),
    #[error("example `{id}`: chosen index {index} out of range")]
    IndexOutOfRange { id: String, index: usize },
}

/// `num / den` rounded once. Both operands must be exactly representable.
pub(crate) fn ratio(num: i128, den: i128) -> f64 {
    debug_assert!(den != 0);
    debug_assert!(num.unsigned_abs() < 1 << 53 && den.unsigned_abs() < 1 << 53);
    num as f64 / den as f64
}

/// `Σ(value·weight) / Σweight` evaluated exactly and rounded once.
///
/// Returns `None` when the weights sum to zero or a value is not finite.
pub fn exact_weighted_mean<I: IntoIterator<Item = (f64, usize)>>(items: I) -> Option<f64> {
    let mut sum = BigRational::zero();
    let mut total = 0usize;
    for (value, weight) in items {
        sum += BigRational::from_float(value)? * BigInt::from(weight);
        total += weight;
    }
    if total == 0 {
        return None;
    }
    (sum / BigInt::from(total)).to_f64()
}

/// Frequency-weighted mean `Σ(value·n) / Σn`.
pub fn microaverage(per_category: &[(f64, usize)]) -> Result<f64, MetricsError> {
    exact_weighted_mean(per_category.iter().copied()).ok_or_else(|| MetricsError::Empty(" for microaverage".into()))
}

/// Fraction of examples whose chosen option is the gold label.
pub fn belebele_accuracy(examples: &[BelebeleExample], predictions: &[PredictionRecord]) -> Result<f64, MetricsError> {
    if examples.is_empty() {
        return Err(MetricsError::Empty(" for Belebele accuracy".into()));
    }
    let by_id = index_predictions(predictions);
    let mut correct = 0i128;
    for ex in examples {
        let p = by_id
            .get(ex.id.as_str())
            .ok_or_else(|| MetricsError::MissingPrediction(ex.id.clone()))?;
        correct += i128::from(p.chosen_index == ex.gold_label);
    }
    Ok(ratio(correct, examples.len() as i128))
}

pub(crate) fn index_predictions(predictions: &[PredictionRecord]) -> HashMap<&str, &PredictionRecord> {
    predictions.iter().map(|p| (p.example_id.as_str(), p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BelebeleResult {
    pub accuracy: f64,
    pub n: usize,
}

/// All metrics of one evaluation run; the input of [`crate::report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub run_id: String,
    pub model_id: String,
    /// Parameter count label such as `2.6B`.
    #[serde(default)]
    pub model_size: Option<String>,
    pub language: String,
    #[serde(default)]
    pub crows: Vec<CrowsCategoryMetrics>,
    #[serde(default)]
    pub bbq: Vec<BbqCategoryMetrics>,
    #[serde(default)]
    pub belebele: Option<BelebeleResult>,
}
