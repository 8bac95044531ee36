//! Option log-likelihood selection for multiple-choice items and
//! pseudo-log-likelihood scoring of CrowS-Pairs sentences.

mod align;
mod choice;
mod pll;
mod predictions;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::{align_pair, words, TokenAlignment, WordSpan};
pub use choice::{score_mc_example, score_mc_examples, ChoiceScore, MultipleChoice, PredictionRecord};
pub use pll::{score_pair, score_pairs, score_pll, PairScore, PllMode};
pub use predictions::{read_jsonl, write_jsonl};

use crate::backend::BackendError;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("example `{example_id}`: {source}")]
    Backend {
        example_id: String,
        #[source]
        source: BackendError,
    },
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("example `{0}` has no options")]
    NoOptions(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

impl ScoringError {
    pub(crate) fn backend(example_id: &str, source: BackendError) -> Self {
        ScoringError::Backend {
            example_id: example_id.to_string(),
            source,
        }
    }
}

/// Strings inserted when building model inputs; recorded in run manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JoinStrings {
    /// Between the context and the question.
    pub context_question: String,
    /// Prepended to every option continuation.
    pub before_option: String,
}

impl Default for JoinStrings {
    fn default() -> Self {
        JoinStrings {
            context_question: " ".into(),
            before_option: " ".into(),
        }
    }
}

pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringOptions {
    pub joins: JoinStrings,
    /// Options within this many nats of the best are reported as tied.
    pub tie_tolerance: f64,
    pub pll_mode: PllMode,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            joins: JoinStrings::default(),
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            pll_mode: PllMode::Causal,
        }
    }
}
