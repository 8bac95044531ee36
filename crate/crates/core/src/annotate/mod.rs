//! Human quality control of translations: review tasks, annotation
//! records, agreement and exclusion sets, persisted in SQLite and exposed
//! over HTTP.

mod http;
mod service;
mod summary;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{router, serve};
pub use service::{derive_exclusions, AnnotationService, Annotator, Clock};
pub use summary::{
    agreement_from_records, summarize_records, AgreementReport, AgreementStatus, AnnotatorSummary, BiasCounts,
    PairAgreement, Summary,
};

/// Translation quality on the three-level scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "QualityRepr")]
pub enum Quality {
    Wrong = 0,
    Bumpy = 1,
    Correct = 2,
}

impl Quality {
    pub const ALL: [Quality; 3] = [Quality::Wrong, Quality::Bumpy, Quality::Correct];

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn from_level(level: u8) -> Option<Self> {
        Quality::ALL.get(usize::from(level)).copied()
    }
}

/// Accepts either the level number or the name.
#[derive(Deserialize)]
#[serde(untagged)]
enum QualityRepr {
    Level(u8),
    Name(String),
}

impl TryFrom<QualityRepr> for Quality {
    type Error = String;

    fn try_from(r: QualityRepr) -> Result<Self, String> {
        match r {
            QualityRepr::Level(n) => Quality::from_level(n).ok_or_else(|| format!("quality level {n} is not 0, 1 or 2")),
            QualityRepr::Name(s) => match s.as_str() {
                "wrong" => Ok(Quality::Wrong),
                "bumpy" => Ok(Quality::Bumpy),
                "correct" => Ok(Quality::Correct),
                other => Err(format!("unknown quality `{other}`; expected wrong, bumpy or correct")),
            },
        }
    }
}

/// How the stereotype survived translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasJudgment {
    Same,
    More,
    Less,
    None,
    NotReasonable,
}

impl BiasJudgment {
    pub const ALL: [BiasJudgment; 5] = [
        BiasJudgment::Same,
        BiasJudgment::More,
        BiasJudgment::Less,
        BiasJudgment::None,
        BiasJudgment::NotReasonable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BiasJudgment::Same => "same",
            BiasJudgment::More => "more",
            BiasJudgment::Less => "less",
            BiasJudgment::None => "none",
            BiasJudgment::NotReasonable => "not_reasonable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        BiasJudgment::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

impl fmt::Display for BiasJudgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sample_id: String,
    pub annotator_id: String,
    pub language: String,
    pub provider_id: String,
    pub quality: Quality,
    pub bias_judgment: BiasJudgment,
    #[serde(default)]
    pub comment: String,
    pub timestamp: String,
}

/// Body of an annotation submission; the annotator comes from the bearer
/// token and the timestamp from the server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSubmission {
    pub sample_id: String,
    pub language: String,
    pub provider_id: String,
    pub quality: Quality,
    pub bias_judgment: BiasJudgment,
    #[serde(default)]
    pub comment: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub sample_id: String,
    pub source_text: String,
    /// Translation per provider id.
    pub candidate_translations: BTreeMap<String, String>,
    pub language: String,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitAck {
    /// True when an earlier record for the same key was replaced.
    pub overwritten: bool,
    /// True when the judgment puts the sample on the exclusion list.
    pub flagged_for_exclusion: bool,
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(String),
    #[error("annotator `{annotator}` is not assigned to language `{language}`")]
    LanguageNotAssigned { annotator: String, language: String },
    #[error("unknown sample `{sample_id}` for language `{language}`")]
    UnknownSample { sample_id: String, language: String },
    #[error("provider `{provider_id}` has no candidate for sample `{sample_id}`")]
    UnknownProvider { sample_id: String, provider_id: String },
    #[error("invalid `{field}`: {message}")]
    InvalidField { field: String, message: String },
    #[error("annotation store: {0}")]
    Store(#[from] rusqlite::Error),
    #[error("annotation store schema version {found} is newer than supported {supported}")]
    SchemaTooNew { found: i64, supported: i64 },
}
