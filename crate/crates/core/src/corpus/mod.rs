//! Benchmark corpora: CrowS-Pairs sentence pairs, BBQ multiple-choice
//! questions and Belebele reading-comprehension items.
//!
//! Loaders are pure functions of the file bytes and the exclusion set. They
//! validate every record against the dataset invariants and report the
//! offending row (1-based, header excluded) on failure.

mod bbq;
mod belebele;
mod crows;
mod manifest;
mod writer;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bbq::{load_bbq, load_bbq_str, BbqExample, ContextCondition, Polarity};
pub use belebele::{load_belebele, load_belebele_str, BelebeleExample};
pub use crows::{load_crows_pairs, load_crows_pairs_str, CrowsPairsExample, Direction};
pub use manifest::{
    read_exclusions, sha256_file, validate_parallel_splits, write_exclusions, DatasetManifest,
    ExclusionFile, ParallelSplitReport,
};
pub use writer::{
    bbq_to_jsonl, belebele_to_jsonl, crows_pairs_to_csv, write_bbq, write_belebele, write_crows_pairs,
};
pub use writer::write_atomic;

/// A set of example ids, ordered for stable serialization.
pub type IdSet = BTreeSet<String>;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: row {row}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        field: String,
        message: String,
    },
    #[error("{}: row {row}: {message}", path.display())]
    Validation {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{}: duplicate id `{id}` at row {row}", path.display())]
    DuplicateId { path: PathBuf, row: usize, id: String },
    #[error("parallel split validation needs at least two manifests, got {0}")]
    TooFewSplits(usize),
    #[error("manifests mix dataset kinds: {0} and {1}")]
    MixedKinds(DatasetKind, DatasetKind),
    #[error("invalid language code `{0}`")]
    InvalidLanguage(String),
    #[error("malformed manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// The nine social-bias dimensions shared by CrowS-Pairs and BBQ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasCategory {
    Race,
    Gender,
    SexualOrientation,
    Religion,
    Age,
    Nationality,
    Disability,
    PhysicalAppearance,
    Socioeconomic,
}

impl BiasCategory {
    pub const ALL: [BiasCategory; 9] = [
        BiasCategory::Race,
        BiasCategory::Gender,
        BiasCategory::SexualOrientation,
        BiasCategory::Religion,
        BiasCategory::Age,
        BiasCategory::Nationality,
        BiasCategory::Disability,
        BiasCategory::PhysicalAppearance,
        BiasCategory::Socioeconomic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BiasCategory::Race => "race",
            BiasCategory::Gender => "gender",
            BiasCategory::SexualOrientation => "sexual-orientation",
            BiasCategory::Religion => "religion",
            BiasCategory::Age => "age",
            BiasCategory::Nationality => "nationality",
            BiasCategory::Disability => "disability",
            BiasCategory::PhysicalAppearance => "physical-appearance",
            BiasCategory::Socioeconomic => "socioeconomic",
        }
    }

    /// Maps the `bias_type` column of the CrowS-Pairs distribution.
    pub fn from_crows_label(label: &str) -> Option<Self> {
        match label.trim() {
            "race-color" | "race" => Some(BiasCategory::Race),
            "socioeconomic" => Some(BiasCategory::Socioeconomic),
            other => other.parse().ok(),
        }
    }

    /// Maps the `category` field of the BBQ distribution. The intersectional
    /// BBQ categories (`Race_x_SES`, `Race_x_gender`) have no counterpart and
    /// map to `None`.
    pub fn from_bbq_label(label: &str) -> Option<Self> {
        match label.trim() {
            "Age" => Some(BiasCategory::Age),
            "Disability_status" => Some(BiasCategory::Disability),
            "Gender_identity" => Some(BiasCategory::Gender),
            "Nationality" => Some(BiasCategory::Nationality),
            "Physical_appearance" => Some(BiasCategory::PhysicalAppearance),
            "Race_ethnicity" => Some(BiasCategory::Race),
            "Religion" => Some(BiasCategory::Religion),
            "SES" => Some(BiasCategory::Socioeconomic),
            "Sexual_orientation" => Some(BiasCategory::SexualOrientation),
            other => other.parse().ok(),
        }
    }
}

impl fmt::Display for BiasCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BiasCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown bias category `{s}`"))
    }
}

/// A BCP-47 language tag such as `en`, `de` or `pt-BR`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Language(String);

impl Language {
    pub fn new(tag: impl Into<String>) -> Result<Self, CorpusError> {
        let tag = tag.into();
        let mut parts = tag.split('-');
        let primary_ok = parts
            .next()
            .is_some_and(|p| (2..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphabetic()));
        let rest_ok = parts.all(|p| (1..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphanumeric()));
        if primary_ok && rest_ok {
            Ok(Language(tag))
        } else {
            Err(CorpusError::InvalidLanguage(tag))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Language {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Language::new(value)
    }
}

impl From<Language> for String {
    fn from(value: Language) -> Self {
        value.0
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::new(s)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    CrowsPairs,
    Bbq,
    Belebele,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::CrowsPairs => "crows_pairs",
            DatasetKind::Bbq => "bbq",
            DatasetKind::Belebele => "belebele",
        }
    }

    /// File extension of the upstream distribution format.
    pub fn file_extension(self) -> &'static str {
        match self {
            DatasetKind::CrowsPairs => "csv",
            DatasetKind::Bbq | DatasetKind::Belebele => "jsonl",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "crows_pairs" | "crows-pairs" => Ok(DatasetKind::CrowsPairs),
            "bbq" => Ok(DatasetKind::Bbq),
            "belebele" => Ok(DatasetKind::Belebele),
            other => Err(format!("unknown dataset kind `{other}`")),
        }
    }
}

/// A loaded split of any supported dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    CrowsPairs(Vec<CrowsPairsExample>),
    Bbq(Vec<BbqExample>),
    Belebele(Vec<BelebeleExample>),
}

impl Dataset {
    /// Loads `path` with the loader for `kind`, dropping excluded ids.
    pub fn load(kind: DatasetKind, path: &Path, language: &Language, exclusions: &IdSet) -> Result<Self, CorpusError> {
        Ok(match kind {
            DatasetKind::CrowsPairs => Dataset::CrowsPairs(load_crows_pairs(path, language, exclusions)?),
            DatasetKind::Bbq => Dataset::Bbq(load_bbq(path, language, exclusions)?),
            DatasetKind::Belebele => Dataset::Belebele(
                load_belebele(path, language)?
                    .into_iter()
                    .filter(|e| !exclusions.contains(&e.id))
                    .collect(),
            ),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        match self {
            Dataset::CrowsPairs(x) => write_crows_pairs(path, x),
            Dataset::Bbq(x) => write_bbq(path, x),
            Dataset::Belebele(x) => write_belebele(path, x),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            Dataset::CrowsPairs(_) => DatasetKind::CrowsPairs,
            Dataset::Bbq(_) => DatasetKind::Bbq,
            Dataset::Belebele(_) => DatasetKind::Belebele,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::CrowsPairs(x) => x.len(),
            Dataset::Bbq(x) => x.len(),
            Dataset::Belebele(x) => x.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<&str> {
        match self {
            Dataset::CrowsPairs(x) => x.iter().map(|e| e.id.as_str()).collect(),
            Dataset::Bbq(x) => x.iter().map(|e| e.id.as_str()).collect(),
            Dataset::Belebele(x) => x.iter().map(|e| e.id.as_str()).collect(),
        }
    }
}

/// Tracks ids seen while loading so duplicates are rejected with their row.
pub(crate) struct IdRegistry<'a> {
    path: &'a Path,
    seen: std::collections::HashSet<String>,
}

impl<'a> IdRegistry<'a> {
    pub(crate) fn new(path: &'a Path) -> Self {
        IdRegistry {
            path,
            seen: Default::default(),
        }
    }

    pub(crate) fn register(&mut self, id: &str, row: usize) -> Result<(), CorpusError> {
        if self.seen.insert(id.to_string()) {
            Ok(())
        } else {
            Err(CorpusError::DuplicateId {
                path: self.path.to_path_buf(),
                row,
                id: id.to_string(),
            })
        }
    }
}

/// Reads a file fully; loaders work on the bytes so they stay pure.
pub(crate) fn read_text(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))
}

/// Iterates non-blank lines of a JSON-lines document with 1-based numbering.
pub(crate) fn json_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| (i + 1, line))
}

/// Deserializes one JSON line, reporting the failing field path.
pub(crate) fn parse_json_line<T: serde::de::DeserializeOwned>(
    path: &Path,
    row: usize,
    line: &str,
) -> Result<T, CorpusError> {
    let mut de = serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        let message = inner.to_string();
        // missing-field errors are reported at the parent path
        let field = match (field.as_str(), message.strip_prefix("missing field `")) {
            (".", Some(rest)) => rest.split('`').next().unwrap_or("record").to_string(),
            (".", None) => "record".to_string(),
            _ => field,
        };
        CorpusError::Parse {
            path: path.to_path_buf(),
            row,
            field,
            message,
        }
    })
}
