use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, CorpusError, Dataset, DatasetKind, IdSet, Language};

/// Describes one language split of a dataset as it was loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_kind: DatasetKind,
    pub language: Language,
    pub source_uri: String,
    /// SHA-256 hex digest of the raw dataset file.
    pub checksum: String,
    /// Records loaded after exclusions.
    pub example_count: usize,
    pub excluded_ids: IdSet,
    /// Ids of the loaded records, in source order.
    pub record_ids: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CorpusError> {
    let bytes = std::fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(crate::digest::sha256_hex(&bytes))
}

impl DatasetManifest {
    /// Loads `path` with the loader for `kind` and records what was loaded.
    pub fn build(kind: DatasetKind, language: &Language, path: &Path, exclusions: &IdSet) -> Result<Self, CorpusError> {
        let record_ids: Vec<String> = Dataset::load(kind, path, language, exclusions)?
            .ids()
            .into_iter()
            .map(String::from)
            .collect();
        Ok(DatasetManifest {
            dataset_kind: kind,
            language: language.clone(),
            source_uri: path.display().to_string(),
            checksum: sha256_file(path)?,
            example_count: record_ids.len(),
            excluded_ids: exclusions.clone(),
            record_ids,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(path, (text + "\n").as_bytes())
    }

    /// Checks the file at `source` still matches the recorded checksum.
    pub fn verify_checksum(&self, source: &Path) -> Result<bool, CorpusError> {
        Ok(sha256_file(source)? == self.checksum)
    }
}

/// On-disk exclusion set shared between annotation and corpus loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionFile {
    pub ids: IdSet,
}

pub fn read_exclusions(path: &Path) -> Result<IdSet, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let file: ExclusionFile = serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(file.ids)
}

pub fn write_exclusions(path: &Path, ids: &IdSet) -> Result<(), CorpusError> {
    let text = serde_json::to_string_pretty(&ExclusionFile { ids: ids.clone() }).expect("exclusions serialize");
    write_atomic(path, (text + "\n").as_bytes())
}

/// Cross-language consistency of a set of splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelSplitReport {
    pub dataset_kind: DatasetKind,
    pub languages: Vec<Language>,
    /// Per language: ids present in some other split but absent here.
    pub missing_ids: BTreeMap<Language, IdSet>,
    /// Per language: ids excluded in some other split but not here.
    pub exclusion_mismatches: BTreeMap<Language, IdSet>,
    /// Languages whose `example_count` disagrees with `record_ids`.
    pub count_mismatches: Vec<Language>,
    pub passed: bool,
}

pub fn validate_parallel_splits(manifests: &[DatasetManifest]) -> Result<ParallelSplitReport, CorpusError> {
    if manifests.len() < 2 {
        return Err(CorpusError::TooFewSplits(manifests.len()));
    }
    let kind = manifests[0].dataset_kind;
    if let Some(other) = manifests.iter().find(|m| m.dataset_kind != kind) {
        return Err(CorpusError::MixedKinds(kind, other.dataset_kind));
    }

    let union_ids: IdSet = manifests.iter().flat_map(|m| m.record_ids.iter().cloned()).collect();
    let union_excluded: IdSet = manifests.iter().flat_map(|m| m.excluded_ids.iter().cloned()).collect();

    let mut missing_ids = BTreeMap::new();
    let mut exclusion_mismatches = BTreeMap::new();
    let mut count_mismatches = Vec::new();
    for m in manifests {
        let own: IdSet = m.record_ids.iter().cloned().collect();
        let missing: IdSet = union_ids.difference(&own).cloned().collect();
        if !missing.is_empty() {
            missing_ids.insert(m.language.clone(), missing);
        }
        let unexcluded: IdSet = union_excluded.difference(&m.excluded_ids).cloned().collect();
        if !unexcluded.is_empty() {
            exclusion_mismatches.insert(m.language.clone(), unexcluded);
        }
        if m.example_count != m.record_ids.len() || own.len() != m.record_ids.len() {
            count_mismatches.push(m.language.clone());
        }
    }
    let passed = missing_ids.is_empty() && exclusion_mismatches.is_empty() && count_mismatches.is_empty();
    Ok(ParallelSplitReport {
        dataset_kind: kind,
        languages: manifests.iter().map(|m| m.language.clone()).collect(),
        missing_ids,
        exclusion_mismatches,
        count_mismatches,
        passed,
    })
}
