//! Static checks of a run file and its datasets.

use std::collections::BTreeMap;

use polybias::corpus::{validate_parallel_splits, DatasetKind, DatasetManifest, ParallelSplitReport};
use serde::{Deserialize, Serialize};

use super::evaluate::load_entry;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub datasets: Vec<DatasetManifest>,
    /// Cross-language id and exclusion checks, per kind with two or more
    /// languages.
    pub parallel: Vec<ParallelSplitReport>,
    pub passed: bool,
}

/// Loads every split (enforcing the corpus invariants), checks the backend
/// configuration and compares splits of the same kind across languages.
/// A failed check is reported and returned as a validation error.
pub fn validate(config: &RunConfig) -> Result<ValidationReport, CliError> {
    if let Some(b) = &config.backend {
        b.validate()?;
    }
    let datasets: Vec<DatasetManifest> = config
        .datasets
        .iter()
        .map(|d| load_entry(d).map(|(_, m)| m))
        .collect::<Result<_, _>>()?;
    let mut by_kind: BTreeMap<DatasetKind, Vec<DatasetManifest>> = BTreeMap::new();
    for m in &datasets {
        by_kind.entry(m.dataset_kind).or_default().push(m.clone());
    }
    let parallel: Vec<ParallelSplitReport> = by_kind
        .values()
        .filter(|ms| ms.len() >= 2)
        .map(|ms| validate_parallel_splits(ms))
        .collect::<Result<_, _>>()?;
    let passed = parallel.iter().all(|p| p.passed);
    Ok(ValidationReport {
        datasets,
        parallel,
        passed,
    })
}
