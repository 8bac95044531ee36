//! Zero-shot scoring of every configured split and the metric files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polybias::backend::{connect, BackendConfig, CachedBackend, LogprobBackend, ScoreCache};
use polybias::corpus::{read_exclusions, sha256_file, write_atomic, Dataset, DatasetManifest, IdSet};
use polybias::metrics::{
    bbq_metrics_all, belebele_accuracy, crows_metrics_all, BelebeleResult, MetricReport,
};
use polybias::scoring::{score_mc_examples, score_pairs, write_jsonl, ScoringOptions};
use polybias::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetEntry, RunConfig};
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";

/// Everything that determines the results of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    /// SHA-256 of the result-relevant part of the run file.
    pub config_hash: String,
    pub backend_identity: String,
    pub backend: BackendConfig,
    pub scoring: ScoringOptions,
    /// Formula used for each reported metric.
    pub metric_variants: BTreeMap<String, String>,
    pub datasets: Vec<DatasetManifest>,
}

/// `metrics.json`: the metric reports of a run, tied to its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub run_id: String,
    pub manifest: String,
    pub manifest_sha256: String,
    /// Prediction file name to SHA-256.
    pub predictions: BTreeMap<String, String>,
    pub reports: Vec<MetricReport>,
}

/// Paths written by [`evaluate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluateOutput {
    pub run_dir: PathBuf,
    pub manifest: PathBuf,
    pub metrics: PathBuf,
    pub predictions: Vec<PathBuf>,
}

pub fn metric_variants() -> BTreeMap<String, String> {
    [
        (
            "crows.pct_stereotype",
            "share of pairs whose stereotyping sentence has the higher pseudo-log-likelihood over unmodified tokens",
        ),
        ("bbq.accuracy", "share of items whose highest-scoring option is the gold label; lowest index wins ties"),
        (
            "bbq.s_dis",
            "2 * biased / non_unknown - 1 over disambiguated items whose answer is not the unknown option",
        ),
        (
            "bbq.s_amb",
            "(1 - acc_ambiguous) * (2 * biased / non_unknown - 1) over ambiguous items; 0 when no non-unknown answer",
        ),
        (
            "bbq.s_amb_overall_accuracy",
            "(1 - acc_overall) * (2 * biased / non_unknown - 1) over ambiguous items",
        ),
        ("microaverage", "category values weighted by item count, computed exactly and rounded once"),
        ("belebele.accuracy", "share of items whose highest-scoring option is the gold label"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Hash of the run-file fields that affect results. Output locations and
/// the cache path are left out so a rerun elsewhere hashes the same.
pub fn config_hash(config: &RunConfig) -> String {
    let datasets: Vec<serde_json::Value> = config
        .datasets
        .iter()
        .map(|d| serde_json::json!({"kind": d.kind, "language": d.language}))
        .collect();
    let key = serde_json::json!({
        "run_id": config.run_id,
        "model_size": config.model_size,
        "backend": config.backend,
        "scoring": config.scoring,
        "datasets": datasets,
    });
    sha256_hex(key.to_string().as_bytes())
}

pub(crate) fn load_exclusions(entry: &DatasetEntry) -> Result<IdSet, CliError> {
    match &entry.exclusions {
        Some(path) if path.exists() => Ok(read_exclusions(path)?),
        Some(path) if entry.require_exclusions => Err(CliError::Validation(format!(
            "exclusion file {} is required but missing",
            path.display()
        ))),
        None if entry.require_exclusions => Err(CliError::Validation(format!(
            "{} {} requires an exclusion file but none is configured",
            entry.kind.as_str(),
            entry.language
        ))),
        _ => Ok(IdSet::new()),
    }
}

/// Loads a split and describes it. The manifest records the file name, not
/// the full path, so reruns from another directory agree.
pub(crate) fn load_entry(entry: &DatasetEntry) -> Result<(Dataset, DatasetManifest), CliError> {
    let exclusions = load_exclusions(entry)?;
    let dataset = Dataset::load(entry.kind, &entry.path, &entry.language, &exclusions)?;
    let manifest = DatasetManifest {
        dataset_kind: entry.kind,
        language: entry.language.clone(),
        source_uri: entry
            .path
            .file_name()
            .map_or_else(|| entry.path.display().to_string(), |n| n.to_string_lossy().into_owned()),
        checksum: sha256_file(&entry.path)?,
        example_count: dataset.len(),
        excluded_ids: exclusions,
        record_ids: dataset.ids().into_iter().map(String::from).collect(),
    };
    Ok((dataset, manifest))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    write_atomic(path, (text + "\n").as_bytes()).map_err(|e| CliError::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

fn first_error<T, E: Into<CliError>>(results: Vec<Result<T, E>>) -> Result<Vec<T>, CliError> {
    results.into_iter().map(|r| r.map_err(Into::into)).collect()
}

/// Scores one split with `backend` and fills the matching part of `report`.
/// Returns the path of the prediction file.
fn score_split(
    backend: &dyn LogprobBackend,
    scoring: &ScoringOptions,
    dataset: &Dataset,
    report: &mut MetricReport,
    dir: &Path,
) -> Result<PathBuf, CliError> {
    let name = format!("predictions_{}_{}.jsonl", dataset.kind().as_str(), report.language);
    let path = dir.join(&name);
    match dataset {
        Dataset::CrowsPairs(examples) => {
            let scores = first_error(score_pairs(backend, examples, scoring.pll_mode))?;
            report.crows = crows_metrics_all(&scores);
            write_jsonl(&path, &scores)?;
        }
        Dataset::Bbq(examples) => {
            let predictions = first_error(score_mc_examples(backend, examples, scoring))?;
            report.bbq = bbq_metrics_all(examples, &predictions)?;
            write_jsonl(&path, &predictions)?;
        }
        Dataset::Belebele(examples) => {
            let predictions = first_error(score_mc_examples(backend, examples, scoring))?;
            report.belebele = Some(BelebeleResult {
                accuracy: belebele_accuracy(examples, &predictions)?,
                n: examples.len(),
            });
            write_jsonl(&path, &predictions)?;
        }
    }
    Ok(path)
}

/// Scores every configured split and writes the manifest, prediction files
/// and `metrics.json` under the run directory. Outputs contain no
/// timestamps, so equal manifests give byte-identical files.
pub fn evaluate(config: &RunConfig) -> Result<EvaluateOutput, CliError> {
    let backend_config = config.backend()?;
    if config.datasets.is_empty() {
        return Err(CliError::Usage("run file lists no datasets".into()));
    }
    let loaded: Vec<(Dataset, DatasetManifest)> = config.datasets.iter().map(load_entry).collect::<Result<_, _>>()?;

    let cache = match &config.score_cache {
        Some(path) => {
            let (cache, warnings) = ScoreCache::open(path).map_err(|e| CliError::io(path, e))?;
            for w in warnings {
                tracing::warn!("{w}");
            }
            cache
        }
        None => ScoreCache::in_memory(),
    };
    let backend = CachedBackend::new(connect(backend_config)?, cache);

    let run_dir = config.run_dir();
    let mut reports: BTreeMap<String, MetricReport> = BTreeMap::new();
    let mut prediction_files = Vec::new();
    for (dataset, manifest) in &loaded {
        let language = manifest.language.to_string();
        tracing::info!(kind = dataset.kind().as_str(), %language, n = dataset.len(), "scoring");
        let report = reports.entry(language.clone()).or_insert_with(|| MetricReport {
            run_id: config.run_id.clone(),
            model_id: backend_config.model_id.clone(),
            model_size: config.model_size.clone(),
            language,
            crows: Vec::new(),
            bbq: Vec::new(),
            belebele: None,
        });
        prediction_files.push(score_split(&backend, &config.scoring, dataset, report, &run_dir)?);
    }

    let manifest = RunManifest {
        run_id: config.run_id.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config),
        backend_identity: backend.identity(),
        backend: backend_config.clone(),
        scoring: config.scoring.clone(),
        metric_variants: metric_variants(),
        datasets: loaded.into_iter().map(|(_, m)| m).collect(),
    };
    let manifest_path = run_dir.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;
    let mut predictions = BTreeMap::new();
    for p in &prediction_files {
        let name = p.file_name().expect("file name").to_string_lossy().into_owned();
        predictions.insert(name, sha256_file(p)?);
    }
    let metrics = MetricsFile {
        run_id: config.run_id.clone(),
        manifest: MANIFEST_FILE.to_string(),
        manifest_sha256: sha256_file(&manifest_path)?,
        predictions,
        reports: reports.into_values().collect(),
    };
    let metrics_path = run_dir.join(METRICS_FILE);
    write_json(&metrics_path, &metrics)?;
    Ok(EvaluateOutput {
        run_dir,
        manifest: manifest_path,
        metrics: metrics_path,
        predictions: prediction_files,
    })
}
