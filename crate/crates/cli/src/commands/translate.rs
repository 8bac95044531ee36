//! Machine translation of the source-language splits and review samples.

use std::path::{Path, PathBuf};
use std::time::Duration;

use polybias::corpus::{Dataset, DatasetKind, DatasetManifest, Language};
use polybias::scoring::write_jsonl;
use polybias::translate::{
    build_review_sample, translate_dataset, write_review_sample, HttpProvider, MockProvider, RecordIssue,
    TranslatedRecord, TranslationCache, TranslationJob, TranslationProvider,
};
use serde::{Deserialize, Serialize};

use super::evaluate::{load_entry, write_json};
use crate::config::{ProviderEntry, ProviderKind, RunConfig, TranslateSection};
use crate::error::CliError;

/// One translated split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatedSplit {
    pub provider_id: String,
    pub dataset_kind: DatasetKind,
    pub language: Language,
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub records: PathBuf,
    pub failures: Vec<RecordIssue>,
    pub flags: Vec<RecordIssue>,
    pub provider_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateSummary {
    pub splits: Vec<TranslatedSplit>,
    pub review_samples: Vec<PathBuf>,
}

pub fn build_provider(entry: &ProviderEntry) -> Result<Box<dyn TranslationProvider>, CliError> {
    Ok(match entry.kind {
        ProviderKind::Mock => Box::new(MockProvider::new(&entry.id)),
        ProviderKind::Http => {
            let endpoint = entry
                .endpoint
                .as_deref()
                .ok_or_else(|| CliError::Usage(format!("provider `{}` needs an endpoint", entry.id)))?;
            Box::new(
                HttpProvider::new(
                    &entry.id,
                    endpoint,
                    entry.api_key.clone(),
                    Duration::from_secs_f64(entry.timeout_secs.max(0.001)),
                )
                .map_err(|e| CliError::Usage(e.to_string()))?,
            )
        }
    })
}

/// File-system friendly form of a provider id.
pub fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn job(section: &TranslateSection, kind: DatasetKind, target: &Language, provider_id: &str) -> TranslationJob {
    let mut job = TranslationJob::new(kind, section.source_language.clone(), target.clone(), provider_id);
    job.field_policy = section.field_policy.clone();
    job.cache_uri = section.cache.clone();
    job.batch_size = section.batch_size;
    job.max_in_flight = section.max_in_flight;
    job.max_retries = section.max_retries;
    job.retry_backoff_ms = section.retry_backoff_ms;
    job
}

fn review_sample(
    source: &Dataset,
    src: &Language,
    lang: &Language,
    runs: &[Vec<TranslatedRecord>],
    n: usize,
    seed: u64,
    path: &Path,
) -> Result<(), CliError> {
    let runs: Vec<&[TranslatedRecord]> = runs.iter().map(Vec::as_slice).collect();
    let n = n.min(source.len());
    let sample = match source {
        Dataset::CrowsPairs(x) => build_review_sample(x, src, lang, &runs, n, seed)?,
        Dataset::Bbq(x) => build_review_sample(x, src, lang, &runs, n, seed)?,
        Dataset::Belebele(x) => build_review_sample(x, src, lang, &runs, n, seed)?,
    };
    Ok(write_review_sample(path, &sample)?)
}

/// Translates every source-language split to each target language with
/// each provider. Writes the translated split, its manifest and per-record
/// provenance under `<run>/translate/<provider>/`, and one review sample per
/// split and target language under `<run>/review/`.
pub fn translate(config: &RunConfig) -> Result<TranslateSummary, CliError> {
    let section = config
        .translate
        .as_ref()
        .ok_or_else(|| CliError::Usage("run file has no [translate] section".into()))?;
    let sources: Vec<_> = config
        .datasets
        .iter()
        .filter(|d| d.language == section.source_language)
        .collect();
    if sources.is_empty() {
        return Err(CliError::Usage(format!(
            "no dataset in source language `{}`",
            section.source_language
        )));
    }
    let providers: Vec<Box<dyn TranslationProvider>> =
        section.providers.iter().map(build_provider).collect::<Result<_, _>>()?;
    let cache = match &section.cache {
        Some(path) => {
            let (cache, warnings) = TranslationCache::open(path)?;
            for w in warnings {
                tracing::warn!("{w}");
            }
            cache
        }
        None => TranslationCache::in_memory(),
    };
    let run_dir = config.run_dir();
    let mut summary = TranslateSummary {
        splits: Vec::new(),
        review_samples: Vec::new(),
    };
    for entry in sources {
        let (source, _) = load_entry(entry)?;
        let kind = entry.kind;
        for target in &section.target_languages {
            let mut runs = Vec::new();
            for provider in &providers {
                let provider_id = provider.provider_id();
                let dir = run_dir.join("translate").join(slug(&provider_id));
                let stem = format!("{}_{}", kind.as_str(), target);
                let mut job = job(section, kind, target, &provider_id);
                job.checkpoint = Some(dir.join(format!("{stem}.checkpoint.json")));
                tracing::info!(provider = %provider_id, kind = kind.as_str(), %target, "translating");
                let (translated, outcome) = translate_dataset(&job, provider.as_ref(), &cache, &source)?;
                let dataset_path = dir.join(format!("{stem}.{}", kind.file_extension()));
                translated.write(&dataset_path)?;
                let manifest_path = dir.join(format!("{stem}.manifest.json"));
                DatasetManifest::build(kind, target, &dataset_path, &Default::default())?.write(&manifest_path)?;
                let records_path = dir.join(format!("{stem}.records.jsonl"));
                write_jsonl(&records_path, &outcome.records)?;
                for f in &outcome.failures {
                    tracing::warn!(id = %f.id, "dropped: {}", f.message);
                }
                summary.splits.push(TranslatedSplit {
                    provider_id,
                    dataset_kind: kind,
                    language: target.clone(),
                    dataset: dataset_path,
                    manifest: manifest_path,
                    records: records_path,
                    failures: outcome.failures,
                    flags: outcome.flags,
                    provider_calls: outcome.provider_calls,
                });
                runs.push(outcome.records);
            }
            if let Some(n) = section.review_sample_size {
                let path = run_dir.join("review").join(format!("{}_{}.json", kind.as_str(), target));
                review_sample(&source, &section.source_language, target, &runs, n, section.review_seed, &path)?;
                summary.review_samples.push(path);
            }
        }
    }
    write_json(&run_dir.join("translate").join("summary.json"), &summary)?;
    Ok(summary)
}
