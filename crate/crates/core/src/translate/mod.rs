//! Batch machine translation of benchmark splits through a pluggable
//! provider, with a persistent cache, a per-field policy and resumable
//! checkpoints.

mod fields;
mod provider;
mod review;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fields::Translatable;
pub use provider::{HttpProvider, MockProvider, ProviderError, ProviderRequest, ProviderResponse, TranslationProvider};
pub use review::{
    build_review_sample, read_review_sample, review_field, sample_for_review, sample_indices, write_review_sample,
    ReviewItem, ReviewSampleFile,
};

use crate::corpus::{write_atomic, CorpusError, Dataset, DatasetKind, Language};
use crate::digest::sha256_hex;
use crate::store::{AppendLog, StoreError};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("field policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(
        "translation halted after {done} of {total} texts: {source}; rerun the same job to resume{}",
        checkpoint.as_ref().map(|p| format!(" (checkpoint {})", p.display())).unwrap_or_default()
    )]
    Halted {
        done: usize,
        total: usize,
        checkpoint: Option<PathBuf>,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Cache(#[from] StoreError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("review sample: {0}")]
    Sample(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldAction {
    Translate,
    Copy,
}

fn default_batch_size() -> usize {
    50
}

fn default_max_in_flight() -> usize {
    4
}

fn default_max_retries() -> u32 {
    3
}

/// What to translate and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationJob {
    pub dataset_kind: DatasetKind,
    pub source_language: Language,
    pub target_language: Language,
    pub provider_id: String,
    /// Overrides per field; text fields not listed are translated.
    #[serde(default)]
    pub field_policy: BTreeMap<String, FieldAction>,
    #[serde(default)]
    pub cache_uri: Option<PathBuf>,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Base delay between retries of one batch, doubled per attempt.
    #[serde(default)]
    pub retry_backoff_ms: u64,
}

impl TranslationJob {
    pub fn new(kind: DatasetKind, source: Language, target: Language, provider_id: &str) -> Self {
        TranslationJob {
            dataset_kind: kind,
            source_language: source,
            target_language: target,
            provider_id: provider_id.to_string(),
            field_policy: BTreeMap::new(),
            cache_uri: None,
            checkpoint: None,
            batch_size: default_batch_size(),
            max_in_flight: default_max_in_flight(),
            max_retries: default_max_retries(),
            retry_backoff_ms: 0,
        }
    }

    /// Digest of everything that determines the output.
    pub fn fingerprint(&self) -> String {
        let key = serde_json::json!([
            self.dataset_kind,
            self.source_language,
            self.target_language,
            self.provider_id,
            self.field_policy
        ]);
        sha256_hex(key.to_string().as_bytes())
    }

    /// Resolved action for every text field of `T`. Label fields may only be
    /// copied; unknown field names are rejected.
    pub fn resolve_policy<T: Translatable>(&self) -> Result<Vec<(&'static str, FieldAction)>, TranslateError> {
        if T::KIND != self.dataset_kind {
            return Err(TranslateError::Policy(format!(
                "job is for {} but records are {}",
                self.dataset_kind,
                T::KIND
            )));
        }
        if self.batch_size == 0 || self.max_in_flight == 0 {
            return Err(TranslateError::Policy("batch_size and max_in_flight must be at least 1".into()));
        }
        for (field, action) in &self.field_policy {
            if T::LABEL_FIELDS.contains(&field.as_str()) {
                if *action == FieldAction::Translate {
                    return Err(TranslateError::Policy(format!("label field `{field}` is always copied")));
                }
            } else if !T::TEXT_FIELDS.contains(&field.as_str()) {
                return Err(TranslateError::Policy(format!("unknown field `{field}` for {}", T::KIND)));
            }
        }
        Ok(T::TEXT_FIELDS
            .iter()
            .map(|&f| (f, self.field_policy.get(f).copied().unwrap_or(FieldAction::Translate)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranslationKey {
    pub provider_id: String,
    pub source_language: Language,
    pub target_language: Language,
    /// SHA-256 of the source text.
    pub text_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedTranslation {
    pub source_text: String,
    pub target_text: String,
    /// RFC 3339 time the provider returned this translation.
    pub timestamp: String,
}

/// Persistent map from (provider, languages, source text) to translation.
pub struct TranslationCache {
    log: AppendLog<TranslationKey, CachedTranslation>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        TranslationCache {
            log: AppendLog::in_memory(),
        }
    }

    /// Opens the cache file; a corrupted file is set aside and reported.
    pub fn open(path: &Path) -> Result<(Self, Vec<String>), TranslateError> {
        let (log, warnings) = AppendLog::open(path)?;
        Ok((TranslationCache { log }, warnings))
    }

    fn key(job: &TranslationJob, text: &str) -> TranslationKey {
        TranslationKey {
            provider_id: job.provider_id.clone(),
            source_language: job.source_language.clone(),
            target_language: job.target_language.clone(),
            text_sha256: sha256_hex(text.as_bytes()),
        }
    }

    pub fn get(&self, job: &TranslationJob, text: &str) -> Option<CachedTranslation> {
        self.log.get(&Self::key(job, text)).filter(|c| c.source_text == text)
    }

    fn put(&self, job: &TranslationJob, text: &str, translation: &str, timestamp: &str) -> Result<(), StoreError> {
        self.log.put(
            Self::key(job, text),
            CachedTranslation {
                source_text: text.to_string(),
                target_text: translation.to_string(),
                timestamp: timestamp.to_string(),
            },
        )
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatedRecord {
    pub id: String,
    pub source_texts: BTreeMap<String, String>,
    pub target_texts: BTreeMap<String, String>,
    pub provider_id: String,
    /// Latest cache time among the translated fields; `None` when every
    /// field was copied.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordIssue {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointStatus {
    Halted,
    Complete,
}

/// Progress of a job, rewritten atomically after each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationCheckpoint {
    pub job_fingerprint: String,
    pub status: CheckpointStatus,
    pub texts_total: usize,
    pub texts_done: usize,
    pub error: Option<String>,
}

impl TranslationCheckpoint {
    pub fn read(path: &Path) -> Result<Self, TranslateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TranslateError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| TranslateError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    fn write(&self, path: &Path) -> Result<(), TranslateError> {
        let text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        Ok(write_atomic(path, (text + "\n").as_bytes())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationOutcome<T> {
    /// Successfully translated records in input order, target language set.
    pub translated: Vec<T>,
    pub records: Vec<TranslatedRecord>,
    /// Records dropped because the provider returned an empty translation.
    pub failures: Vec<RecordIssue>,
    /// Records kept but worth a human look.
    pub flags: Vec<RecordIssue>,
    /// Provider calls made, including retries.
    pub provider_calls: usize,
}

/// Translates `records` according to `job`.
///
/// The cache is consulted first; only missing texts reach the provider, in
/// batches of `job.batch_size` with at most `job.max_in_flight` batches in
/// flight. A batch that still fails after `job.max_retries` retries halts the
/// job: translations already obtained stay cached, the checkpoint records the
/// progress, and rerunning the job resumes from there.
pub fn translate_records<T: Translatable>(
    job: &TranslationJob,
    provider: &dyn TranslationProvider,
    cache: &TranslationCache,
    records: &[T],
) -> Result<TranslationOutcome<T>, TranslateError> {
    let policy = job.resolve_policy::<T>()?;
    let translate_fields: Vec<&str> = policy
        .iter()
        .filter(|(_, a)| *a == FieldAction::Translate)
        .map(|(f, _)| *f)
        .collect();

    let mut seen = HashSet::new();
    let mut unique: Vec<&str> = Vec::new();
    for r in records {
        for f in &translate_fields {
            let text = r.text(f);
            if !text.trim().is_empty() && seen.insert(text) {
                unique.push(text);
            }
        }
    }
    let missing: Vec<String> = unique
        .iter()
        .filter(|t| cache.get(job, t).is_none())
        .map(|t| t.to_string())
        .collect();
    let total = unique.len();
    tracing::info!(total, missing = missing.len(), "translation texts");

    let calls = AtomicUsize::new(0);
    let empty: Mutex<HashSet<String>> = Mutex::new(HashSet::new());
    let failure: Mutex<Option<ProviderError>> = Mutex::new(None);
    let cache_error: Mutex<Option<StoreError>> = Mutex::new(None);
    let halted = AtomicBool::new(false);
    let batches: Vec<&[String]> = missing.chunks(job.batch_size).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..job.max_in_flight.min(batches.len()) {
            scope.spawn(|| loop {
                if halted.load(Ordering::SeqCst) {
                    break;
                }
                let Some(batch) = batches.get(next.fetch_add(1, Ordering::SeqCst)) else { break };
                match call_with_retries(job, provider, batch, &calls) {
                    Ok(out) => {
                        let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
                        for (src, tgt) in batch.iter().zip(&out) {
                            if tgt.trim().is_empty() {
                                empty.lock().expect("lock").insert(src.clone());
                            } else if let Err(e) = cache.put(job, src, tgt, &stamp) {
                                cache_error.lock().expect("lock").get_or_insert(e);
                                halted.store(true, Ordering::SeqCst);
                            }
                        }
                    }
                    Err(e) => {
                        failure.lock().expect("lock").get_or_insert(e);
                        halted.store(true, Ordering::SeqCst);
                    }
                }
            });
        }
    });
    let provider_calls = calls.into_inner();
    if let Some(e) = cache_error.into_inner().expect("lock") {
        return Err(e.into());
    }

    let empty = empty.into_inner().expect("lock");
    let done = unique
        .iter()
        .filter(|t| empty.contains(**t) || cache.get(job, t).is_some())
        .count();
    let checkpoint = |status, error: Option<String>| -> Result<(), TranslateError> {
        if let Some(path) = &job.checkpoint {
            TranslationCheckpoint {
                job_fingerprint: job.fingerprint(),
                status,
                texts_total: total,
                texts_done: done,
                error,
            }
            .write(path)?;
        }
        Ok(())
    };
    if let Some(source) = failure.into_inner().expect("lock") {
        checkpoint(CheckpointStatus::Halted, Some(source.to_string()))?;
        return Err(TranslateError::Halted {
            done,
            total,
            checkpoint: job.checkpoint.clone(),
            source,
        });
    }

    let mut outcome = TranslationOutcome {
        translated: Vec::with_capacity(records.len()),
        records: Vec::with_capacity(records.len()),
        failures: Vec::new(),
        flags: Vec::new(),
        provider_calls,
    };
    'records: for r in records {
        let mut target = r.clone();
        let mut timestamp: Option<String> = None;
        for f in &translate_fields {
            let text = r.text(f);
            if text.trim().is_empty() {
                continue;
            }
            let Some(hit) = cache.get(job, text) else {
                outcome.failures.push(RecordIssue {
                    id: r.record_id().to_string(),
                    message: format!("empty translation for field `{f}`"),
                });
                continue 'records;
            };
            target.set_text(f, hit.target_text);
            if timestamp.as_ref().is_none_or(|t| *t < hit.timestamp) {
                timestamp = Some(hit.timestamp);
            }
        }
        target.set_language(job.target_language.clone());
        debug_assert_eq!(r.labels(), target.labels());
        outcome.flags.extend(r.check_translation(&target).into_iter().map(|message| RecordIssue {
            id: r.record_id().to_string(),
            message,
        }));
        outcome.records.push(TranslatedRecord {
            id: r.record_id().to_string(),
            source_texts: r.texts(),
            target_texts: target.texts(),
            provider_id: job.provider_id.clone(),
            timestamp,
        });
        outcome.translated.push(target);
    }
    checkpoint(CheckpointStatus::Complete, None)?;
    Ok(outcome)
}

fn call_with_retries(
    job: &TranslationJob,
    provider: &dyn TranslationProvider,
    batch: &[String],
    calls: &AtomicUsize,
) -> Result<Vec<String>, ProviderError> {
    let mut attempt = 0;
    loop {
        calls.fetch_add(1, Ordering::SeqCst);
        let result = provider
            .translate_batch(&job.source_language, &job.target_language, batch)
            .and_then(|out| {
                if out.len() == batch.len() {
                    Ok(out)
                } else {
                    Err(ProviderError::Malformed(format!("{} translations for {} texts", out.len(), batch.len())))
                }
            });
        match result {
            Err(e) if e.is_retryable() && attempt < job.max_retries => {
                tracing::debug!(attempt, error = %e, "translation batch failed; retrying");
                std::thread::sleep(Duration::from_millis(job.retry_backoff_ms) * 2u32.saturating_pow(attempt));
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// [`translate_records`] over a loaded split of any kind.
pub fn translate_dataset(
    job: &TranslationJob,
    provider: &dyn TranslationProvider,
    cache: &TranslationCache,
    dataset: &Dataset,
) -> Result<(Dataset, TranslationOutcome<()>), TranslateError> {
    fn strip<T>(o: TranslationOutcome<T>) -> (Vec<T>, TranslationOutcome<()>) {
        let TranslationOutcome {
            translated,
            records,
            failures,
            flags,
            provider_calls,
        } = o;
        (
            translated,
            TranslationOutcome {
                translated: Vec::new(),
                records,
                failures,
                flags,
                provider_calls,
            },
        )
    }
    Ok(match dataset {
        Dataset::CrowsPairs(x) => {
            let (t, o) = strip(translate_records(job, provider, cache, x)?);
            (Dataset::CrowsPairs(t), o)
        }
        Dataset::Bbq(x) => {
            let (t, o) = strip(translate_records(job, provider, cache, x)?);
            (Dataset::Bbq(t), o)
        }
        Dataset::Belebele(x) => {
            let (t, o) = strip(translate_records(job, provider, cache, x)?);
            (Dataset::Belebele(t), o)
        }
    })
}

/// Checks that every label field of `target` equals the source record with
/// the same position and id.
pub fn verify_copied_fields<T: Translatable>(source: &[T], target: &[T]) -> Result<(), String> {
    let by_id: BTreeMap<&str, &T> = source.iter().map(|r| (r.record_id(), r)).collect();
    for t in target {
        let s = by_id
            .get(t.record_id())
            .ok_or_else(|| format!("record `{}` has no source", t.record_id()))?;
        if s.labels() != t.labels() {
            return Err(format!("record `{}`: label fields differ", t.record_id()));
        }
    }
    Ok(())
}
