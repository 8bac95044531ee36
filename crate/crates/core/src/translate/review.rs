//! Seeded samples of translated records for human review.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TranslateError, TranslatedRecord, Translatable};
use crate::corpus::{write_atomic, DatasetKind, Language};

/// `n` distinct indices out of `len`, sorted, determined by `seed`.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>, TranslateError> {
    if n > len {
        return Err(TranslateError::Sample(format!("cannot sample {n} of {len} records")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, len, n).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Seeded sample without replacement, in source order.
pub fn sample_for_review<T: Clone>(records: &[T], n: usize, seed: u64) -> Result<Vec<T>, TranslateError> {
    Ok(sample_indices(records.len(), n, seed)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

/// The field shown to reviewers for each dataset kind.
pub fn review_field(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::CrowsPairs => "sent_more",
        DatasetKind::Bbq => "context",
        DatasetKind::Belebele => "flores_passage",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub sample_id: String,
    pub source_text: String,
    /// Translation of `source_text` per provider.
    pub candidates: BTreeMap<String, String>,
}

/// Input of the annotation service: one language, several providers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSampleFile {
    pub dataset_kind: DatasetKind,
    pub source_language: Language,
    pub language: Language,
    pub seed: u64,
    pub field: String,
    pub items: Vec<ReviewItem>,
}

/// Samples `n` source records and pairs each with the translation of its
/// review field from every provider run in `translations`.
pub fn build_review_sample<T: Translatable>(
    source: &[T],
    source_language: &Language,
    language: &Language,
    translations: &[&[TranslatedRecord]],
    n: usize,
    seed: u64,
) -> Result<ReviewSampleFile, TranslateError> {
    let field = review_field(T::KIND);
    let lookup: Vec<BTreeMap<&str, &TranslatedRecord>> = translations
        .iter()
        .map(|run| run.iter().map(|r| (r.id.as_str(), r)).collect())
        .collect();
    let mut items = Vec::with_capacity(n);
    for record in sample_for_review(source, n, seed)? {
        let mut candidates = BTreeMap::new();
        for run in &lookup {
            if let Some(t) = run.get(record.record_id()) {
                candidates.insert(t.provider_id.clone(), t.target_texts[field].clone());
            }
        }
        if candidates.is_empty() {
            return Err(TranslateError::Sample(format!(
                "record `{}` has no translation",
                record.record_id()
            )));
        }
        items.push(ReviewItem {
            sample_id: record.record_id().to_string(),
            source_text: record.text(field).to_string(),
            candidates,
        });
    }
    Ok(ReviewSampleFile {
        dataset_kind: T::KIND,
        source_language: source_language.clone(),
        language: language.clone(),
        seed,
        field: field.to_string(),
        items,
    })
}

pub fn write_review_sample(path: &Path, sample: &ReviewSampleFile) -> Result<(), TranslateError> {
    let text = serde_json::to_string_pretty(sample).expect("sample serializes");
    Ok(write_atomic(path, (text + "\n").as_bytes())?)
}

pub fn read_review_sample(path: &Path) -> Result<ReviewSampleFile, TranslateError> {
    let err = |message: String| TranslateError::File {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}
