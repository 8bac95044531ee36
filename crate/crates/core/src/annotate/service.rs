use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use super::{
    AnnotateError, AnnotationRecord, AnnotationSubmission, BiasJudgment, Quality, ReviewTask, SubmitAck, TaskStatus,
};
use crate::corpus::IdSet;
use crate::translate::ReviewSampleFile;

/// Pre-provisioned reviewer with a bearer token.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotator {
    pub id: String,
    pub token: String,
    /// Languages this annotator may review; empty means any.
    #[serde(default)]
    pub languages: Vec<String>,
}

impl std::fmt::Debug for Annotator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Annotator")
            .field("id", &self.id)
            .field("languages", &self.languages)
            .finish_non_exhaustive()
    }
}

/// Source of record timestamps.
pub type Clock = Arc<dyn Fn() -> String + Send + Sync>;

fn system_clock() -> Clock {
    Arc::new(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
}

const MIGRATIONS: &[&str] = &[
    // 1: initial schema
    "CREATE TABLE tasks (
        language TEXT NOT NULL,
        sample_id TEXT NOT NULL,
        source_text TEXT NOT NULL,
        PRIMARY KEY (language, sample_id)
    );
    CREATE TABLE candidates (
        language TEXT NOT NULL,
        sample_id TEXT NOT NULL,
        provider_id TEXT NOT NULL,
        text TEXT NOT NULL,
        PRIMARY KEY (language, sample_id, provider_id),
        FOREIGN KEY (language, sample_id) REFERENCES tasks (language, sample_id)
    );
    CREATE TABLE annotations (
        language TEXT NOT NULL,
        sample_id TEXT NOT NULL,
        annotator_id TEXT NOT NULL,
        provider_id TEXT NOT NULL,
        quality INTEGER NOT NULL CHECK (quality BETWEEN 0 AND 2),
        bias_judgment TEXT NOT NULL,
        comment TEXT NOT NULL,
        timestamp TEXT NOT NULL,
        PRIMARY KEY (language, sample_id, annotator_id, provider_id)
    );
    CREATE TABLE audit (
        seq INTEGER PRIMARY KEY AUTOINCREMENT,
        action TEXT NOT NULL,
        record TEXT NOT NULL
    );",
];

/// The annotation store and its operations. Writes are serialized through
/// one connection.
pub struct AnnotationService {
    conn: Mutex<Connection>,
    annotators: BTreeMap<String, Annotator>,
    clock: Clock,
}

impl AnnotationService {
    /// Opens or creates the database at `path` and applies pending migrations.
    pub fn open(path: &Path, annotators: Vec<Annotator>) -> Result<Self, AnnotateError> {
        Self::with_connection(Connection::open(path)?, annotators)
    }

    pub fn in_memory(annotators: Vec<Annotator>) -> Result<Self, AnnotateError> {
        Self::with_connection(Connection::open_in_memory()?, annotators)
    }

    fn with_connection(mut conn: Connection, annotators: Vec<Annotator>) -> Result<Self, AnnotateError> {
        conn.pragma_update(None, "foreign_keys", true)?;
        let version: i64 = conn.pragma_query_value(None, "user_version", |r| r.get(0))?;
        let supported = MIGRATIONS.len() as i64;
        if version > supported {
            return Err(AnnotateError::SchemaTooNew {
                found: version,
                supported,
            });
        }
        for (i, sql) in MIGRATIONS.iter().enumerate().skip(version as usize) {
            let tx = conn.transaction()?;
            tx.execute_batch(sql)?;
            tx.pragma_update(None, "user_version", i as i64 + 1)?;
            tx.commit()?;
        }
        Ok(AnnotationService {
            conn: Mutex::new(conn),
            annotators: annotators.into_iter().map(|a| (a.id.clone(), a)).collect(),
            clock: system_clock(),
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().expect("annotation store lock")
    }

    /// Resolves a bearer token to an annotator id.
    pub fn authenticate(&self, token: &str) -> Option<&str> {
        self.annotators
            .values()
            .find(|a| !a.token.is_empty() && a.token == token)
            .map(|a| a.id.as_str())
    }

    fn check_annotator(&self, annotator_id: &str, language: &str) -> Result<(), AnnotateError> {
        let a = self
            .annotators
            .get(annotator_id)
            .ok_or_else(|| AnnotateError::UnknownAnnotator(annotator_id.to_string()))?;
        if !a.languages.is_empty() && !a.languages.iter().any(|l| l == language) {
            return Err(AnnotateError::LanguageNotAssigned {
                annotator: annotator_id.to_string(),
                language: language.to_string(),
            });
        }
        Ok(())
    }

    /// Adds the items of a review sample as tasks. Existing tasks keep their
    /// annotations; their texts are updated. Returns the number of items.
    pub fn import_sample(&self, sample: &ReviewSampleFile) -> Result<usize, AnnotateError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let language = sample.language.as_str();
        for item in &sample.items {
            tx.execute(
                "INSERT INTO tasks (language, sample_id, source_text) VALUES (?1, ?2, ?3)
                 ON CONFLICT (language, sample_id) DO UPDATE SET source_text = excluded.source_text",
                params![language, item.sample_id, item.source_text],
            )?;
            for (provider, text) in &item.candidates {
                tx.execute(
                    "INSERT INTO candidates (language, sample_id, provider_id, text) VALUES (?1, ?2, ?3, ?4)
                     ON CONFLICT (language, sample_id, provider_id) DO UPDATE SET text = excluded.text",
                    params![language, item.sample_id, provider, text],
                )?;
            }
        }
        tx.commit()?;
        Ok(sample.items.len())
    }

    /// All tasks of a language with their status for `annotator_id`, in
    /// sample order (numeric ids numerically, then the rest lexically).
    pub fn tasks(&self, annotator_id: &str, language: &str) -> Result<Vec<ReviewTask>, AnnotateError> {
        self.check_annotator(annotator_id, language)?;
        let conn = self.conn();
        let mut stmt = conn.prepare(
            "SELECT t.sample_id, t.source_text, c.provider_id, c.text,
                    EXISTS (SELECT 1 FROM annotations a
                            WHERE a.language = c.language AND a.sample_id = c.sample_id
                              AND a.provider_id = c.provider_id AND a.annotator_id = ?2)
             FROM tasks t JOIN candidates c ON c.language = t.language AND c.sample_id = t.sample_id
             WHERE t.language = ?1",
        )?;
        let mut tasks: BTreeMap<(SampleOrder, String), (ReviewTask, bool)> = BTreeMap::new();
        let rows = stmt.query_map(params![language, annotator_id], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, bool>(4)?,
            ))
        })?;
        for row in rows {
            let (sample_id, source_text, provider, text, annotated) = row?;
            let entry = tasks
                .entry((SampleOrder::of(&sample_id), sample_id.clone()))
                .or_insert_with(|| {
                    (
                        ReviewTask {
                            sample_id,
                            source_text,
                            candidate_translations: BTreeMap::new(),
                            language: language.to_string(),
                            status: TaskStatus::Done,
                        },
                        true,
                    )
                });
            entry.0.candidate_translations.insert(provider, text);
            entry.1 &= annotated;
        }
        Ok(tasks
            .into_values()
            .map(|(mut t, done)| {
                t.status = if done { TaskStatus::Done } else { TaskStatus::Pending };
                t
            })
            .collect())
    }

    /// First task of `language` this annotator has not yet rated for every
    /// candidate provider.
    pub fn serve_next_task(&self, annotator_id: &str, language: &str) -> Result<Option<ReviewTask>, AnnotateError> {
        Ok(self
            .tasks(annotator_id, language)?
            .into_iter()
            .find(|t| t.status == TaskStatus::Pending))
    }

    /// Stores a record. A resubmission for the same sample, annotator and
    /// provider replaces the earlier one; both versions stay in the audit log.
    pub fn submit(&self, annotator_id: &str, submission: &AnnotationSubmission) -> Result<SubmitAck, AnnotateError> {
        self.check_annotator(annotator_id, &submission.language)?;
        if submission.sample_id.trim().is_empty() {
            return Err(AnnotateError::InvalidField {
                field: "sample_id".into(),
                message: "must not be empty".into(),
            });
        }
        let record = AnnotationRecord {
            sample_id: submission.sample_id.clone(),
            annotator_id: annotator_id.to_string(),
            language: submission.language.clone(),
            provider_id: submission.provider_id.clone(),
            quality: submission.quality,
            bias_judgment: submission.bias_judgment,
            comment: submission.comment.clone(),
            timestamp: (self.clock)(),
        };
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let task_exists: bool = tx
            .query_row(
                "SELECT 1 FROM tasks WHERE language = ?1 AND sample_id = ?2",
                params![record.language, record.sample_id],
                |_| Ok(true),
            )
            .optional()?
            .unwrap_or(false);
        if !task_exists {
            return Err(AnnotateError::UnknownSample {
                sample_id: record.sample_id,
                language: record.language,
            });
        }
        let candidate_exists: bool = tx
            .query_row(
                "SELECT 1 FROM candidates WHERE language = ?1 AND sample_id = ?2 AND provider_id = ?3",
                params![record.language, record.sample_id, record.provider_id],
                |_| Ok(true),
            )
            .optional()?
            .unwrap_or(false);
        if !candidate_exists {
            return Err(AnnotateError::UnknownProvider {
                sample_id: record.sample_id,
                provider_id: record.provider_id,
            });
        }
        let previous: Option<String> = tx
            .query_row(
                "SELECT timestamp FROM annotations
                 WHERE language = ?1 AND sample_id = ?2 AND annotator_id = ?3 AND provider_id = ?4",
                params![record.language, record.sample_id, record.annotator_id, record.provider_id],
                |r| r.get(0),
            )
            .optional()?;
        tx.execute(
            "INSERT INTO annotations
                (language, sample_id, annotator_id, provider_id, quality, bias_judgment, comment, timestamp)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)
             ON CONFLICT (language, sample_id, annotator_id, provider_id) DO UPDATE SET
                quality = excluded.quality, bias_judgment = excluded.bias_judgment,
                comment = excluded.comment, timestamp = excluded.timestamp",
            params![
                record.language,
                record.sample_id,
                record.annotator_id,
                record.provider_id,
                record.quality.level(),
                record.bias_judgment.as_str(),
                record.comment,
                record.timestamp
            ],
        )?;
        let action = if previous.is_some() { "overwrite" } else { "insert" };
        tx.execute(
            "INSERT INTO audit (action, record) VALUES (?1, ?2)",
            params![action, serde_json::to_string(&record).expect("record serializes")],
        )?;
        tx.commit()?;
        let flagged = record.bias_judgment == BiasJudgment::NotReasonable;
        if flagged {
            tracing::info!(sample = %record.sample_id, language = %record.language, "sample flagged for exclusion review");
        }
        Ok(SubmitAck {
            overwritten: previous.is_some(),
            flagged_for_exclusion: flagged,
        })
    }

    /// Every stored record, ordered by language, sample, annotator, provider.
    pub fn export(&self) -> Result<Vec<AnnotationRecord>, AnnotateError> {
        let mut records = self.query_records("1 = 1", params![])?;
        records.sort_by(|a, b| {
            (&a.language, SampleOrder::of(&a.sample_id), &a.sample_id, &a.annotator_id, &a.provider_id).cmp(&(
                &b.language,
                SampleOrder::of(&b.sample_id),
                &b.sample_id,
                &b.annotator_id,
                &b.provider_id,
            ))
        });
        Ok(records)
    }

    pub(crate) fn records_for(&self, language: &str, provider_id: &str) -> Result<Vec<AnnotationRecord>, AnnotateError> {
        self.query_records("language = ?1 AND provider_id = ?2", params![language, provider_id])
    }

    fn query_records(&self, filter: &str, args: &[&dyn rusqlite::ToSql]) -> Result<Vec<AnnotationRecord>, AnnotateError> {
        let conn = self.conn();
        let mut stmt = conn.prepare(&format!(
            "SELECT sample_id, annotator_id, language, provider_id, quality, bias_judgment, comment, timestamp
             FROM annotations WHERE {filter}"
        ))?;
        let rows = stmt.query_map(args, |r| {
            let quality: u8 = r.get(4)?;
            let bias: String = r.get(5)?;
            Ok(AnnotationRecord {
                sample_id: r.get(0)?,
                annotator_id: r.get(1)?,
                language: r.get(2)?,
                provider_id: r.get(3)?,
                quality: Quality::from_level(quality).expect("CHECK constraint keeps quality in range"),
                bias_judgment: BiasJudgment::parse(&bias).unwrap_or(BiasJudgment::None),
                comment: r.get(6)?,
                timestamp: r.get(7)?,
            })
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    /// Audit entries as `(action, record)` in write order.
    pub fn audit_log(&self) -> Result<Vec<(String, AnnotationRecord)>, AnnotateError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT action, record FROM audit ORDER BY seq")?;
        let rows = stmt.query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))?;
        let mut out = Vec::new();
        for row in rows {
            let (action, json) = row?;
            out.push((action, serde_json::from_str(&json).expect("audit rows hold serialized records")));
        }
        Ok(out)
    }

    /// Sample ids any annotator judged `not_reasonable`, across all
    /// languages and providers.
    pub fn derive_exclusions(&self) -> Result<IdSet, AnnotateError> {
        Ok(derive_exclusions(&self.export()?))
    }

    pub fn annotator_ids(&self) -> Vec<&str> {
        self.annotators.keys().map(String::as_str).collect()
    }

    pub(crate) fn annotators_for(&self, language: &str) -> Vec<&str> {
        self.annotators
            .values()
            .filter(|a| a.languages.iter().any(|l| l == language))
            .map(|a| a.id.as_str())
            .collect()
    }
}

/// Ids judged `not_reasonable` in any record.
pub fn derive_exclusions(records: &[AnnotationRecord]) -> IdSet {
    records
        .iter()
        .filter(|r| r.bias_judgment == BiasJudgment::NotReasonable)
        .map(|r| r.sample_id.clone())
        .collect::<BTreeSet<_>>()
}

/// Orders numeric ids numerically ahead of other ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum SampleOrder {
    Numeric(u128),
    Text,
}

impl SampleOrder {
    pub(crate) fn of(id: &str) -> Self {
        id.parse().map_or(SampleOrder::Text, SampleOrder::Numeric)
    }
}
