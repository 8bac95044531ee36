//! The run file: one TOML document describing datasets, backend, scoring,
//! translation, annotation and report settings.
//!
//! Relative paths resolve against the directory of the run file. Secrets
//! come from the environment:
//!
//! | variable | overrides |
//! |---|---|
//! | `POLYBIAS_BACKEND_ENDPOINT` | `backend.endpoint` |
//! | `POLYBIAS_BACKEND_API_KEY` | bearer token of the remote backend |
//! | `POLYBIAS_OUTPUT_DIR` | `output_dir` |
//! | `<api_key_env>` of a provider | that provider's API key |
//! | `POLYBIAS_PROVIDER_<ID>_ENDPOINT` | `endpoint` of provider `<ID>` |
//! | `<token_env>` of an annotator, else `POLYBIAS_ANNOTATOR_<ID>_TOKEN` | that annotator's token |
//!
//! `<ID>` is the id upper-cased with every non-alphanumeric character
//! replaced by `_`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use polybias::backend::BackendConfig;
use polybias::corpus::{DatasetKind, Language};
use polybias::scoring::ScoringOptions;
use polybias::translate::FieldAction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    /// Outputs go to `<output_dir>/<run_id>/`.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Parameter count label shown in the Belebele table.
    #[serde(default)]
    pub model_size: Option<String>,
    #[serde(default)]
    pub backend: Option<BackendConfig>,
    #[serde(default)]
    pub scoring: ScoringOptions,
    /// Persistent score cache; scores are kept in memory when unset.
    #[serde(default)]
    pub score_cache: Option<PathBuf>,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub translate: Option<TranslateSection>,
    #[serde(default)]
    pub annotate: Option<AnnotateSection>,
    #[serde(default)]
    pub report: ReportSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub kind: DatasetKind,
    pub language: Language,
    pub path: PathBuf,
    /// Exclusion-set file applied at load time.
    #[serde(default)]
    pub exclusions: Option<PathBuf>,
    /// Refuse to run unless the exclusion file exists.
    #[serde(default)]
    pub require_exclusions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Offline provider that tags text with the target language.
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderEntry {
    pub kind: ProviderKind,
    pub id: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_provider_timeout")]
    pub timeout_secs: f64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_provider_timeout() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateSection {
    pub source_language: Language,
    pub target_languages: Vec<Language>,
    pub providers: Vec<ProviderEntry>,
    /// Persistent translation cache shared by all jobs.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub field_policy: BTreeMap<String, FieldAction>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub retry_backoff_ms: u64,
    /// Items per language in the human review sample; no sample when unset.
    #[serde(default)]
    pub review_sample_size: Option<usize>,
    #[serde(default)]
    pub review_seed: u64,
}

fn default_batch_size() -> usize {
    50
}
fn default_in_flight() -> usize {
    4
}
fn default_retries() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorEntry {
    pub id: String,
    #[serde(default)]
    pub languages: Vec<String>,
    /// Environment variable holding the bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(skip)]
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateSection {
    pub database: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Directory of the web console, served at `/`.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    /// Review sample files imported at start-up.
    #[serde(default)]
    pub samples: Vec<PathBuf>,
    pub annotators: Vec<AnnotatorEntry>,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Metric files to render; defaults to this run's `metrics.json`.
    #[serde(default)]
    pub metrics: Vec<PathBuf>,
    /// Defaults to `<output_dir>/<run_id>/report`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Environment-variable suffix for an id.
pub fn env_key(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("run file: {e}")))?;
        config.check()?;
        Ok(config)
    }

    /// Reads `path`, applies environment overrides and resolves relative
    /// paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read run file {}: {e}", path.display())))?;
        let mut config = RunConfig::parse(&text)?;
        config.apply_env(|k| std::env::var(k).ok());
        config.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.run_id.is_empty() || !self.run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return usage(format!("run_id `{}` must be non-empty and use only [A-Za-z0-9._-]", self.run_id));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.datasets {
            if !seen.insert((d.kind, d.language.clone())) {
                return usage(format!("dataset {} {} listed twice", d.kind.as_str(), d.language));
            }
        }
        if let Some(t) = &self.translate {
            if t.providers.is_empty() {
                return usage("translate.providers is empty".into());
            }
            if t.batch_size == 0 || t.max_in_flight == 0 {
                return usage("translate.batch_size and translate.max_in_flight must be at least 1".into());
            }
        }
        Ok(())
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(dir) = lookup("POLYBIAS_OUTPUT_DIR") {
            self.output_dir = dir.into();
        }
        if let Some(b) = &mut self.backend {
            if let Some(endpoint) = lookup("POLYBIAS_BACKEND_ENDPOINT") {
                b.endpoint = Some(endpoint);
            }
            b.api_key = lookup("POLYBIAS_BACKEND_API_KEY");
        }
        if let Some(t) = &mut self.translate {
            for p in &mut t.providers {
                if let Some(endpoint) = lookup(&format!("POLYBIAS_PROVIDER_{}_ENDPOINT", env_key(&p.id))) {
                    p.endpoint = Some(endpoint);
                }
                p.api_key = p.api_key_env.as_deref().and_then(&lookup);
            }
        }
        if let Some(a) = &mut self.annotate {
            for person in &mut a.annotators {
                let var = person
                    .token_env
                    .clone()
                    .unwrap_or_else(|| format!("POLYBIAS_ANNOTATOR_{}_TOKEN", env_key(&person.id)));
                person.token = lookup(&var);
            }
        }
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = &mut self.score_cache {
            fix(p);
        }
        for d in &mut self.datasets {
            fix(&mut d.path);
            if let Some(p) = &mut d.exclusions {
                fix(p);
            }
        }
        if let Some(t) = &mut self.translate {
            if let Some(p) = &mut t.cache {
                fix(p);
            }
        }
        if let Some(a) = &mut self.annotate {
            fix(&mut a.database);
            if let Some(p) = &mut a.static_dir {
                fix(p);
            }
            a.samples.iter_mut().for_each(fix);
        }
        self.report.metrics.iter_mut().for_each(fix);
        if let Some(p) = &mut self.report.output_dir {
            fix(p);
        }
    }

    /// `<output_dir>/<run_id>`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.run_id)
    }

    pub fn backend(&self) -> Result<&BackendConfig, CliError> {
        self.backend
            .as_ref()
            .ok_or_else(|| CliError::Usage("run file has no [backend] section".into()))
    }
}
