use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Language;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    /// Network failure or a retryable status (5xx, 429).
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider rejected the request (HTTP {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

/// A machine-translation service. One call translates a batch of texts and
/// returns exactly one translation per input, in order.
pub trait TranslationProvider: Send + Sync {
    fn provider_id(&self) -> String;
    fn translate_batch(&self, source: &Language, target: &Language, texts: &[String]) -> Result<Vec<String>, ProviderError>;
}

impl<P: TranslationProvider + ?Sized> TranslationProvider for Box<P> {
    fn provider_id(&self) -> String {
        (**self).provider_id()
    }
    fn translate_batch(&self, source: &Language, target: &Language, texts: &[String]) -> Result<Vec<String>, ProviderError> {
        (**self).translate_batch(source, target, texts)
    }
}

/// Offline provider that tags each text as `[<target>] <text>`.
///
/// The transform is reversible with [`MockProvider::untag`]. Failures can be
/// injected to exercise retries and checkpoints.
#[derive(Debug, Default)]
pub struct MockProvider {
    name: String,
    batches: AtomicUsize,
    texts: AtomicUsize,
    fail_from_batch: Option<usize>,
    transient_failures: AtomicUsize,
    empty_marker: Option<String>,
}

impl MockProvider {
    pub fn new(name: &str) -> Self {
        MockProvider {
            name: name.to_string(),
            ..Default::default()
        }
    }

    /// Every call after the first `n` successful ones fails with a transport error.
    pub fn failing_after(mut self, n: usize) -> Self {
        self.fail_from_batch = Some(n);
        self
    }

    /// The next `n` calls fail with a transport error, then calls succeed.
    pub fn with_transient_failures(self, n: usize) -> Self {
        self.transient_failures.store(n, Ordering::SeqCst);
        self
    }

    /// Texts containing `marker` translate to an empty string.
    pub fn with_empty_output_for(mut self, marker: &str) -> Self {
        self.empty_marker = Some(marker.to_string());
        self
    }

    /// Number of `translate_batch` calls, including failed ones.
    pub fn calls(&self) -> usize {
        self.batches.load(Ordering::SeqCst)
    }

    /// Number of texts successfully translated.
    pub fn texts_translated(&self) -> usize {
        self.texts.load(Ordering::SeqCst)
    }

    pub fn tag(target: &Language, text: &str) -> String {
        format!("[{target}] {text}")
    }

    /// Splits a tagged text into `(language, original)`.
    pub fn untag(text: &str) -> Option<(&str, &str)> {
        let rest = text.strip_prefix('[')?;
        let (lang, original) = rest.split_once("] ")?;
        Some((lang, original))
    }
}

impl TranslationProvider for MockProvider {
    fn provider_id(&self) -> String {
        format!("mock:{}", self.name)
    }

    fn translate_batch(&self, _source: &Language, target: &Language, texts: &[String]) -> Result<Vec<String>, ProviderError> {
        let call = self.batches.fetch_add(1, Ordering::SeqCst);
        if self
            .transient_failures
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok()
        {
            return Err(ProviderError::Transport("injected transient failure".into()));
        }
        if self.fail_from_batch.is_some_and(|n| call >= n) {
            return Err(ProviderError::Transport("injected outage".into()));
        }
        self.texts.fetch_add(texts.len(), Ordering::SeqCst);
        Ok(texts
            .iter()
            .map(|t| match &self.empty_marker {
                Some(m) if t.contains(m.as_str()) => String::new(),
                _ => Self::tag(target, t),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub source_lang: String,
    pub target_lang: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub translations: Vec<String>,
}

/// Client for the HTTP translation protocol. Retries are left to the caller.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    provider_id: String,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpProvider {
    pub fn new(provider_id: &str, endpoint: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpProvider {
            client,
            provider_id: provider_id.to_string(),
            endpoint: endpoint.to_string(),
            api_key,
        })
    }
}

impl TranslationProvider for HttpProvider {
    fn provider_id(&self) -> String {
        self.provider_id.clone()
    }

    fn translate_batch(&self, source: &Language, target: &Language, texts: &[String]) -> Result<Vec<String>, ProviderError> {
        let body = ProviderRequest {
            source_lang: source.to_string(),
            target_lang: target.to_string(),
            texts: texts.to_vec(),
        };
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let resp = request.send().map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(ProviderError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(ProviderError::Rejected {
                status: status.as_u16(),
                message: resp.text().unwrap_or_default(),
            });
        }
        let parsed: ProviderResponse = resp.json().map_err(|e| ProviderError::Malformed(e.to_string()))?;
        if parsed.translations.len() != texts.len() {
            return Err(ProviderError::Malformed(format!(
                "{} translations for {} texts",
                parsed.translations.len(),
                texts.len()
            )));
        }
        Ok(parsed.translations)
    }
}
