//! Token log-probabilities from a language model.
//!
//! Every backend answers one question: given a `prefix` and a
//! `continuation`, what are the natural-log probabilities of the tokens that
//! cover the continuation? The backend tokenizes `prefix + continuation`
//! jointly and reports the tokens whose character span intersects the
//! continuation; prefix-only tokens are never scored.

mod cache;
mod reference;
mod remote;
mod scripted;

use std::ops::Range;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CachedBackend, ScoreCache, ScoreCacheKey};
pub use reference::{reference_tokenize, ReferenceBackend, REFERENCE_LOGPROB_RANGE};
pub use remote::{align_tokens, LogprobRequest, LogprobResponse, RemoteBackend};
pub use scripted::ScriptedBackend;

use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend rejected request with status {status}: {message}")]
    Rejected { status: u16, message: String },
    #[error("token alignment failed: {0}")]
    Alignment(String),
    #[error("operation not supported by this backend: {0}")]
    Unsupported(&'static str),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cache(#[from] StoreError),
}

impl BackendError {
    pub fn is_transport(&self) -> bool {
        matches!(self, BackendError::Transport { .. } | BackendError::Rejected { .. })
    }
}

/// Log-probabilities for the tokens covering one continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationScore {
    pub prefix: String,
    pub continuation: String,
    pub tokens: Vec<String>,
    /// Byte ranges into `continuation`. A token that straddles the
    /// prefix/continuation boundary starts at 0.
    pub token_spans: Vec<(usize, usize)>,
    /// Natural-log probabilities, one per token.
    pub token_logprobs: Vec<f64>,
    pub total: f64,
}

impl ContinuationScore {
    pub fn new(
        prefix: &str,
        continuation: &str,
        tokens: Vec<String>,
        token_spans: Vec<(usize, usize)>,
        token_logprobs: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(tokens.len(), token_logprobs.len());
        debug_assert_eq!(tokens.len(), token_spans.len());
        let total = token_logprobs.iter().sum();
        ContinuationScore {
            prefix: prefix.to_string(),
            continuation: continuation.to_string(),
            tokens,
            token_spans,
            token_logprobs,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub prefix: String,
    pub continuation: String,
}

impl ScoreRequest {
    pub fn new(prefix: impl Into<String>, continuation: impl Into<String>) -> Self {
        ScoreRequest {
            prefix: prefix.into(),
            continuation: continuation.into(),
        }
    }
}

pub trait LogprobBackend: Send + Sync {
    /// Identity used to key cached scores; two different models must never
    /// share an identity.
    fn identity(&self) -> String;

    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError>;

    /// Positionally aligned with `requests`; failures are reported per item.
    fn score_batch(&self, requests: &[ScoreRequest]) -> Vec<Result<ContinuationScore, BackendError>> {
        requests
            .iter()
            .map(|r| self.score_continuation(&r.prefix, &r.continuation))
            .collect()
    }

    /// Log-probability of each target span of `text` given every other token
    /// of `text` (masked-LM style). Most causal backends cannot do this.
    fn masked_logprobs(&self, _text: &str, _targets: &[Range<usize>]) -> Result<Vec<f64>, BackendError> {
        Err(BackendError::Unsupported("masked conditional log-probabilities"))
    }
}

impl<T: LogprobBackend + ?Sized> LogprobBackend for Box<T> {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError> {
        (**self).score_continuation(prefix, continuation)
    }
    fn score_batch(&self, requests: &[ScoreRequest]) -> Vec<Result<ContinuationScore, BackendError>> {
        (**self).score_batch(requests)
    }
    fn masked_logprobs(&self, text: &str, targets: &[Range<usize>]) -> Result<Vec<f64>, BackendError> {
        (**self).masked_logprobs(text, targets)
    }
}

impl<T: LogprobBackend + ?Sized> LogprobBackend for std::sync::Arc<T> {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError> {
        (**self).score_continuation(prefix, continuation)
    }
    fn score_batch(&self, requests: &[ScoreRequest]) -> Vec<Result<ContinuationScore, BackendError>> {
        (**self).score_batch(requests)
    }
    fn masked_logprobs(&self, text: &str, targets: &[Range<usize>]) -> Result<Vec<f64>, BackendError> {
        (**self).masked_logprobs(text, targets)
    }
}

pub(crate) fn check_request(continuation: &str) -> Result<(), BackendError> {
    if continuation.is_empty() {
        Err(BackendError::InvalidRequest("continuation must be non-empty".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub backend_kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_id: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Upper bound on concurrent in-flight remote requests.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Bearer token for the remote endpoint; never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_timeout_secs() -> f64 {
    60.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_in_flight() -> usize {
    4
}

impl BackendConfig {
    pub fn reference(model_id: impl Into<String>, seed: u64) -> Self {
        BackendConfig {
            backend_kind: BackendKind::Reference,
            endpoint: None,
            model_id: model_id.into(),
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            seed: Some(seed),
            max_in_flight: default_max_in_flight(),
            api_key: None,
        }
    }

    pub fn remote(model_id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        BackendConfig {
            backend_kind: BackendKind::Remote,
            endpoint: Some(endpoint.into()),
            seed: None,
            ..BackendConfig::reference(model_id, 0)
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        match self.backend_kind {
            BackendKind::Remote if self.endpoint.as_deref().is_none_or(str::is_empty) => {
                Err(BackendError::Config("remote backend requires an endpoint".into()))
            }
            BackendKind::Reference if self.seed.is_none() => {
                Err(BackendError::Config("reference backend requires a seed".into()))
            }
            _ if self.model_id.is_empty() => Err(BackendError::Config("model_id must be non-empty".into())),
            _ if self.max_in_flight == 0 => Err(BackendError::Config("max_in_flight must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Builds the backend a configuration describes.
pub fn connect(config: &BackendConfig) -> Result<Box<dyn LogprobBackend>, BackendError> {
    config.validate()?;
    Ok(match config.backend_kind {
        BackendKind::Reference => Box::new(ReferenceBackend::new(&config.model_id, config.seed.unwrap_or_default())),
        BackendKind::Remote => Box::new(RemoteBackend::new(config)?),
    })
}

/// `score_continuation` driven by a configuration, for one-off calls.
pub fn score_continuation(
    config: &BackendConfig,
    prefix: &str,
    continuation: &str,
) -> Result<ContinuationScore, BackendError> {
    connect(config)?.score_continuation(prefix, continuation)
}

pub fn score_batch(
    config: &BackendConfig,
    requests: &[ScoreRequest],
) -> Result<Vec<Result<ContinuationScore, BackendError>>, BackendError> {
    Ok(connect(config)?.score_batch(requests))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BackendConfig::reference("m", 7).validate().is_ok());
        let mut c = BackendConfig::reference("m", 7);
        c.seed = None;
        assert!(matches!(c.validate(), Err(BackendError::Config(_))));
        let mut r = BackendConfig::remote("m", "http://localhost:1");
        assert!(r.validate().is_ok());
        r.endpoint = None;
        assert!(r.validate().is_err());
    }

    #[test]
    fn config_driven_scoring() {
        let c = BackendConfig::reference("m", 7);
        let a = score_continuation(&c, "", "a").unwrap();
        assert_eq!(a.tokens, ["a"]);
        assert_eq!(a.total, a.token_logprobs[0]);
        let batch = score_batch(&c, &[]).unwrap();
        assert!(batch.is_empty());
    }
}
