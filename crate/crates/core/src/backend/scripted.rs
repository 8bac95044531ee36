use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{check_request, BackendError, ContinuationScore, LogprobBackend};

/// Backend with hand-assigned log-probabilities, for tests and fixtures.
///
/// Continuations are split on whitespace; each whitespace token gets the
/// next value from the script registered for the trimmed continuation text,
/// or `default_logprob` when no script matches. Requests whose prefix or
/// continuation contains a failure marker return a transport error.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    name: String,
    scripts: HashMap<String, Vec<f64>>,
    default_logprob: f64,
    failure_markers: Vec<String>,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(name: &str) -> Self {
        ScriptedBackend {
            name: name.to_string(),
            default_logprob: -1.0,
            ..Default::default()
        }
    }

    pub fn with_script(mut self, continuation: &str, logprobs: &[f64]) -> Self {
        self.scripts.insert(continuation.trim().to_string(), logprobs.to_vec());
        self
    }

    pub fn with_default(mut self, logprob: f64) -> Self {
        self.default_logprob = logprob;
        self
    }

    pub fn failing_on(mut self, marker: &str) -> Self {
        self.failure_markers.push(marker.to_string());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl LogprobBackend for ScriptedBackend {
    fn identity(&self) -> String {
        format!("scripted:{}", self.name)
    }

    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        check_request(continuation)?;
        if let Some(marker) = self
            .failure_markers
            .iter()
            .find(|m| prefix.contains(m.as_str()) || continuation.contains(m.as_str()))
        {
            return Err(BackendError::Transport {
                attempts: 1,
                message: format!("scripted failure on `{marker}`"),
            });
        }
        let mut spans = Vec::new();
        let mut offset = 0;
        for word in continuation.split_whitespace() {
            let start = offset + continuation[offset..].find(word).expect("word present");
            spans.push((start, start + word.len()));
            offset = start + word.len();
        }
        let tokens: Vec<String> = spans.iter().map(|&(a, b)| continuation[a..b].to_string()).collect();
        let logprobs = match self.scripts.get(continuation.trim()) {
            Some(script) if script.len() == tokens.len() => script.clone(),
            Some(script) => {
                return Err(BackendError::Alignment(format!(
                    "script has {} values for {} tokens",
                    script.len(),
                    tokens.len()
                )))
            }
            None => vec![self.default_logprob; tokens.len()],
        };
        Ok(ContinuationScore::new(prefix, continuation, tokens, spans, logprobs))
    }
}
