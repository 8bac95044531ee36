use std::ops::Range;

use super::{check_request, BackendError, ContinuationScore, LogprobBackend};
use crate::digest::stable_hash64;

/// Closed range every reference log-probability falls into.
pub const REFERENCE_LOGPROB_RANGE: (f64, f64) = (-8.0, -0.05);

/// Deterministic stand-in for a language model.
///
/// The log-probability of a token is a hash of `(seed, left context, token)`
/// mapped into [`REFERENCE_LOGPROB_RANGE`]. Results are identical across
/// runs and platforms.
#[derive(Debug, Clone)]
pub struct ReferenceBackend {
    model_id: String,
    seed: u64,
}

impl ReferenceBackend {
    pub fn new(model_id: &str, seed: u64) -> Self {
        ReferenceBackend {
            model_id: model_id.to_string(),
            seed,
        }
    }

    fn logprob(&self, parts: &[&[u8]]) -> f64 {
        let mut all: Vec<&[u8]> = Vec::with_capacity(parts.len() + 1);
        let seed = self.seed.to_le_bytes();
        all.push(&seed);
        all.extend_from_slice(parts);
        let h = stable_hash64(&all);
        let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
        let (lo, hi) = REFERENCE_LOGPROB_RANGE;
        hi - unit * (hi - lo)
    }
}

/// Tokenizer of the reference backend: runs of alphanumeric characters
/// (plus `_`) form one token, every other non-whitespace character is its own
/// token, whitespace is dropped. Returns byte ranges.
pub fn reference_tokenize(text: &str) -> Vec<Range<usize>> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        let is_word = c.is_alphanumeric() || c == '_';
        if is_word {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = word_start.take() {
            tokens.push(start..i);
        }
        if !c.is_whitespace() {
            tokens.push(i..i + c.len_utf8());
        }
    }
    if let Some(start) = word_start {
        tokens.push(start..text.len());
    }
    tokens
}

impl LogprobBackend for ReferenceBackend {
    fn identity(&self) -> String {
        format!("reference:{}:seed={}", self.model_id, self.seed)
    }

    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError> {
        check_request(continuation)?;
        let joined = format!("{prefix}{continuation}");
        let boundary = prefix.len();
        let mut tokens = Vec::new();
        let mut spans = Vec::new();
        let mut logprobs = Vec::new();
        for range in reference_tokenize(&joined).into_iter().filter(|r| r.end > boundary) {
            let token = &joined[range.clone()];
            let context = &joined[..range.start];
            logprobs.push(self.logprob(&[b"causal", context.as_bytes(), token.as_bytes()]));
            tokens.push(token.to_string());
            spans.push((range.start.saturating_sub(boundary), range.end - boundary));
        }
        Ok(ContinuationScore::new(prefix, continuation, tokens, spans, logprobs))
    }

    fn masked_logprobs(&self, text: &str, targets: &[Range<usize>]) -> Result<Vec<f64>, BackendError> {
        targets
            .iter()
            .map(|t| {
                let token = text
                    .get(t.clone())
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| BackendError::InvalidRequest(format!("bad target span {t:?}")))?;
                let masked = format!("{}\u{0}MASK\u{0}{}", &text[..t.start], &text[t.end..]);
                Ok(self.logprob(&[b"masked", masked.as_bytes(), token.as_bytes()]))
            })
            .collect()
    }
}
