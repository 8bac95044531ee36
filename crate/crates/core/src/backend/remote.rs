use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_request, BackendConfig, BackendError, ContinuationScore, LogprobBackend, ScoreRequest};

/// Body POSTed to a logprob endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobRequest {
    pub model_id: String,
    pub prefix: String,
    pub continuation: String,
}

/// Reply from a logprob endpoint: the continuation's tokens as surface text
/// and one natural-log probability per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobResponse {
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

/// Client for the HTTP logprob protocol.
pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model_id: String,
    api_key: Option<String>,
    max_retries: u32,
    max_in_flight: usize,
    backoff: Duration,
}

impl RemoteBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteBackend {
            client,
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model_id: config.model_id.clone(),
            api_key: config.api_key.clone(),
            max_retries: config.max_retries,
            max_in_flight: config.max_in_flight,
            backoff: Duration::from_millis(50),
        })
    }

    /// Overrides the base retry delay (doubled per attempt).
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn post(&self, body: &LogprobRequest) -> Result<LogprobResponse, BackendError> {
        let mut last = String::new();
        let attempts = self.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            let mut request = self.client.post(&self.endpoint).json(body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .json::<LogprobResponse>()
                        .map_err(|e| BackendError::Alignment(format!("malformed response body: {e}")));
                }
                Ok(resp) if resp.status().is_server_error() || resp.status().as_u16() == 429 => {
                    last = format!("HTTP {}", resp.status());
                }
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let message = resp.text().unwrap_or_default();
                    return Err(BackendError::Rejected { status, message });
                }
                Err(e) => last = e.to_string(),
            }
            tracing::debug!(attempt, error = %last, "logprob request failed");
        }
        Err(BackendError::Transport { attempts, message: last })
    }
}

impl LogprobBackend for RemoteBackend {
    fn identity(&self) -> String {
        format!("remote:{}@{}", self.model_id, self.endpoint)
    }

    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError> {
        check_request(continuation)?;
        let response = self.post(&LogprobRequest {
            model_id: self.model_id.clone(),
            prefix: prefix.to_string(),
            continuation: continuation.to_string(),
        })?;
        if response.tokens.len() != response.logprobs.len() {
            return Err(BackendError::Alignment(format!(
                "{} tokens but {} logprobs",
                response.tokens.len(),
                response.logprobs.len()
            )));
        }
        let spans = align_tokens(prefix, continuation, &response.tokens)?;
        if let Some(bad) = response.logprobs.iter().find(|lp| lp.is_nan() || **lp > 0.0) {
            tracing::warn!(model = %self.model_id, logprob = bad, "backend returned a non-negative or NaN logprob");
        }
        Ok(ContinuationScore::new(
            prefix,
            continuation,
            response.tokens,
            spans,
            response.logprobs,
        ))
    }

    fn score_batch(&self, requests: &[ScoreRequest]) -> Vec<Result<ContinuationScore, BackendError>> {
        let slots: Vec<Mutex<Option<Result<ContinuationScore, BackendError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_in_flight.min(requests.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(req) = requests.get(i) else { break };
                    let result = self.score_continuation(&req.prefix, &req.continuation);
                    *slots[i].lock().expect("slot lock") = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().expect("slot lock").expect("every slot filled"))
            .collect()
    }
}

fn surface(token: &str) -> String {
    token.replace(['\u{2581}', '\u{120}'], " ").trim_start().to_string()
}

/// Locates the reported tokens inside `continuation` and returns their byte
/// spans.
///
/// Tokens are matched in order after skipping whitespace; SentencePiece
/// (`▁`) and byte-level BPE (`Ġ`) space markers are treated as spaces. The
/// first token may start inside the prefix when the tokenizer merged across
/// the boundary. After the last token only whitespace may remain.
pub fn align_tokens(prefix: &str, continuation: &str, tokens: &[String]) -> Result<Vec<(usize, usize)>, BackendError> {
    let skip_ws = |from: usize| {
        continuation[from..]
            .char_indices()
            .find(|(_, c)| !c.is_whitespace())
            .map_or(continuation.len(), |(i, _)| from + i)
    };
    let mut spans = Vec::with_capacity(tokens.len());
    let mut cursor = 0;
    for (i, token) in tokens.iter().enumerate() {
        let text = surface(token);
        cursor = skip_ws(cursor);
        if text.is_empty() {
            spans.push((cursor, cursor));
            continue;
        }
        if continuation[cursor..].starts_with(&text) {
            spans.push((cursor, cursor + text.len()));
            cursor += text.len();
            continue;
        }
        let straddle = (i == 0 && cursor == 0)
            .then(|| {
                text.char_indices().skip(1).map(|(k, _)| k).find(|&k| {
                    prefix.ends_with(&text[..k]) && continuation.starts_with(&text[k..])
                })
            })
            .flatten();
        match straddle {
            Some(k) => {
                let end = text.len() - k;
                spans.push((0, end));
                cursor = end;
            }
            None => {
                return Err(BackendError::Alignment(format!(
                    "token {i} `{token}` does not match continuation at byte {cursor}"
                )))
            }
        }
    }
    if skip_ws(cursor) != continuation.len() {
        return Err(BackendError::Alignment(format!(
            "tokens cover only {cursor} of {} continuation bytes",
            continuation.len()
        )));
    }
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(t: &[&str]) -> Vec<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn aligns_plain_and_marked_tokens() {
        assert_eq!(
            align_tokens("Q?", " old friend", &toks(&["old", " friend"])).unwrap(),
            [(1, 4), (5, 11)]
        );
        assert_eq!(
            align_tokens("Q?", " old friend", &toks(&["\u{2581}old", "\u{2581}fri", "end"])).unwrap(),
            [(1, 4), (5, 8), (8, 11)]
        );
    }

    #[test]
    fn aligns_boundary_straddle() {
        assert_eq!(align_tokens("foot", "ball", &toks(&["football"])).unwrap(), [(0, 4)]);
    }

    #[test]
    fn misaligned_tokens_rejected() {
        assert!(matches!(
            align_tokens("", "old friend", &toks(&["old", "fiend"])),
            Err(BackendError::Alignment(_))
        ));
        assert!(matches!(
            align_tokens("", "old friend", &toks(&["old"])),
            Err(BackendError::Alignment(_))
        ));
    }

    mod http {
        use std::sync::atomic::{AtomicUsize, Ordering};
        use std::sync::Arc;
        use std::time::Duration;

        use axum::http::{HeaderMap, StatusCode};
        use axum::routing::post;
        use axum::{Json, Router};

        use super::super::*;
        use crate::backend::BackendConfig;
        use crate::testutil::serve;

        fn backend(url: &str, retries: u32) -> RemoteBackend {
            let mut config = BackendConfig::remote("stub-model", format!("{url}/logprobs"));
            config.max_retries = retries;
            config.api_key = Some("secret".into());
            RemoteBackend::new(&config).unwrap().with_backoff(Duration::from_millis(1))
        }

        #[test]
        fn fixed_logprobs_sum() {
            let seen = Arc::new(std::sync::Mutex::new(Vec::new()));
            let log = seen.clone();
            let url = serve(Router::new().route(
                "/logprobs",
                post(move |headers: HeaderMap, Json(req): Json<LogprobRequest>| {
                    let log = log.clone();
                    async move {
                        log.lock().unwrap().push((
                            headers.get("authorization").map(|v| v.to_str().unwrap().to_string()),
                            req.clone(),
                        ));
                        Json(LogprobResponse {
                            tokens: vec!["\u{120}sat".into(), "\u{120}down".into()],
                            logprobs: vec![-1.0, -2.0],
                        })
                    }
                }),
            ));
            let s = backend(&url, 0).score_continuation("The cat", " sat down").unwrap();
            assert_eq!(s.total, -3.0);
            assert_eq!(s.token_spans, [(1, 4), (5, 9)]);
            let seen = seen.lock().unwrap();
            assert_eq!(seen[0].0.as_deref(), Some("Bearer secret"));
            assert_eq!(seen[0].1.model_id, "stub-model");
            assert_eq!(seen[0].1.prefix, "The cat");
        }

        #[test]
        fn retries_server_errors_then_succeeds() {
            let hits = Arc::new(AtomicUsize::new(0));
            let counter = hits.clone();
            let url = serve(Router::new().route(
                "/logprobs",
                post(move || {
                    let counter = counter.clone();
                    async move {
                        if counter.fetch_add(1, Ordering::SeqCst) < 2 {
                            Err(StatusCode::SERVICE_UNAVAILABLE)
                        } else {
                            Ok(Json(LogprobResponse {
                                tokens: vec!["x".into()],
                                logprobs: vec![-0.5],
                            }))
                        }
                    }
                }),
            ));
            assert_eq!(backend(&url, 3).score_continuation("", "x").unwrap().total, -0.5);
            assert_eq!(hits.load(Ordering::SeqCst), 3);
        }

        #[test]
        fn exhausted_retries_are_transport_errors() {
            let url = serve(Router::new().route("/logprobs", post(|| async { StatusCode::TOO_MANY_REQUESTS })));
            let err = backend(&url, 2).score_continuation("", "x").unwrap_err();
            assert!(err.is_transport());
            assert!(matches!(err, BackendError::Transport { attempts: 3, .. }));
        }

        #[test]
        fn client_errors_are_not_retried() {
            let hits = Arc::new(AtomicUsize::new(0));
            let counter = hits.clone();
            let url = serve(Router::new().route(
                "/logprobs",
                post(move || {
                    counter.fetch_add(1, Ordering::SeqCst);
                    async { (StatusCode::BAD_REQUEST, "unknown model") }
                }),
            ));
            let err = backend(&url, 3).score_continuation("", "x").unwrap_err();
            assert!(matches!(err, BackendError::Rejected { status: 400, ref message } if message == "unknown model"));
            assert_eq!(hits.load(Ordering::SeqCst), 1);
        }

        #[test]
        fn unreachable_endpoint_is_transport_error() {
            let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            let url = format!("http://{}", listener.local_addr().unwrap());
            drop(listener);
            assert!(backend(&url, 1).score_continuation("", "x").unwrap_err().is_transport());
        }

        #[test]
        fn mismatched_lengths_and_batches() {
            let url = serve(Router::new().route(
                "/logprobs",
                post(|Json(req): Json<LogprobRequest>| async move {
                    let tokens: Vec<String> = req.continuation.split_whitespace().map(String::from).collect();
                    let logprobs = if req.continuation.contains("bad") {
                        vec![-1.0]
                    } else {
                        tokens.iter().map(|t| -(t.len() as f64)).collect()
                    };
                    Json(LogprobResponse { tokens, logprobs })
                }),
            ));
            let b = backend(&url, 0);
            let out = b.score_batch(&[
                ScoreRequest::new("", "a bb"),
                ScoreRequest::new("", "bad one"),
                ScoreRequest::new("", "ccc"),
            ]);
            assert_eq!(out[0].as_ref().unwrap().total, -3.0);
            assert!(matches!(out[1], Err(BackendError::Alignment(_))));
            assert_eq!(out[2].as_ref().unwrap().total, -3.0);
        }
    }
}
