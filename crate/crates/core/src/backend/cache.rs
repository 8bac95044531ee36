use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, ContinuationScore, LogprobBackend, ScoreRequest};
use crate::digest::sha256_hex;
use crate::store::{AppendLog, StoreError};

/// `(model identity, sha256(prefix), sha256(continuation))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreCacheKey {
    pub model: String,
    pub prefix: String,
    pub continuation: String,
}

impl ScoreCacheKey {
    pub fn new(model: &str, prefix: &str, continuation: &str) -> Self {
        ScoreCacheKey {
            model: model.to_string(),
            prefix: sha256_hex(prefix.as_bytes()),
            continuation: sha256_hex(continuation.as_bytes()),
        }
    }
}

/// Persistent continuation-score cache keyed by model identity.
pub struct ScoreCache {
    log: AppendLog<ScoreCacheKey, ContinuationScore>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache {
            log: AppendLog::in_memory(),
        }
    }

    pub fn open(path: &Path) -> Result<(Self, Vec<String>), StoreError> {
        let (log, warnings) = AppendLog::open(path)?;
        Ok((ScoreCache { log }, warnings))
    }

    pub fn get(&self, model: &str, prefix: &str, continuation: &str) -> Option<ContinuationScore> {
        self.log
            .get(&ScoreCacheKey::new(model, prefix, continuation))
            // a digest collision must never surface someone else's score
            .filter(|s| s.prefix == prefix && s.continuation == continuation)
    }

    pub fn put(&self, model: &str, score: &ContinuationScore) -> Result<(), StoreError> {
        self.log.put(
            ScoreCacheKey::new(model, &score.prefix, &score.continuation),
            score.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }
}

/// Serves scores from a [`ScoreCache`] and fills it on misses.
pub struct CachedBackend<B> {
    inner: B,
    cache: ScoreCache,
    identity: String,
}

impl<B: LogprobBackend> CachedBackend<B> {
    pub fn new(inner: B, cache: ScoreCache) -> Self {
        let identity = inner.identity();
        CachedBackend { inner, cache, identity }
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn into_parts(self) -> (B, ScoreCache) {
        (self.inner, self.cache)
    }
}

impl<B: LogprobBackend> LogprobBackend for CachedBackend<B> {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn score_continuation(&self, prefix: &str, continuation: &str) -> Result<ContinuationScore, BackendError> {
        if let Some(hit) = self.cache.get(&self.identity, prefix, continuation) {
            return Ok(hit);
        }
        let score = self.inner.score_continuation(prefix, continuation)?;
        self.cache.put(&self.identity, &score)?;
        Ok(score)
    }

    fn score_batch(&self, requests: &[ScoreRequest]) -> Vec<Result<ContinuationScore, BackendError>> {
        let mut results: Vec<Option<Result<ContinuationScore, BackendError>>> = requests
            .iter()
            .map(|r| self.cache.get(&self.identity, &r.prefix, &r.continuation).map(Ok))
            .collect();
        let misses: Vec<usize> = (0..requests.len()).filter(|&i| results[i].is_none()).collect();
        let miss_requests: Vec<ScoreRequest> = misses.iter().map(|&i| requests[i].clone()).collect();
        for (i, result) in misses.into_iter().zip(self.inner.score_batch(&miss_requests)) {
            let result = result.and_then(|score| {
                self.cache.put(&self.identity, &score)?;
                Ok(score)
            });
            results[i] = Some(result);
        }
        results.into_iter().map(|r| r.expect("filled")).collect()
    }

    fn masked_logprobs(&self, text: &str, targets: &[std::ops::Range<usize>]) -> Result<Vec<f64>, BackendError> {
        self.inner.masked_logprobs(text, targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ReferenceBackend;

    fn score(prefix: &str, cont: &str, lp: f64) -> ContinuationScore {
        ContinuationScore::new(prefix, cont, vec![cont.to_string()], vec![(0, cont.len())], vec![lp])
    }

    #[test]
    fn put_then_get() {
        let cache = ScoreCache::in_memory();
        assert!(cache.get("m", "p", "c").is_none());
        let s = score("p", "c", -1.5);
        cache.put("m", &s).unwrap();
        assert_eq!(cache.get("m", "p", "c"), Some(s));
    }

    #[test]
    fn models_never_share_entries() {
        let cache = ScoreCache::in_memory();
        cache.put("m1", &score("p", "c", -1.0)).unwrap();
        cache.put("m2", &score("p", "c", -2.0)).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.get("m1", "p", "c").unwrap().total, -1.0);
        assert_eq!(cache.get("m2", "p", "c").unwrap().total, -2.0);
    }

    #[test]
    fn warm_and_cold_agree_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.jsonl");
        let requests = vec![
            ScoreRequest::new("The nurse said", " she was tired"),
            ScoreRequest::new("The nurse said", " he was tired"),
        ];
        let plain: Vec<_> = ReferenceBackend::new("r", 5)
            .score_batch(&requests)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        {
            let (cache, _) = ScoreCache::open(&path).unwrap();
            let cached = CachedBackend::new(ReferenceBackend::new("r", 5), cache);
            let cold: Vec<_> = cached.score_batch(&requests).into_iter().map(Result::unwrap).collect();
            assert_eq!(cold, plain);
        }
        let (cache, warnings) = ScoreCache::open(&path).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cache.len(), 2);
        let warm = CachedBackend::new(ReferenceBackend::new("r", 5), cache);
        for (req, expected) in requests.iter().zip(&plain) {
            let got = warm.score_continuation(&req.prefix, &req.continuation).unwrap();
            assert_eq!(got.total.to_bits(), expected.total.to_bits());
            assert_eq!(&got, expected);
        }
    }
}
