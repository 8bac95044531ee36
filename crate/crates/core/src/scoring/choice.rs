use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ScoringError, ScoringOptions};
use crate::backend::{LogprobBackend, ScoreRequest};
use crate::corpus::{BbqExample, BelebeleExample};

/// A question with a context and a fixed list of answer options.
pub trait MultipleChoice: Sync {
    fn id(&self) -> &str;
    fn context(&self) -> &str;
    fn question(&self) -> &str;
    fn options(&self) -> &[String];
}

impl MultipleChoice for BbqExample {
    fn id(&self) -> &str {
        &self.id
    }
    fn context(&self) -> &str {
        &self.context
    }
    fn question(&self) -> &str {
        &self.question
    }
    fn options(&self) -> &[String] {
        &self.options
    }
}

impl MultipleChoice for BelebeleExample {
    fn id(&self) -> &str {
        &self.id
    }
    fn context(&self) -> &str {
        &self.passage
    }
    fn question(&self) -> &str {
        &self.question
    }
    fn options(&self) -> &[String] {
        &self.options
    }
}

/// Accumulated log-likelihood of one option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceScore {
    pub example_id: String,
    pub option_index: usize,
    pub loglik: f64,
    pub per_token: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub chosen_index: usize,
    pub scores: Vec<ChoiceScore>,
    pub tie: bool,
}

impl PredictionRecord {
    pub fn logliks(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.loglik).collect()
    }
}

/// Scores every option as a continuation of `context + join + question` and
/// selects the highest accumulated log-likelihood. Options within
/// `tie_tolerance` of the maximum count as tied; the lowest tied index wins.
pub fn score_mc_example<B, E>(backend: &B, example: &E, options: &ScoringOptions) -> Result<PredictionRecord, ScoringError>
where
    B: LogprobBackend + ?Sized,
    E: MultipleChoice + ?Sized,
{
    let id = example.id();
    if example.options().is_empty() {
        return Err(ScoringError::NoOptions(id.to_string()));
    }
    let prefix = format!(
        "{}{}{}",
        example.context(),
        options.joins.context_question,
        example.question()
    );
    let requests: Vec<ScoreRequest> = example
        .options()
        .iter()
        .map(|o| ScoreRequest::new(prefix.clone(), format!("{}{o}", options.joins.before_option)))
        .collect();
    let scores = backend
        .score_batch(&requests)
        .into_iter()
        .enumerate()
        .map(|(option_index, result)| {
            let s = result.map_err(|e| ScoringError::backend(id, e))?;
            Ok(ChoiceScore {
                example_id: id.to_string(),
                option_index,
                loglik: s.total,
                per_token: s.token_logprobs,
            })
        })
        .collect::<Result<Vec<_>, ScoringError>>()?;

    let best = scores.iter().map(|s| s.loglik).fold(f64::NEG_INFINITY, f64::max);
    let near_best: Vec<usize> = scores
        .iter()
        .filter(|s| s.loglik >= best - options.tie_tolerance)
        .map(|s| s.option_index)
        .collect();
    Ok(PredictionRecord {
        example_id: id.to_string(),
        chosen_index: near_best[0],
        tie: near_best.len() > 1,
        scores,
    })
}

/// Scores examples concurrently; results keep input order.
pub fn score_mc_examples<B, E>(
    backend: &B,
    examples: &[E],
    options: &ScoringOptions,
) -> Vec<Result<PredictionRecord, ScoringError>>
where
    B: LogprobBackend + ?Sized,
    E: MultipleChoice,
{
    examples
        .par_iter()
        .map(|e| score_mc_example(backend, e, options))
        .collect()
}
