//! Multilingual stereotype-bias evaluation for causal language models.
//!
//! The crate covers the whole evaluation loop: loading CrowS-Pairs, BBQ and
//! Belebele splits ([`corpus`]), obtaining token log-probabilities from a
//! model ([`backend`]), option and sentence scoring ([`scoring`]), the bias
//! and accuracy metrics ([`metrics`]), benchmark translation ([`translate`]),
//! the human review loop ([`annotate`]) and heatmap/table rendering
//! ([`report`]).

pub mod annotate;
pub mod backend;
pub mod corpus;
mod digest;
pub mod metrics;
pub mod report;
pub mod scoring;
pub mod store;
pub mod translate;
#[cfg(test)]
mod testutil;

pub use corpus::{BiasCategory, DatasetKind, IdSet, Language};
pub use digest::sha256_hex;
