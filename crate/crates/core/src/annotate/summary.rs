use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::service::{AnnotationService, SampleOrder};
use super::{AnnotateError, AnnotationRecord, BiasJudgment, Quality};
use crate::metrics::{cohens_kappa_on_scale, exact_weighted_mean, AgreementResult, Weighting};

/// Bias-judgment histogram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasCounts<T = u64> {
    pub same: T,
    pub more: T,
    pub less: T,
    pub none: T,
    pub not_reasonable: T,
}

impl<T: Copy> BiasCounts<T> {
    pub fn get(&self, b: BiasJudgment) -> T {
        match b {
            BiasJudgment::Same => self.same,
            BiasJudgment::More => self.more,
            BiasJudgment::Less => self.less,
            BiasJudgment::None => self.none,
            BiasJudgment::NotReasonable => self.not_reasonable,
        }
    }

    fn slot(&mut self, b: BiasJudgment) -> &mut T {
        match b {
            BiasJudgment::Same => &mut self.same,
            BiasJudgment::More => &mut self.more,
            BiasJudgment::Less => &mut self.less,
            BiasJudgment::None => &mut self.none,
            BiasJudgment::NotReasonable => &mut self.not_reasonable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorSummary {
    pub annotator_id: String,
    /// Counts for quality levels 0, 1, 2.
    pub quality: [u64; 3],
    pub bias: BiasCounts,
    pub n: u64,
}

/// Per-annotator histograms for one language and provider, with the mean
/// over annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub language: String,
    pub provider_id: String,
    pub annotators: Vec<AnnotatorSummary>,
    pub average_quality: [f64; 3],
    pub average_bias: BiasCounts<f64>,
}

/// Histograms of `records` restricted to one language and provider.
/// Annotators listed in `include` appear even without records.
pub fn summarize_records(
    records: &[AnnotationRecord],
    language: &str,
    provider_id: &str,
    include: &[&str],
) -> Summary {
    let mut per: BTreeMap<&str, AnnotatorSummary> = BTreeMap::new();
    let blank = |id: &str| AnnotatorSummary {
        annotator_id: id.to_string(),
        quality: [0; 3],
        bias: BiasCounts::default(),
        n: 0,
    };
    for id in include {
        per.entry(id).or_insert_with(|| blank(id));
    }
    for r in records.iter().filter(|r| r.language == language && r.provider_id == provider_id) {
        let s = per.entry(&r.annotator_id).or_insert_with(|| blank(&r.annotator_id));
        s.quality[usize::from(r.quality.level())] += 1;
        *s.bias.slot(r.bias_judgment) += 1;
        s.n += 1;
    }
    let annotators: Vec<AnnotatorSummary> = per.into_values().collect();
    let mean = |f: &dyn Fn(&AnnotatorSummary) -> u64| {
        exact_weighted_mean(annotators.iter().map(|a| (f(a) as f64, 1))).unwrap_or(0.0)
    };
    let mut average_bias = BiasCounts::<f64>::default();
    for b in BiasJudgment::ALL {
        *average_bias.slot(b) = mean(&|a| a.bias.get(b));
    }
    Summary {
        language: language.to_string(),
        provider_id: provider_id.to_string(),
        average_quality: [0, 1, 2].map(|q| mean(&|a| a.quality[q])),
        average_bias,
        annotators,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementStatus {
    Ok,
    InsufficientAnnotators,
    NoSharedItems,
}

/// Kappa of one annotator pair over the samples both rated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub annotator_a: String,
    pub annotator_b: String,
    pub result: AgreementResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub language: String,
    pub provider_id: String,
    pub status: AgreementStatus,
    /// Set when exactly one annotator pair shares items.
    pub result: Option<AgreementResult>,
    pub pairs: Vec<PairAgreement>,
}

/// Quality-rating agreement for every annotator pair on their shared
/// samples.
pub fn agreement_from_records(
    records: &[AnnotationRecord],
    language: &str,
    provider_id: &str,
    weighting: Weighting,
) -> AgreementReport {
    let mut by_annotator: BTreeMap<&str, BTreeMap<(SampleOrder, &str), Quality>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.language == language && r.provider_id == provider_id) {
        by_annotator
            .entry(&r.annotator_id)
            .or_default()
            .insert((SampleOrder::of(&r.sample_id), &r.sample_id), r.quality);
    }
    let mut report = AgreementReport {
        language: language.to_string(),
        provider_id: provider_id.to_string(),
        status: AgreementStatus::InsufficientAnnotators,
        result: None,
        pairs: Vec::new(),
    };
    if by_annotator.len() < 2 {
        return report;
    }
    let ids: Vec<&str> = by_annotator.keys().copied().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let (ra, rb) = (&by_annotator[a], &by_annotator[b]);
            let shared: BTreeSet<_> = ra.keys().filter(|k| rb.contains_key(*k)).collect();
            if shared.is_empty() {
                continue;
            }
            let xa: Vec<Quality> = shared.iter().map(|k| ra[*k]).collect();
            let xb: Vec<Quality> = shared.iter().map(|k| rb[*k]).collect();
            let result = cohens_kappa_on_scale(&xa, &xb, &Quality::ALL, weighting)
                .expect("equal non-empty vectors on the full scale");
            report.pairs.push(PairAgreement {
                annotator_a: a.to_string(),
                annotator_b: b.to_string(),
                result,
            });
        }
    }
    report.status = if report.pairs.is_empty() {
        AgreementStatus::NoSharedItems
    } else {
        AgreementStatus::Ok
    };
    if report.pairs.len() == 1 {
        report.result = Some(report.pairs[0].result.clone());
    }
    report
}

impl AnnotationService {
    /// Histograms for one language and provider. Configured annotators
    /// assigned to the language are listed even with no records.
    pub fn summarize(&self, language: &str, provider_id: &str) -> Result<Summary, AnnotateError> {
        let records = self.records_for(language, provider_id)?;
        Ok(summarize_records(&records, language, provider_id, &self.annotators_for(language)))
    }

    pub fn agreement_report(
        &self,
        language: &str,
        provider_id: &str,
        weighting: Weighting,
    ) -> Result<AgreementReport, AnnotateError> {
        let records = self.records_for(language, provider_id)?;
        Ok(agreement_from_records(&records, language, provider_id, weighting))
    }
}
