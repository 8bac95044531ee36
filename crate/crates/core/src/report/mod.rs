//! Heatmaps and tables: CrowS-Pairs scores as
//! percent minus 50, BBQ accuracies and bias scores times 100, and the
//! Belebele accuracy table.

mod render;
mod table;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{write_atomic, BiasCategory};
use crate::metrics::{exact_weighted_mean, BbqCategoryMetrics, MetricReport};

pub use render::{format_value, heatmap_csv, heatmap_markdown, heatmap_svg};
pub use table::{belebele_rows, belebele_table_csv, belebele_table_markdown, language_name, BelebeleRow};

pub const MICROAVERAGE: &str = "microaverage";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("heatmap `{title}`: {message}")]
    Shape { title: String, message: String },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

/// Display transform applied to stored fractions at render time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    /// `v·100 − 50`; an unbiased model scores 0.
    PctMinus50,
    Times100,
}

impl Transform {
    pub fn apply(self, v: f64) -> f64 {
        let out = match self {
            Transform::Identity => v,
            Transform::PctMinus50 => v * 100.0 - 50.0,
            Transform::Times100 => v * 100.0,
        };
        // no negative zero in rendered output
        if out == 0.0 { 0.0 } else { out }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ColorScale {
    /// Blue below zero, red above, white at zero; saturates at `±bound`.
    Diverging { bound: f64 },
    /// White at `min` to dark blue at `max`.
    Sequential { min: f64, max: f64 },
}

/// A model-by-category matrix of stored fractions. `None` marks a
/// category the model was not evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub title: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub transform: Transform,
    pub scale: ColorScale,
}

impl HeatmapSpec {
    pub fn new(
        title: impl Into<String>,
        rows: Vec<String>,
        cols: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
        transform: Transform,
        scale: ColorScale,
    ) -> Result<Self, ReportError> {
        let title = title.into();
        let shape = |message: String| ReportError::Shape {
            title: title.clone(),
            message,
        };
        if values.len() != rows.len() {
            return Err(shape(format!("{} value rows for {} row labels", values.len(), rows.len())));
        }
        if let Some((i, r)) = values.iter().enumerate().find(|(_, r)| r.len() != cols.len()) {
            return Err(shape(format!("row {i} has {} values for {} columns", r.len(), cols.len())));
        }
        Ok(HeatmapSpec {
            title,
            rows,
            cols,
            values,
            transform,
            scale,
        })
    }

    /// Values after the display transform.
    pub fn rendered(&self) -> Vec<Vec<Option<f64>>> {
        self.values
            .iter()
            .map(|r| r.iter().map(|v| v.map(|v| self.transform.apply(v))).collect())
            .collect()
    }
}

/// Reports in row order: by model, then language, then run id.
fn ordered(reports: &[MetricReport]) -> Vec<&MetricReport> {
    let mut out: Vec<&MetricReport> = reports.iter().collect();
    out.sort_by(|a, b| (&a.model_id, &a.language, &a.run_id).cmp(&(&b.model_id, &b.language, &b.run_id)));
    out
}

fn row_labels(reports: &[&MetricReport]) -> Vec<String> {
    let one_language = reports.windows(2).all(|w| w[0].language == w[1].language);
    reports
        .iter()
        .map(|r| {
            if one_language {
                r.model_id.clone()
            } else {
                format!("{} ({})", r.model_id, r.language)
            }
        })
        .collect()
}

fn columns(present: impl Fn(BiasCategory) -> bool) -> (Vec<BiasCategory>, Vec<String>) {
    let cats: Vec<BiasCategory> = BiasCategory::ALL.into_iter().filter(|c| present(*c)).collect();
    let mut labels: Vec<String> = cats.iter().map(|c| c.as_str().to_string()).collect();
    labels.push(MICROAVERAGE.to_string());
    (cats, labels)
}

/// CrowS-Pairs stereotype preference per model and category, with a
/// pair-count weighted microaverage column.
pub fn crows_heatmap(reports: &[MetricReport]) -> Result<HeatmapSpec, ReportError> {
    let reports = ordered(reports);
    let (cats, cols) = columns(|c| reports.iter().any(|r| r.crows.iter().any(|m| m.category == c)));
    let values = reports
        .iter()
        .map(|r| {
            let mut row: Vec<Option<f64>> = cats
                .iter()
                .map(|c| r.crows.iter().find(|m| m.category == *c).map(|m| m.pct_stereotype))
                .collect();
            row.push(exact_weighted_mean(r.crows.iter().map(|m| (m.pct_stereotype, m.n))));
            row
        })
        .collect();
    HeatmapSpec::new(
        "CrowS-Pairs bias score (percent - 50)",
        row_labels(&reports),
        cols,
        values,
        Transform::PctMinus50,
        ColorScale::Diverging { bound: 50.0 },
    )
}

/// One of the BBQ views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbqView {
    OverallAccuracy,
    AmbiguousAccuracy,
    DisambiguatedAccuracy,
    AmbiguousBias,
    DisambiguatedBias,
}

impl BbqView {
    pub const ALL: [BbqView; 5] = [
        BbqView::OverallAccuracy,
        BbqView::AmbiguousAccuracy,
        BbqView::DisambiguatedAccuracy,
        BbqView::AmbiguousBias,
        BbqView::DisambiguatedBias,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            BbqView::OverallAccuracy => "bbq_overall_accuracy",
            BbqView::AmbiguousAccuracy => "bbq_ambiguous_accuracy",
            BbqView::DisambiguatedAccuracy => "bbq_disambiguated_accuracy",
            BbqView::AmbiguousBias => "bbq_ambiguous_bias",
            BbqView::DisambiguatedBias => "bbq_disambiguated_bias",
        }
    }

    fn title(self) -> &'static str {
        match self {
            BbqView::OverallAccuracy => "BBQ accuracy, all contexts (%)",
            BbqView::AmbiguousAccuracy => "BBQ accuracy, ambiguous contexts (%)",
            BbqView::DisambiguatedAccuracy => "BBQ accuracy, disambiguated contexts (%)",
            BbqView::AmbiguousBias => "BBQ bias score, ambiguous contexts (x100)",
            BbqView::DisambiguatedBias => "BBQ bias score, disambiguated contexts (x100)",
        }
    }

    fn is_bias(self) -> bool {
        matches!(self, BbqView::AmbiguousBias | BbqView::DisambiguatedBias)
    }

    /// The value and its microaverage weight.
    fn cell(self, m: &BbqCategoryMetrics) -> (Option<f64>, usize) {
        match self {
            BbqView::OverallAccuracy => (m.acc_overall, m.n_ambiguous + m.n_disambiguated),
            BbqView::AmbiguousAccuracy => (m.acc_ambiguous, m.n_ambiguous),
            BbqView::DisambiguatedAccuracy => (m.acc_disambiguated, m.n_disambiguated),
            BbqView::AmbiguousBias => (m.s_amb, m.n_ambiguous),
            BbqView::DisambiguatedBias => (m.s_dis, m.n_disambiguated),
        }
    }

    /// Pooled accuracy counts; the microaverage of an accuracy is exact.
    fn pooled(self, ms: &[BbqCategoryMetrics]) -> Option<f64> {
        let (correct, n) = ms.iter().fold((0usize, 0usize), |(c, n), m| match self {
            BbqView::OverallAccuracy => (
                c + m.correct_ambiguous + m.correct_disambiguated,
                n + m.n_ambiguous + m.n_disambiguated,
            ),
            BbqView::AmbiguousAccuracy => (c + m.correct_ambiguous, n + m.n_ambiguous),
            BbqView::DisambiguatedAccuracy => (c + m.correct_disambiguated, n + m.n_disambiguated),
            _ => (c, n),
        });
        (n > 0).then(|| crate::metrics::ratio(correct as i128, n as i128))
    }
}

/// One BBQ heatmap; bias views use a diverging scale over ±100.
pub fn bbq_heatmap(reports: &[MetricReport], view: BbqView) -> Result<HeatmapSpec, ReportError> {
    let reports = ordered(reports);
    let (cats, cols) = columns(|c| reports.iter().any(|r| r.bbq.iter().any(|m| m.category == c)));
    let values = reports
        .iter()
        .map(|r| {
            let mut row: Vec<Option<f64>> = cats
                .iter()
                .map(|c| r.bbq.iter().find(|m| m.category == *c).and_then(|m| view.cell(m).0))
                .collect();
            row.push(if view.is_bias() {
                let cells: Vec<(f64, usize)> =
                    r.bbq.iter().filter_map(|m| match view.cell(m) { (Some(v), w) => Some((v, w)), _ => None }).collect();
                exact_weighted_mean(cells)
            } else {
                view.pooled(&r.bbq)
            });
            row
        })
        .collect();
    let scale = if view.is_bias() {
        ColorScale::Diverging { bound: 100.0 }
    } else {
        ColorScale::Sequential { min: 0.0, max: 100.0 }
    };
    HeatmapSpec::new(view.title(), row_labels(&reports), cols, values, Transform::Times100, scale)
}

pub fn bbq_heatmaps(reports: &[MetricReport]) -> Result<Vec<(BbqView, HeatmapSpec)>, ReportError> {
    BbqView::ALL.into_iter().map(|v| Ok((v, bbq_heatmap(reports, v)?))).collect()
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<(), ReportError> {
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes()).map_err(|e| ReportError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    written.push(path);
    Ok(())
}

fn write_heatmap(dir: &Path, stem: &str, spec: &HeatmapSpec, written: &mut Vec<PathBuf>) -> Result<(), ReportError> {
    write(dir, &format!("{stem}.svg"), &heatmap_svg(spec), written)?;
    write(dir, &format!("{stem}.csv"), &heatmap_csv(spec), written)?;
    write(dir, &format!("{stem}.md"), &heatmap_markdown(spec), written)
}

/// Renders every view the reports have data for into `dir`: the CrowS-Pairs
/// heatmap, the five BBQ heatmaps and the Belebele table (always written,
/// header-only when empty). Returns the written paths in write order.
pub fn write_report_bundle(reports: &[MetricReport], dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| ReportError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();
    if reports.iter().any(|r| !r.crows.is_empty()) {
        write_heatmap(dir, "crows_heatmap", &crows_heatmap(reports)?, &mut written)?;
    }
    if reports.iter().any(|r| !r.bbq.is_empty()) {
        for (view, spec) in bbq_heatmaps(reports)? {
            write_heatmap(dir, view.file_stem(), &spec, &mut written)?;
        }
    }
    let rows = belebele_rows(reports);
    write(dir, "belebele_summary.csv", &belebele_table_csv(&rows), &mut written)?;
    write(dir, "belebele_summary.md", &belebele_table_markdown(&rows), &mut written)?;
    Ok(written)
}

#[cfg(test)]
mod tests;
