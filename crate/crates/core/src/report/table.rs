use serde::{Deserialize, Serialize};

use super::render::{csv_of, format_value, markdown_of};
use crate::metrics::MetricReport;

/// One row of the Belebele accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BelebeleRow {
    pub model: String,
    /// `unk` when the report does not state it.
    pub parameter_size: String,
    pub language: String,
    /// Stored fraction; rendered ×100.
    pub accuracy: f64,
}

impl BelebeleRow {
    pub fn cells(&self) -> Vec<String> {
        vec![
            self.model.clone(),
            self.parameter_size.clone(),
            self.language.clone(),
            format_value(self.accuracy * 100.0),
        ]
    }
}

/// English name of a language tag; unknown tags are returned unchanged.
pub fn language_name(tag: &str) -> String {
    match tag {
        "en" => "English",
        "de" => "German",
        "fr" => "French",
        "es" => "Spanish",
        "it" => "Italian",
        "mul" => "Multilingual",
        other => return other.to_string(),
    }
    .to_string()
}

/// Rows of every report with a Belebele result, sorted by model then
/// language; ties keep input order.
pub fn belebele_rows(reports: &[MetricReport]) -> Vec<BelebeleRow> {
    let mut rows: Vec<(String, BelebeleRow)> = reports
        .iter()
        .filter_map(|r| {
            let b = r.belebele.as_ref()?;
            Some((
                r.language.clone(),
                BelebeleRow {
                    model: r.model_id.clone(),
                    parameter_size: r.model_size.clone().unwrap_or_else(|| "unk".into()),
                    language: language_name(&r.language),
                    accuracy: b.accuracy,
                },
            ))
        })
        .collect();
    rows.sort_by(|a, b| (&a.1.model, &a.0).cmp(&(&b.1.model, &b.0)));
    rows.into_iter().map(|(_, r)| r).collect()
}

fn header() -> Vec<String> {
    ["Model", "Parameter Size", "Language", "Acc"].map(String::from).to_vec()
}

pub fn belebele_table_markdown(rows: &[BelebeleRow]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(BelebeleRow::cells).collect();
    markdown_of(&header(), &[false, false, false, true], &cells)
}

pub fn belebele_table_csv(rows: &[BelebeleRow]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(BelebeleRow::cells).collect();
    csv_of(&header(), &cells)
}
