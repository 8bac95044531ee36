use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, BiasCategory, CorpusError, IdRegistry, IdSet, Language};

/// Whether `sent_more` expresses a stereotype or violates one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Stereo,
    Antistereo,
}

/// A minimally distant sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowsPairsExample {
    pub id: String,
    /// The sentence expressing the stereotype.
    pub sent_more: String,
    pub sent_less: String,
    pub bias_category: BiasCategory,
    pub direction: Direction,
    pub language: Language,
}

pub fn load_crows_pairs(
    path: &Path,
    language: &Language,
    exclusions: &IdSet,
) -> Result<Vec<CrowsPairsExample>, CorpusError> {
    let text = read_text(path)?;
    load_crows_pairs_str(&text, path, language, exclusions)
}

/// Parses the upstream CrowS-Pairs CSV layout.
///
/// Required columns: `sent_more`, `sent_less`, `stereo_antistereo`,
/// `bias_type`. Ids come from an optional `id` column and otherwise are the
/// 1-based data row number, which is stable across translated splits that
/// preserve row order.
pub fn load_crows_pairs_str(
    text: &str,
    path: &Path,
    language: &Language,
    exclusions: &IdSet,
) -> Result<Vec<CrowsPairsExample>, CorpusError> {
    let parse_err = |row: usize, field: &str, message: String| CorpusError::Parse {
        path: path.to_path_buf(),
        row,
        field: field.to_string(),
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(0, "header", e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| column(name).ok_or_else(|| parse_err(0, name, "missing column".into()));
    let more_col = required("sent_more")?;
    let less_col = required("sent_less")?;
    let direction_col = required("stereo_antistereo")?;
    let bias_col = required("bias_type")?;
    let id_col = column("id");

    let mut ids = IdRegistry::new(path);
    let mut examples = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| parse_err(row, "record", e.to_string()))?;
        let field = |col: usize, name: &str| {
            record
                .get(col)
                .ok_or_else(|| parse_err(row, name, "missing value".into()))
        };

        let id = match id_col {
            Some(col) => field(col, "id")?.trim().to_string(),
            None => row.to_string(),
        };
        if id.is_empty() {
            return Err(parse_err(row, "id", "empty id".into()));
        }
        let sent_more = field(more_col, "sent_more")?.to_string();
        let sent_less = field(less_col, "sent_less")?.to_string();
        let direction = match field(direction_col, "stereo_antistereo")?.trim() {
            "stereo" => Direction::Stereo,
            "antistereo" => Direction::Antistereo,
            other => return Err(parse_err(row, "stereo_antistereo", format!("unknown direction `{other}`"))),
        };
        let label = field(bias_col, "bias_type")?;
        let bias_category = BiasCategory::from_crows_label(label)
            .ok_or_else(|| parse_err(row, "bias_type", format!("unknown bias type `{label}`")))?;

        if sent_more.trim().is_empty() || sent_less.trim().is_empty() {
            return Err(CorpusError::Validation {
                path: path.to_path_buf(),
                row,
                message: "empty sentence".into(),
            });
        }
        if sent_more == sent_less {
            return Err(CorpusError::Validation {
                path: path.to_path_buf(),
                row,
                message: "sent_more and sent_less are identical".into(),
            });
        }
        ids.register(&id, row)?;
        if exclusions.contains(&id) {
            continue;
        }
        examples.push(CrowsPairsExample {
            id,
            sent_more,
            sent_less,
            bias_category,
            direction,
            language: language.clone(),
        });
    }
    Ok(examples)
}
