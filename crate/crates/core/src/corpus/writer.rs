//! Serializes examples back into the layouts the loaders read, with explicit
//! ids so a written split loads to the same records.

use std::path::Path;

use serde_json::json;

use super::{BbqExample, BelebeleExample, ContextCondition, CorpusError, CrowsPairsExample, Direction, Polarity};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| CorpusError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}

pub fn crows_pairs_to_csv(examples: &[CrowsPairsExample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "sent_more", "sent_less", "stereo_antistereo", "bias_type"])
        .expect("in-memory csv");
    for e in examples {
        let direction = match e.direction {
            Direction::Stereo => "stereo",
            Direction::Antistereo => "antistereo",
        };
        w.write_record([e.id.as_str(), &e.sent_more, &e.sent_less, direction, e.bias_category.as_str()])
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 fields")
}

pub fn write_crows_pairs(path: &Path, examples: &[CrowsPairsExample]) -> Result<(), CorpusError> {
    write_atomic(path, crows_pairs_to_csv(examples).as_bytes())
}

pub fn bbq_to_jsonl(examples: &[BbqExample]) -> String {
    let mut out = String::new();
    for e in examples {
        let info = |k: usize| {
            if k == e.unknown_index {
                json!(["unknown"])
            } else if k == e.bias_target_index {
                json!(["target"])
            } else {
                json!(["other"])
            }
        };
        let row = json!({
            "id": e.id,
            "example_id": e.id,
            "question_polarity": match e.polarity { Polarity::Negative => "neg", Polarity::Nonnegative => "nonneg" },
            "context_condition": match e.condition {
                ContextCondition::Ambiguous => "ambig",
                ContextCondition::Disambiguated => "disambig",
            },
            "category": e.bias_category.as_str(),
            "answer_info": { "ans0": info(0), "ans1": info(1), "ans2": info(2) },
            "context": e.context,
            "question": e.question,
            "ans0": e.options[0],
            "ans1": e.options[1],
            "ans2": e.options[2],
            "label": e.gold_label,
            "target_loc": e.bias_target_index,
        });
        out.push_str(&row.to_string());
        out.push('\n');
    }
    out
}

pub fn write_bbq(path: &Path, examples: &[BbqExample]) -> Result<(), CorpusError> {
    write_atomic(path, bbq_to_jsonl(examples).as_bytes())
}

pub fn belebele_to_jsonl(examples: &[BelebeleExample]) -> String {
    let mut out = String::new();
    for e in examples {
        let row = json!({
            "id": e.id,
            "link": e.id,
            "question_number": 1,
            "flores_passage": e.passage,
            "question": e.question,
            "mc_answer1": e.options[0],
            "mc_answer2": e.options[1],
            "mc_answer3": e.options[2],
            "mc_answer4": e.options[3],
            "correct_answer_num": (e.gold_label + 1).to_string(),
        });
        out.push_str(&row.to_string());
        out.push('\n');
    }
    out
}

pub fn write_belebele(path: &Path, examples: &[BelebeleExample]) -> Result<(), CorpusError> {
    write_atomic(path, belebele_to_jsonl(examples).as_bytes())
}
