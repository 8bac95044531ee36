use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{json_lines, parse_json_line, read_text, CorpusError, IdRegistry, Language};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BelebeleExample {
    pub id: String,
    pub passage: String,
    pub question: String,
    pub options: [String; 4],
    pub gold_label: usize,
    pub language: Language,
}

#[derive(Deserialize)]
struct RawBelebele {
    #[serde(default)]
    id: Option<String>,
    link: String,
    question_number: serde_json::Value,
    flores_passage: String,
    question: String,
    mc_answer1: String,
    mc_answer2: String,
    mc_answer3: String,
    mc_answer4: String,
    correct_answer_num: serde_json::Value,
}

pub fn load_belebele(path: &Path, language: &Language) -> Result<Vec<BelebeleExample>, CorpusError> {
    let text = read_text(path)?;
    load_belebele_str(&text, path, language)
}

/// Parses upstream Belebele JSON lines (`mc_answer1..4`, 1-based
/// `correct_answer_num`). Ids default to `<link>#<question_number>`.
pub fn load_belebele_str(text: &str, path: &Path, language: &Language) -> Result<Vec<BelebeleExample>, CorpusError> {
    let mut ids = IdRegistry::new(path);
    let mut examples = Vec::new();
    for (row, line) in json_lines(text) {
        let raw: RawBelebele = parse_json_line(path, row, line)?;
        let parse_err = |field: &str, message: String| CorpusError::Parse {
            path: path.to_path_buf(),
            row,
            field: field.to_string(),
            message,
        };
        let answer = match &raw.correct_answer_num {
            serde_json::Value::Number(n) => n.as_u64(),
            serde_json::Value::String(s) => s.trim().parse::<u64>().ok(),
            _ => None,
        };
        let gold_label = match answer {
            Some(n @ 1..=4) => (n - 1) as usize,
            _ => {
                return Err(parse_err(
                    "correct_answer_num",
                    format!("expected 1..=4, got {}", raw.correct_answer_num),
                ))
            }
        };
        let number = match &raw.question_number {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let id = raw.id.unwrap_or_else(|| format!("{}#{number}", raw.link));
        ids.register(&id, row)?;
        examples.push(BelebeleExample {
            id,
            passage: raw.flores_passage,
            question: raw.question,
            options: [raw.mc_answer1, raw.mc_answer2, raw.mc_answer3, raw.mc_answer4],
            gold_label,
            language: language.clone(),
        });
    }
    Ok(examples)
}
