//! Which fields of each record type carry translatable text.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::corpus::{BbqExample, BelebeleExample, CrowsPairsExample, DatasetKind, Language};

/// A record whose text fields can be replaced by translations.
pub trait Translatable: Clone + Send + Sync {
    const KIND: DatasetKind;
    /// Text fields in a fixed order.
    const TEXT_FIELDS: &'static [&'static str];
    /// Metadata and label fields; always copied verbatim.
    const LABEL_FIELDS: &'static [&'static str];

    fn record_id(&self) -> &str;
    fn text(&self, field: &str) -> &str;
    fn set_text(&mut self, field: &str, text: String);
    fn set_language(&mut self, language: Language);
    /// The label fields as a comparable value.
    fn labels(&self) -> Value;

    /// Warnings about a translation that loads but looks suspicious.
    fn check_translation(&self, _translated: &Self) -> Vec<String> {
        Vec::new()
    }

    fn texts(&self) -> BTreeMap<String, String> {
        Self::TEXT_FIELDS
            .iter()
            .map(|f| (f.to_string(), self.text(f).to_string()))
            .collect()
    }
}

impl Translatable for CrowsPairsExample {
    const KIND: DatasetKind = DatasetKind::CrowsPairs;
    const TEXT_FIELDS: &'static [&'static str] = &["sent_more", "sent_less"];
    const LABEL_FIELDS: &'static [&'static str] = &["id", "bias_category", "direction"];

    fn record_id(&self) -> &str {
        &self.id
    }
    fn text(&self, field: &str) -> &str {
        match field {
            "sent_more" => &self.sent_more,
            "sent_less" => &self.sent_less,
            _ => panic!("unknown CrowS-Pairs field `{field}`"),
        }
    }
    fn set_text(&mut self, field: &str, text: String) {
        match field {
            "sent_more" => self.sent_more = text,
            "sent_less" => self.sent_less = text,
            _ => panic!("unknown CrowS-Pairs field `{field}`"),
        }
    }
    fn set_language(&mut self, language: Language) {
        self.language = language;
    }
    fn labels(&self) -> Value {
        json!([self.id, self.bias_category, self.direction])
    }
}

impl Translatable for BbqExample {
    const KIND: DatasetKind = DatasetKind::Bbq;
    const TEXT_FIELDS: &'static [&'static str] = &["context", "question", "ans0", "ans1", "ans2"];
    const LABEL_FIELDS: &'static [&'static str] = &[
        "id",
        "bias_category",
        "gold_label",
        "condition",
        "polarity",
        "unknown_index",
        "bias_target_index",
    ];

    fn record_id(&self) -> &str {
        &self.id
    }
    fn text(&self, field: &str) -> &str {
        match field {
            "context" => &self.context,
            "question" => &self.question,
            "ans0" => &self.options[0],
            "ans1" => &self.options[1],
            "ans2" => &self.options[2],
            _ => panic!("unknown BBQ field `{field}`"),
        }
    }
    fn set_text(&mut self, field: &str, text: String) {
        match field {
            "context" => self.context = text,
            "question" => self.question = text,
            "ans0" => self.options[0] = text,
            "ans1" => self.options[1] = text,
            "ans2" => self.options[2] = text,
            _ => panic!("unknown BBQ field `{field}`"),
        }
    }
    fn set_language(&mut self, language: Language) {
        self.language = language;
    }
    fn labels(&self) -> Value {
        json!([
            self.id,
            self.bias_category,
            self.gold_label,
            self.condition,
            self.polarity,
            self.unknown_index,
            self.bias_target_index
        ])
    }

    /// Flags person options that appear verbatim in the source context but
    /// not in the translated one.
    fn check_translation(&self, translated: &Self) -> Vec<String> {
        (0..3)
            .filter(|&k| k != self.unknown_index)
            .filter(|&k| self.context.contains(self.options[k].as_str()))
            .filter(|&k| !translated.context.contains(translated.options[k].as_str()))
            .map(|k| format!("option ans{k} no longer appears verbatim in the translated context"))
            .collect()
    }
}

impl Translatable for BelebeleExample {
    const KIND: DatasetKind = DatasetKind::Belebele;
    const TEXT_FIELDS: &'static [&'static str] = &[
        "flores_passage",
        "question",
        "mc_answer1",
        "mc_answer2",
        "mc_answer3",
        "mc_answer4",
    ];
    const LABEL_FIELDS: &'static [&'static str] = &["id", "correct_answer_num"];

    fn record_id(&self) -> &str {
        &self.id
    }
    fn text(&self, field: &str) -> &str {
        match field {
            "flores_passage" => &self.passage,
            "question" => &self.question,
            "mc_answer1" => &self.options[0],
            "mc_answer2" => &self.options[1],
            "mc_answer3" => &self.options[2],
            "mc_answer4" => &self.options[3],
            _ => panic!("unknown Belebele field `{field}`"),
        }
    }
    fn set_text(&mut self, field: &str, text: String) {
        match field {
            "flores_passage" => self.passage = text,
            "question" => self.question = text,
            "mc_answer1" => self.options[0] = text,
            "mc_answer2" => self.options[1] = text,
            "mc_answer3" => self.options[2] = text,
            "mc_answer4" => self.options[3] = text,
            _ => panic!("unknown Belebele field `{field}`"),
        }
    }
    fn set_language(&mut self, language: Language) {
        self.language = language;
    }
    fn labels(&self) -> Value {
        json!([self.id, self.gold_label])
    }
}
