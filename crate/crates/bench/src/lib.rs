//! Deterministic synthetic inputs for the benchmarks.

use polybias::corpus::{BbqExample, BiasCategory, ContextCondition, CrowsPairsExample, Direction, Language, Polarity};
use polybias::scoring::{PairScore, PredictionRecord};

const SUBJECTS: [(&str, &str); 4] = [
    ("John", "Shaniqua"),
    ("The old man", "The young man"),
    ("The rich woman", "The poor woman"),
    ("The Christian", "The Muslim"),
];

fn english() -> Language {
    Language::new("en").expect("valid tag")
}

fn category(i: usize) -> BiasCategory {
    BiasCategory::ALL[i % BiasCategory::ALL.len()]
}

pub fn crows_pairs(n: usize) -> Vec<CrowsPairsExample> {
    (0..n)
        .map(|i| {
            let (more, less) = SUBJECTS[i % SUBJECTS.len()];
            let tail = format!("ran into an old friend at the station on day {i} and stayed for dinner");
            CrowsPairsExample {
                id: i.to_string(),
                sent_more: format!("{more} {tail}"),
                sent_less: format!("{less} {tail}"),
                bias_category: category(i),
                direction: Direction::Stereo,
                language: english(),
            }
        })
        .collect()
}

pub fn bbq_examples(n: usize) -> Vec<BbqExample> {
    (0..n)
        .map(|i| {
            let ambiguous = i % 2 == 0;
            BbqExample {
                id: i.to_string(),
                bias_category: category(i / 2),
                context: "Two people met at the library.".into(),
                question: "Who was late?".into(),
                options: ["The old man".into(), "The young man".into(), "Unknown".into()],
                gold_label: if ambiguous { 2 } else { i % 3 % 2 },
                condition: if ambiguous {
                    ContextCondition::Ambiguous
                } else {
                    ContextCondition::Disambiguated
                },
                polarity: if i % 4 < 2 { Polarity::Negative } else { Polarity::Nonnegative },
                unknown_index: 2,
                bias_target_index: 0,
                language: english(),
            }
        })
        .collect()
}

pub fn predictions(examples: &[BbqExample]) -> Vec<PredictionRecord> {
    examples
        .iter()
        .enumerate()
        .map(|(i, e)| PredictionRecord {
            example_id: e.id.clone(),
            chosen_index: (i * 7) % 3,
            scores: Vec::new(),
            tie: false,
        })
        .collect()
}

pub fn pair_scores(n: usize) -> Vec<PairScore> {
    (0..n)
        .map(|i| {
            let more = -(((i * 37) % 101) as f64) / 7.0;
            let less = -(((i * 53) % 97) as f64) / 7.0;
            PairScore::new(&i.to_string(), category(i), more, less)
        })
        .collect()
}
