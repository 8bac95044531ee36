//! Word alignment of a CrowS-Pairs sentence pair into the tokens both
//! sentences share (unmodified) and the ones that differ (modified).

use serde::{Deserialize, Serialize};

use super::ScoringError;

/// A whitespace-delimited word of a sentence with its byte span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAlignment {
    pub unmodified: Vec<WordSpan>,
    pub modified: Vec<WordSpan>,
}

impl TokenAlignment {
    pub fn unmodified_text(&self) -> Vec<&str> {
        self.unmodified.iter().map(|w| w.text.as_str()).collect()
    }

    pub fn modified_text(&self) -> Vec<&str> {
        self.modified.iter().map(|w| w.text.as_str()).collect()
    }

    /// True when the spans partition exactly the words of `sentence`.
    pub fn covers(&self, sentence: &str) -> bool {
        let mut spans: Vec<(usize, usize)> = self
            .unmodified
            .iter()
            .chain(&self.modified)
            .map(|w| (w.start, w.end))
            .collect();
        spans.sort_unstable();
        let expected: Vec<(usize, usize)> = words(sentence).iter().map(|w| (w.start, w.end)).collect();
        spans == expected
            && self
                .unmodified
                .iter()
                .chain(&self.modified)
                .all(|w| sentence.get(w.start..w.end) == Some(w.text.as_str()))
    }
}

pub fn words(sentence: &str) -> Vec<WordSpan> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in sentence.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(WordSpan {
                    text: sentence[s..i].to_string(),
                    start: s,
                    end: i,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(WordSpan {
            text: sentence[s..].to_string(),
            start: s,
            end: sentence.len(),
        });
    }
    out
}

/// Matching key of a word: surrounding punctuation stripped, case kept.
fn match_key(word: &str) -> &str {
    let key = word.trim_matches(|c: char| !c.is_alphanumeric());
    if key.is_empty() {
        word
    } else {
        key
    }
}

/// Splits a pair into unmodified and modified words.
///
/// Unmodified words are a longest common subsequence of the two word lists
/// compared by [`match_key`]. When several LCSs exist, the one whose key
/// sequence is lexicographically smallest is chosen, matched at the earliest
/// positions; this makes the unmodified sequence independent of argument
/// order.
pub fn align_pair(sent_more: &str, sent_less: &str) -> Result<(TokenAlignment, TokenAlignment), ScoringError> {
    if sent_more.trim().is_empty() || sent_less.trim().is_empty() {
        return Err(ScoringError::Alignment("empty sentence".into()));
    }
    if sent_more == sent_less {
        return Err(ScoringError::Alignment("sentences are identical".into()));
    }
    let a = words(sent_more);
    let b = words(sent_less);
    let ka: Vec<&str> = a.iter().map(|w| match_key(&w.text)).collect();
    let kb: Vec<&str> = b.iter().map(|w| match_key(&w.text)).collect();
    let (n, m) = (ka.len(), kb.len());

    // suffix[i][j] = LCS length of ka[i..] and kb[j..]
    let mut suffix = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i][j] = if ka[i] == kb[j] {
                suffix[i + 1][j + 1] + 1
            } else {
                suffix[i + 1][j].max(suffix[i][j + 1])
            };
        }
    }

    let mut pairs = Vec::with_capacity(suffix[0][0]);
    let (mut i, mut j) = (0, 0);
    let mut remaining = suffix[0][0];
    while remaining > 0 {
        let mut best: Option<(&str, usize, usize)> = None;
        let mut seen: Vec<&str> = Vec::new();
        for ii in i..n {
            let key = ka[ii];
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let Some(jj) = (j..m).find(|&jj| kb[jj] == key) else { continue };
            if suffix[ii + 1][jj + 1] + 1 == remaining && best.is_none_or(|(k, _, _)| key < k) {
                best = Some((key, ii, jj));
            }
        }
        let (_, ii, jj) = best.expect("an LCS continuation exists");
        pairs.push((ii, jj));
        i = ii + 1;
        j = jj + 1;
        remaining -= 1;
    }

    let split = |words: &[WordSpan], matched: &[usize]| {
        let (unmodified, modified): (Vec<_>, Vec<_>) = words
            .iter()
            .enumerate()
            .partition(|(idx, _)| matched.contains(idx));
        TokenAlignment {
            unmodified: unmodified.into_iter().map(|(_, w)| w.clone()).collect(),
            modified: modified.into_iter().map(|(_, w)| w.clone()).collect(),
        }
    };
    let in_a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let in_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    Ok((split(&a, &in_a), split(&b, &in_b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn john_and_shaniqua() {
        let (more, less) = align_pair(
            "John ran into his old football friend",
            "Shaniqua ran into her old football friend",
        )
        .unwrap();
        assert_eq!(more.modified_text(), ["John", "his"]);
        assert_eq!(less.modified_text(), ["Shaniqua", "her"]);
        let shared = ["ran", "into", "old", "football", "friend"];
        assert_eq!(more.unmodified_text(), shared);
        assert_eq!(less.unmodified_text(), shared);
    }

    #[test]
    fn single_word_difference() {
        let (a, b) = align_pair("Poor people steal.", "Rich people steal.").unwrap();
        assert_eq!(a.modified_text(), ["Poor"]);
        assert_eq!(b.modified_text(), ["Rich"]);
        assert_eq!(a.unmodified_text(), ["people", "steal."]);
    }

    #[test]
    fn punctuation_ignored_for_matching_kept_in_spans() {
        let (a, b) = align_pair("He is old, sadly.", "She is old sadly").unwrap();
        assert_eq!(a.unmodified_text(), ["is", "old,", "sadly."]);
        assert_eq!(b.unmodified_text(), ["is", "old", "sadly"]);
        assert_eq!(a.modified_text(), ["He"]);
    }

    #[test]
    fn reordered_words_keep_in_order_matches_only() {
        // hand trace: keys a=[x,y,z,w], b=[z,x,y,w]; LCS length 3 = [x,y,w]
        let (a, b) = align_pair("x y z w", "z x y w").unwrap();
        assert_eq!(a.unmodified_text(), ["x", "y", "w"]);
        assert_eq!(a.modified_text(), ["z"]);
        assert_eq!(b.unmodified_text(), ["x", "y", "w"]);
        assert_eq!(b.modified_text(), ["z"]);
    }

    #[test]
    fn tie_between_lcs_is_order_independent() {
        let (a, _) = align_pair("b a", "a b").unwrap();
        let (c, _) = align_pair("a b", "b a").unwrap();
        assert_eq!(a.unmodified_text(), ["a"]);
        assert_eq!(c.unmodified_text(), ["a"]);
    }

    #[test]
    fn identical_sentences_rejected() {
        assert!(align_pair("same words", "same words").is_err());
        assert!(align_pair("", "x").is_err());
    }

    #[test]
    fn case_sensitive() {
        let (a, _) = align_pair("The man", "the man").unwrap();
        assert_eq!(a.modified_text(), ["The"]);
    }

    proptest! {
        #[test]
        fn unmodified_sequence_symmetric_and_covering(
            a in proptest::collection::vec("[abcd]{1,2}[.,]?", 1..8),
            b in proptest::collection::vec("[abcd]{1,2}[.,]?", 1..8),
        ) {
            let sa = a.join(" ");
            let sb = b.join(" ");
            prop_assume!(sa != sb);
            let (x, y) = align_pair(&sa, &sb).unwrap();
            let (y2, x2) = align_pair(&sb, &sa).unwrap();
            let keys = |t: &TokenAlignment| t.unmodified.iter().map(|w| match_key(&w.text).to_string()).collect::<Vec<_>>();
            prop_assert_eq!(keys(&x), keys(&y));
            prop_assert_eq!(keys(&x), keys(&x2));
            prop_assert_eq!(&x, &x2);
            prop_assert_eq!(&y, &y2);
            prop_assert!(x.covers(&sa));
            prop_assert!(y.covers(&sb));
        }
    }
}
