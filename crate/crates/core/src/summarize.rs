//! Extractive report summarization.
//!
//! Stopwords are stripped, remaining words are scored by normalized
//! document frequency, sentences by the mean score of their content words,
//! and the strongest sentences come back in original order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of sentences kept when no target is given.
pub const DEFAULT_SUMMARY_RATIO: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummarizeError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("document contains no content words")]
    AllStopwords,
    #[error("invalid summary target: {0}")]
    InvalidTarget(String),
}

/// High-frequency function words excluded from significance scoring.
#[derive(Debug, Clone)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    /// The English list shipped with the artifact.
    pub fn default_english() -> Self {
        Self::from_text(include_str!("stopwords_en.txt"))
    }

    /// One word per line; blank lines and surrounding whitespace ignored.
    pub fn from_text(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A segmented input text: sentences in order, each with its lowercased
/// word tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub raw: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

/// Split into sentences on terminal punctuation (`.`, `!`, `?`) followed by
/// whitespace; a trailing chunk without terminal punctuation is still a
/// sentence. Tokens are maximal alphanumeric runs, lowercased; non-Latin
/// scripts pass through untouched.
pub fn segment(text: &str) -> Result<Document, SummarizeError> {
    if text.trim().is_empty() {
        return Err(SummarizeError::EmptyDocument);
    }
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut prev_terminal = false;
    for (pos, ch) in text.char_indices() {
        if prev_terminal && ch.is_whitespace() {
            push_sentence(&mut sentences, &text[start..pos]);
            start = pos;
        }
        prev_terminal = matches!(ch, '.' | '!' | '?');
    }
    push_sentence(&mut sentences, &text[start..]);
    if sentences.is_empty() {
        return Err(SummarizeError::EmptyDocument);
    }
    Ok(Document {
        raw: text.to_string(),
        sentences,
    })
}

fn push_sentence(sentences: &mut Vec<Sentence>, chunk: &str) {
    let trimmed = chunk.trim();
    if trimmed.is_empty() {
        return;
    }
    sentences.push(Sentence {
        index: sentences.len(),
        text: trimmed.to_string(),
        tokens: tokenize(trimmed),
    });
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Word significance: document frequency of each non-stopword token,
/// normalized by the most frequent one, so values sit in (0, 1] and the
/// maximum is exactly 1.
pub type WordScoreTable = BTreeMap<String, f64>;

pub fn score_words(
    doc: &Document,
    stopwords: &Stopwords,
) -> Result<WordScoreTable, SummarizeError> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in &doc.sentences {
        for token in &sentence.tokens {
            if !stopwords.contains(token) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
    }
    let max = *counts.values().max().ok_or(SummarizeError::AllStopwords)?;
    Ok(counts
        .into_iter()
        .map(|(w, c)| (w.to_string(), c as f64 / max as f64))
        .collect())
}

/// Mean content-word significance per sentence; sentences with no content
/// words score 0.
pub fn score_sentences(doc: &Document, table: &WordScoreTable) -> Vec<f64> {
    doc.sentences
        .iter()
        .map(|sentence| {
            let mut sum = 0.0;
            let mut content = 0usize;
            for token in &sentence.tokens {
                if let Some(v) = table.get(token) {
                    sum += v;
                    content += 1;
                }
            }
            if content == 0 {
                0.0
            } else {
                sum / content as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum SummaryTarget {
    /// Keep `ceil(ratio * n)` sentences; ratio in (0, 1].
    Ratio(f64),
    /// Keep `k` sentences, capped at the document length.
    Count(usize),
}

impl Default for SummaryTarget {
    fn default() -> Self {
        SummaryTarget::Ratio(DEFAULT_SUMMARY_RATIO)
    }
}

impl SummaryTarget {
    fn validate(&self) -> Result<(), SummarizeError> {
        match self {
            SummaryTarget::Ratio(r) if !(*r > 0.0 && *r <= 1.0) => Err(
                SummarizeError::InvalidTarget(format!("ratio {r} outside (0, 1]")),
            ),
            SummaryTarget::Count(0) => Err(SummarizeError::InvalidTarget(
                "sentence count must be at least 1".to_string(),
            )),
            _ => Ok(()),
        }
    }

    fn select_count(&self, n: usize) -> usize {
        match self {
            SummaryTarget::Ratio(r) => ((r * n as f64).ceil() as usize).clamp(1, n),
            SummaryTarget::Count(k) => (*k).min(n).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryParams {
    pub target: SummaryTarget,
    /// True when the document had no content words and the summary fell
    /// back to the leading sentences.
    pub all_stopwords_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Indices into the segmented document, strictly ascending.
    pub selected: Vec<usize>,
    /// Score of every sentence in document order.
    pub scores: Vec<f64>,
    /// Selected sentence texts, original order.
    pub sentences: Vec<String>,
    pub params: SummaryParams,
}

/// Pick the strongest sentences. Ties at the cut go to the earlier
/// sentence; output preserves document order.
pub fn summarize(
    text: &str,
    target: SummaryTarget,
    stopwords: &Stopwords,
) -> Result<Summary, SummarizeError> {
    target.validate()?;
    let doc = segment(text)?;
    let n = doc.sentences.len();
    let k = target.select_count(n);
    let (scores, selected, fallback) = match score_words(&doc, stopwords) {
        Ok(table) => {
            let scores = score_sentences(&doc, &table);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut selected: Vec<usize> = order.into_iter().take(k).collect();
            selected.sort_unstable();
            (scores, selected, false)
        }
        Err(SummarizeError::AllStopwords) => (vec![0.0; n], (0..k).collect(), true),
        Err(e) => return Err(e),
    };
    let sentences = selected
        .iter()
        .map(|&i| doc.sentences[i].text.clone())
        .collect();
    Ok(Summary {
        selected,
        scores,
        sentences,
        params: SummaryParams {
            target,
            all_stopwords_fallback: fallback,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sw() -> Stopwords {
        Stopwords::default_english()
    }

    #[test]
    fn default_list_covers_named_function_words() {
        let s = sw();
        for w in ["am", "are", "i", "go"] {
            assert!(s.contains(w), "missing stopword {w}");
        }
        assert!(!s.contains("home"));
    }

    #[test]
    fn segment_single_sentence() {
        let doc = segment("I go home.").unwrap();
        assert_eq!(doc.sentences.len(), 1);
        assert_eq!(doc.sentences[0].tokens, ["i", "go", "home"]);
    }

    #[test]
    fn segment_covers_all_terminators() {
        let doc = segment("A. B? C!").unwrap();
        assert_eq!(doc.sentences.len(), 3);
        assert_eq!(doc.sentences[0].text, "A.");
        assert_eq!(doc.sentences[1].text, "B?");
        assert_eq!(doc.sentences[2].text, "C!");
        let indices: Vec<usize> = doc.sentences.iter().map(|s| s.index).collect();
        assert_eq!(indices, [0, 1, 2]);
    }

    #[test]
    fn segment_without_terminal_punctuation() {
        let doc = segment("no punctuation here at all").unwrap();
        assert_eq!(doc.sentences.len(), 1);
    }

    #[test]
    fn segment_empty_is_error() {
        assert_eq!(segment("   \n "), Err(SummarizeError::EmptyDocument));
    }

    #[test]
    fn segment_keeps_multi_punctuation_together() {
        let doc = segment("Really?! Yes. Fine...").unwrap();
        assert_eq!(doc.sentences.len(), 3);
        assert_eq!(doc.sentences[0].text, "Really?!");
        assert_eq!(doc.sentences[2].text, "Fine...");
    }

    #[test]
    fn score_words_highlights_home() {
        let doc = segment("I go home.").unwrap();
        let table = score_words(&doc, &sw()).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table["home"], 1.0);
    }

    #[test]
    fn score_words_normalizes_by_max_count() {
        let doc =
            segment("Robbery at the bank. The robbery team fled. Robbery weapons found. A bank robbery.")
                .unwrap();
        let table = score_words(&doc, &sw()).unwrap();
        assert_eq!(table["robbery"], 1.0);
        assert_eq!(table["bank"], 0.5);
    }

    #[test]
    fn score_words_all_stopwords_is_error() {
        let doc = segment("I am. You are.").unwrap();
        assert_eq!(score_words(&doc, &sw()), Err(SummarizeError::AllStopwords));
    }

    #[test]
    fn sentence_scores_match_hand_computation() {
        // content counts: robbery 2, bank 1, suspect 1 -> robbery 1.0, others 0.5
        let text = "The robbery happened. A suspect fled the bank. The robbery.";
        let doc = segment(text).unwrap();
        let table = score_words(&doc, &sw()).unwrap();
        let scores = score_sentences(&doc, &table);
        // s0: {robbery(1.0), happened(0.5)} -> 0.75
        // s1: {suspect(0.5), fled(0.5), bank(0.5)} -> 0.5
        // s2: {robbery(1.0)} -> 1.0
        assert!((scores[0] - 0.75).abs() < 1e-12);
        assert!((scores[1] - 0.5).abs() < 1e-12);
        assert!((scores[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stopword_only_sentence_scores_zero() {
        let doc = segment("I am here with them. Robbery at the bank.").unwrap();
        let table = score_words(&doc, &sw()).unwrap();
        let scores = score_sentences(&doc, &table);
        assert_eq!(scores[0], 0.0);
    }

    #[test]
    fn max_frequency_single_content_word_sentence_scores_one() {
        let doc = segment("Robbery. The suspect fled after the robbery alarm.").unwrap();
        let table = score_words(&doc, &sw()).unwrap();
        let scores = score_sentences(&doc, &table);
        assert_eq!(scores[0], 1.0);
    }

    #[test]
    fn summarize_single_sentence_any_target() {
        let s = summarize("Only one sentence here.", SummaryTarget::Ratio(0.1), &sw()).unwrap();
        assert_eq!(s.selected, [0]);
        assert_eq!(s.sentences, ["Only one sentence here."]);
    }

    #[test]
    fn summarize_ratio_one_keeps_everything_and_is_idempotent() {
        let text = "Gun seen at the bank. Officers arrived fast. The suspect fled north.";
        let s = summarize(text, SummaryTarget::Ratio(1.0), &sw()).unwrap();
        assert_eq!(s.selected, [0, 1, 2]);
        let again = summarize(&s.sentences.join(" "), SummaryTarget::Ratio(1.0), &sw()).unwrap();
        assert_eq!(again.sentences, s.sentences);
    }

    #[test]
    fn summarize_matches_brute_force_oracle() {
        let text = "The bank robbery started at nine. Witnesses saw a gun near the gate. \
                    Officers were sent to the bank. The robbery suspect wore a mask. \
                    A knife was also found. The gate camera recorded the suspect. \
                    The mask was red. Officers closed the gate. The bank reopened later. \
                    A report was filed about the robbery.";
        let stop = sw();
        let doc = segment(text).unwrap();
        let table = score_words(&doc, &stop).unwrap();
        let scores = score_sentences(&doc, &table);
        assert_eq!(doc.sentences.len(), 10);

        // independent oracle: score all, sort (score desc, index asc), cut, reorder
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut expect: Vec<usize> = idx.into_iter().take(3).collect();
        expect.sort_unstable();

        let s = summarize(text, SummaryTarget::Ratio(0.3), &stop).unwrap();
        assert_eq!(s.selected, expect);
        assert_eq!(s.selected.len(), 3);
    }

    #[test]
    fn summarize_count_target_capped_at_length() {
        let s = summarize("One. Two. Three.", SummaryTarget::Count(10), &sw()).unwrap();
        assert_eq!(s.selected.len(), 3);
    }

    #[test]
    fn summarize_all_stopwords_falls_back_to_leading_sentences() {
        let s = summarize("I am. You are. We were. He was.", SummaryTarget::Count(2), &sw())
            .unwrap();
        assert!(s.params.all_stopwords_fallback);
        assert_eq!(s.selected, [0, 1]);
        assert_eq!(s.sentences, ["I am.", "You are."]);
    }

    #[test]
    fn summarize_rejects_bad_targets() {
        let stop = sw();
        assert!(matches!(
            summarize("A.", SummaryTarget::Ratio(0.0), &stop),
            Err(SummarizeError::InvalidTarget(_))
        ));
        assert!(matches!(
            summarize("A.", SummaryTarget::Ratio(1.5), &stop),
            Err(SummarizeError::InvalidTarget(_))
        ));
        assert!(matches!(
            summarize("A.", SummaryTarget::Count(0), &stop),
            Err(SummarizeError::InvalidTarget(_))
        ));
    }

    #[test]
    fn summarize_is_extractive_and_ordered() {
        let text = "Gun seen at the bank gate. Officers arrived. The suspect ran. \
                    A gun was recovered. The bank closed.";
        let s = summarize(text, SummaryTarget::Ratio(0.5), &sw()).unwrap();
        for sentence in &s.sentences {
            assert!(text.contains(sentence.as_str()));
        }
        for w in s.selected.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn non_latin_text_segments_on_punctuation() {
        let doc = segment("මෙය පරීක්ෂණයකි. තවත් වාක්‍යයක්.").unwrap();
        assert_eq!(doc.sentences.len(), 2);
        assert!(!doc.sentences[0].tokens.is_empty());
    }
}
