//! Tokenization and reference-based text metrics.
//!
//! All scores are sentence-level and single-reference. ROUGE uses no
//! stemming or stopword removal. BLEU is the plain geometric mean of
//! modified 1..4-gram precisions times the brevity penalty; the smoothed
//! variant replaces zero-match precisions with `1 / (2 * total)`.

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

const MAX_BLEU_ORDER: usize = 4;

/// A lowercased token sequence produced by [`tokenize`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Wraps tokens as-is. Callers are responsible for the no-empty-token
    /// invariant; empty strings are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

/// Precision, recall and balanced F-score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }

    pub fn zero() -> Self {
        Prf::new(0.0, 0.0)
    }
}

/// Lowercases, splits on Unicode whitespace and trims non-alphanumeric
/// characters from both ends of every token. A token made only of
/// punctuation is kept whole.
pub fn tokenize(text: &str) -> TokenSeq {
    let tokens = text
        .split_whitespace()
        .map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            let kept = if trimmed.is_empty() { raw } else { trimmed };
            kept.to_lowercase()
        })
        .collect();
    TokenSeq(tokens)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn ngram_total(len: usize, n: usize) -> usize {
    (len + 1).saturating_sub(n)
}

/// Clipped n-gram match count between candidate and reference.
fn clipped_overlap(candidate: &[String], reference: &[String], n: usize) -> usize {
    let cand = ngram_counts(candidate, n);
    if cand.is_empty() {
        return 0;
    }
    let refs = ngram_counts(reference, n);
    cand.iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum()
}

/// ROUGE-N. Panics if `n == 0`.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Prf {
    assert!(n >= 1, "rouge_n requires n >= 1");
    let cand_total = ngram_total(candidate.len(), n);
    let ref_total = ngram_total(reference.len(), n);
    if cand_total == 0 || ref_total == 0 {
        return Prf::zero();
    }
    let overlap = clipped_overlap(candidate, reference, n) as f64;
    Prf::new(overlap / cand_total as f64, overlap / ref_total as f64)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[short.len()]
}

/// Sentence-level ROUGE-L with beta = 1.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Prf {
    if candidate.is_empty() || reference.is_empty() {
        return Prf::zero();
    }
    let lcs = lcs_len(candidate, reference) as f64;
    Prf::new(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 {
        return 0.0;
    }
    (1.0 - ref_len as f64 / cand_len as f64).exp().min(1.0)
}

/// Unsmoothed BLEU-4. Any order with zero matches (including candidates
/// shorter than four tokens) makes the score zero.
pub fn bleu(candidate: &[String], reference: &[String]) -> f64 {
    let mut log_sum = 0.0;
    for n in 1..=MAX_BLEU_ORDER {
        let total = ngram_total(candidate.len(), n);
        let matches = clipped_overlap(candidate, reference, n);
        if total == 0 || matches == 0 {
            return 0.0;
        }
        log_sum += (matches as f64 / total as f64).ln();
    }
    brevity_penalty(candidate.len(), reference.len()) * (log_sum / MAX_BLEU_ORDER as f64).exp()
}

/// BLEU-4 with add-half smoothing of zero-match orders. Orders for which
/// the candidate has no n-grams at all are left out of the geometric mean.
pub fn sacrebleu(candidate: &[String], reference: &[String]) -> f64 {
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=MAX_BLEU_ORDER {
        let total = ngram_total(candidate.len(), n);
        if total == 0 {
            continue;
        }
        let matches = clipped_overlap(candidate, reference, n);
        let precision = if matches == 0 {
            1.0 / (2.0 * total as f64)
        } else {
            matches as f64 / total as f64
        };
        log_sum += precision.ln();
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    brevity_penalty(candidate.len(), reference.len()) * (log_sum / orders as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> TokenSeq {
        tokenize(s)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(&*toks("The cat sat."), ["the", "cat", "sat"]);
        assert!(toks("").is_empty());
        assert_eq!(&*toks("A--b"), ["a--b"]);
        assert_eq!(&*toks("wait -- what?!"), ["wait", "--", "what"]);
        assert_eq!(&*toks("  A \t b\n"), ["a", "b"]);
    }

    #[test]
    fn rouge_fixtures() {
        let r = rouge_n(&toks("the cat"), &toks("the cat sat"), 1);
        assert_eq!(r.precision, 1.0);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1 - 0.8).abs() < 1e-15);

        let l = rouge_l(&toks("the dog"), &toks("the cat"));
        assert_eq!(l.f1, 0.5);

        let same = toks("a b c d");
        for n in 1..=4 {
            assert_eq!(rouge_n(&same, &same, n).f1, 1.0);
        }
        assert_eq!(rouge_l(&same, &same).f1, 1.0);
        assert_eq!(rouge_n(&toks("a"), &toks("b"), 1).f1, 0.0);
        assert_eq!(rouge_l(&toks(""), &same).f1, 0.0);
    }

    #[test]
    fn rouge_n_clips_repeated_ngrams() {
        let r = rouge_n(&toks("a a a"), &toks("a b"), 1);
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.recall, 0.5);
    }

    #[test]
    fn bleu_zero_for_short_candidates() {
        assert_eq!(bleu(&toks("a b c"), &toks("a b c")), 0.0);
        assert_eq!(sacrebleu(&toks("a b c"), &toks("a b c")), 1.0);
    }

    #[test]
    fn bleu_hand_tally() {
        // p1 = 3/4, p2 = 2/3, p3 = 1/2, p4 = 0/1
        let c = toks("a b c d");
        let r = toks("a b c e");
        assert_eq!(bleu(&c, &r), 0.0);
        // p4 smoothed to 1/2
        let expected = (0.75f64 * (2.0 / 3.0) * 0.5 * 0.5).powf(0.25);
        assert!((sacrebleu(&c, &r) - expected).abs() < 1e-15);
    }

    #[test]
    fn bleu_identity_and_asymmetry() {
        let s = toks("one two three four five");
        assert!((bleu(&s, &s) - 1.0).abs() < 1e-15);
        let short = toks("one two three four");
        // candidate shorter than reference pays the brevity penalty
        let a = bleu(&short, &s);
        let b = bleu(&s, &short);
        assert!((a - (-0.25f64).exp()).abs() < 1e-12);
        // p = 4/5, 3/4, 2/3, 1/2 and no penalty
        assert!((b - 0.2f64.powf(0.25)).abs() < 1e-12);
        assert_ne!(a, b);
    }

    #[test]
    fn smoothed_disjoint_below_overlapping() {
        let disjoint = sacrebleu(&toks("a b c"), &toks("x y z"));
        let partial = sacrebleu(&toks("a b c"), &toks("a y z"));
        assert!(disjoint > 0.0);
        assert!(disjoint < partial);
    }

    #[test]
    fn lcs_handles_either_order() {
        let a = toks("a b c d e");
        let b = toks("b d e");
        assert_eq!(lcs_len(&a, &b), 3);
        assert_eq!(lcs_len(&b, &a), 3);
    }
}
