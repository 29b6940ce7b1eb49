//! Pseudo-labeling with NSP percentile filtering.
//!
//! Model-generated summaries for unlabeled documents are ranked by NSP; the
//! lowest `k_l` percent and the highest `k_h` percent are discarded and the
//! remainder is appended to the labeled set.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabeledExample, Provenance};
use crate::error::{Error, Result};
use crate::metrics::{tokenize, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfLearnConfig {
    pub k_l: f64,
    pub k_h: f64,
}

impl Default for SelfLearnConfig {
    fn default() -> Self {
        SelfLearnConfig { k_l: 10.0, k_h: 1.0 }
    }
}

impl SelfLearnConfig {
    pub fn new(k_l: f64, k_h: f64) -> Result<Self> {
        let cfg = SelfLearnConfig { k_l, k_h };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |p: f64| (0.0..=100.0).contains(&p);
        if !in_range(self.k_l) || !in_range(self.k_h) {
            return Err(Error::Config(format!(
                "k_l and k_h must be percentages in [0, 100], got {} and {}",
                self.k_l, self.k_h
            )));
        }
        if self.k_l + self.k_h >= 100.0 {
            return Err(Error::Config(format!(
                "k_l + k_h must be below 100, got {}",
                self.k_l + self.k_h
            )));
        }
        Ok(())
    }

    /// Number of items dropped at the low and high ends of `n` items.
    pub fn drop_counts(&self, n: usize) -> (usize, usize) {
        let count = |pct: f64| ((n as f64 * pct) / 100.0).floor() as usize;
        (count(self.k_l), count(self.k_h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoExample {
    pub doc_id: String,
    pub summary_tokens: TokenSeq,
    pub nsp_score: f64,
}

#[derive(Debug, Deserialize)]
struct PseudoLine {
    doc_id: String,
    summary: String,
    nsp: f64,
}

pub fn read_pseudo(reader: impl BufRead) -> Result<Vec<PseudoExample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if crate::generation::skip_line(&line) {
            continue;
        }
        let rec: PseudoLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if !rec.nsp.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: "nsp must be finite".into(),
            });
        }
        out.push(PseudoExample {
            doc_id: rec.doc_id,
            summary_tokens: tokenize(&rec.summary),
            nsp_score: rec.nsp,
        });
    }
    Ok(out)
}

pub fn load_pseudo(path: impl AsRef<Path>) -> Result<Vec<PseudoExample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pseudo(BufReader::new(file))
}

/// Drops the `floor(N * k_l / 100)` lowest-NSP and `floor(N * k_h / 100)`
/// highest-NSP items (ties ordered by doc id) and returns the survivors in
/// their original order.
pub fn filter_pseudo(items: &[PseudoExample], cfg: &SelfLearnConfig) -> Vec<PseudoExample> {
    let n = items.len();
    let (low, high) = cfg.drop_counts(n);
    if low + high >= n {
        return Vec::new();
    }
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        items[a]
            .nsp_score
            .total_cmp(&items[b].nsp_score)
            .then_with(|| items[a].doc_id.cmp(&items[b].doc_id))
    });
    let mut keep = vec![false; n];
    for &i in &ranked[low..n - high] {
        keep[i] = true;
    }
    items
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(item, _)| item.clone())
        .collect()
}

/// Labeled examples followed by the kept pseudo-labeled ones. Documents are
/// taken from `source`.
pub fn augment(labeled: &Corpus, kept: &[PseudoExample], source: &Corpus) -> Result<Corpus> {
    let mut out = labeled.clone();
    for p in kept {
        if labeled.contains(&p.doc_id) {
            return Err(Error::Validation(format!(
                "pseudo-labeled \"{}\" is already in the labeled set",
                p.doc_id
            )));
        }
        let src = source
            .get(&p.doc_id)
            .ok_or_else(|| Error::UnknownId { id: p.doc_id.clone() })?;
        out.push(LabeledExample::new(
            src.doc.clone(),
            p.summary_tokens.join(),
            Provenance::Pseudo,
        ))?;
    }
    Ok(out)
}
