//! Test-only oracles and synthetic fixtures. The oracles deliberately avoid
//! the library's scoring code paths.
#![allow(dead_code)]

use alqs::corpus::{Corpus, Document, LabeledExample, Provenance};
use alqs::diversity::EmbeddingStore;
use alqs::generation::{GenerationBundle, GenerationRecord, ScoringMode};
use alqs::metrics::TokenSeq;
use alqs::rng::ExperimentRng;

pub fn uniform(rng: &mut ExperimentRng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn seq(tokens: &[&str]) -> TokenSeq {
    TokenSeq::from_tokens(tokens.iter().copied())
}

// ---------------------------------------------------------------------------
// n-gram oracles

fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n)
        .map(|i| tokens[i..i + n].to_vec())
        .collect()
}

/// Clipped overlap by consuming matching reference n-grams one at a time.
pub fn brute_overlap(cand: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let c = ngrams(cand, n);
    let mut pool = ngrams(reference, n);
    let ref_total = pool.len();
    let mut overlap = 0;
    for g in &c {
        if let Some(pos) = pool.iter().position(|r| r == g) {
            pool.remove(pos);
            overlap += 1;
        }
    }
    (overlap, c.len(), ref_total)
}

/// (P, R, F) of ROUGE-N by brute force.
pub fn brute_rouge_n(cand: &[String], reference: &[String], n: usize) -> (f64, f64, f64) {
    let (o, ct, rt) = brute_overlap(cand, reference, n);
    if ct == 0 || rt == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = o as f64 / ct as f64;
    let r = o as f64 / rt as f64;
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// Unsmoothed BLEU-4 written out as an explicit product of precisions.
pub fn brute_bleu(cand: &[String], reference: &[String]) -> f64 {
    let mut product = 1.0;
    for n in 1..=4 {
        let (o, ct, _) = brute_overlap(cand, reference, n);
        if ct == 0 || o == 0 {
            return 0.0;
        }
        product *= o as f64 / ct as f64;
    }
    let bp = if cand.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / cand.len() as f64).exp()
    };
    bp * product.powf(0.25)
}

/// Double loop over ordered pairs i != j.
pub fn brute_bleuvar(passes: &[TokenSeq]) -> f64 {
    let m = passes.len();
    let mut terms = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                terms.push((1.0 - brute_bleu(&passes[i], &passes[j])).powi(2));
            }
        }
    }
    terms.iter().sum::<f64>() / terms.len() as f64
}

// ---------------------------------------------------------------------------
// IDDS oracle

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// IDDS with dot similarity and average aggregation, by explicit loops.
pub fn brute_idds(x: &[f64], pool: &[Vec<f64>], labeled: &[Vec<f64>], lambda: f64) -> f64 {
    let mut pool_sum = 0.0;
    for u in pool {
        pool_sum += dot(x, u);
    }
    let mut lab_term = 0.0;
    if !labeled.is_empty() {
        let mut s = 0.0;
        for l in labeled {
            s += dot(x, l);
        }
        lab_term = s / labeled.len() as f64;
    }
    lambda * pool_sum / pool.len() as f64 - (1.0 - lambda) * lab_term
}

/// Mean of dot products with every pool vector.
pub fn brute_mean_dot(x: &[f64], pool: &[Vec<f64>]) -> f64 {
    pool.iter().map(|u| dot(x, u)).sum::<f64>() / pool.len() as f64
}

// ---------------------------------------------------------------------------
// synthetic data

pub fn random_store(n: usize, dim: usize, seed: u64) -> (Vec<String>, EmbeddingStore) {
    let mut rng = ExperimentRng::seed_from_u64(seed);
    let mut store = EmbeddingStore::new(dim).unwrap();
    let ids: Vec<String> = (0..n).map(|i| format!("e{i:04}")).collect();
    for id in &ids {
        let v = (0..dim).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
        store.insert(id.clone(), v).unwrap();
    }
    (ids, store)
}

fn random_words(rng: &mut ExperimentRng, vocab: usize, len: usize) -> String {
    (0..len)
        .map(|_| format!("w{}", rng.below(vocab as u64)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub struct SyntheticPool {
    pub corpus: Corpus,
    pub test: Corpus,
    pub store: EmbeddingStore,
}

/// `n` distinct documents with distinct random gold summaries, a 20-doc
/// test set and 16-dim embeddings for the pool.
pub fn synthetic_pool(n: usize, seed: u64) -> SyntheticPool {
    let mut rng = ExperimentRng::seed_from_u64(seed);
    let make = |prefix: &str, count: usize, rng: &mut ExperimentRng| {
        Corpus::from_examples(
            prefix,
            (0..count).map(|i| {
                let doc_len = 12 + rng.below(20) as usize;
                let sum_len = 6 + rng.below(5) as usize;
                let text = random_words(rng, 400, doc_len);
                let summary = random_words(rng, 400, sum_len);
                LabeledExample::new(
                    Document::new(format!("{prefix}{i:04}"), text).unwrap(),
                    summary,
                    Provenance::Gold,
                )
            }),
        )
        .unwrap()
    };
    let corpus = make("d", n, &mut rng);
    let test = make("t", 20, &mut rng);
    let mut store = EmbeddingStore::new(16).unwrap();
    for id in corpus.ids() {
        let v = (0..16).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
        store.insert(id, v).unwrap();
    }
    SyntheticPool { corpus, test, store }
}

pub fn record(doc_id: &str, pass: usize, tokens: &[&str], p: f64) -> GenerationRecord {
    GenerationRecord {
        doc_id: doc_id.into(),
        pass_index: pass,
        tokens: seq(tokens),
        token_logprobs: vec![p.ln(); tokens.len()],
    }
}

/// Bundle with the given greedy sequence probability and no stochastic passes.
pub fn greedy_only(doc_id: &str, p: f64) -> GenerationBundle {
    GenerationBundle::new(
        record(doc_id, 0, &["x", "y"], p),
        Vec::new(),
        ScoringMode::PerPass,
    )
    .unwrap()
}
