//! Pool-based active learning emulation.
//!
//! Each iteration draws a candidate set from the unlabeled pool, scores it
//! with the configured strategy, moves the top `query_size` documents (with
//! their gold summaries) into the labeled set, lets the generator retrain
//! through [`SummaryGenerator::prepare`] and evaluates it on a held-out
//! test set.
//!
//! All randomness comes from one [`ExperimentRng`] stream seeded with
//! `rng_seed`, consumed in this order: the seeding draw, then per iteration
//! the candidate subset draw (only when subsetting is active) and the
//! shuffle of the random strategy.

mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{aggregate_runs, render_csv, render_table, AggregateIteration, AggregateReport, MeanStd};

use crate::corpus::{deduplicate, Corpus};
use crate::diversity::{idds_scores, mmr_scores, EmbeddingStore, IddsConfig, MmrConfig};
use crate::error::{Error, Result};
use crate::generation::{GenerationBundle, SummaryGenerator};
use crate::metrics::{rouge_l, rouge_n, tokenize};
use crate::rng::ExperimentRng;
use crate::selflearn::{augment, filter_pseudo, PseudoExample, SelfLearnConfig};
use crate::uncertainty::{nsp, score_bundle, score_pool, AcquisitionScore, Strategy};

/// ROUGE-1 F above which two gold summaries count as partly overlapping.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.66;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "rouge1")]
    Rouge1,
    #[serde(rename = "rouge2")]
    Rouge2,
    #[serde(rename = "rougeL")]
    RougeL,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rouge1, Metric::Rouge2, Metric::RougeL];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rouge1 => "rouge1",
            Metric::Rouge2 => "rouge2",
            Metric::RougeL => "rougeL",
        }
    }

    /// F-score of `candidate` against `reference`.
    pub fn score(self, candidate: &[String], reference: &[String]) -> f64 {
        match self {
            Metric::Rouge1 => rouge_n(candidate, reference, 1).f1,
            Metric::Rouge2 => rouge_n(candidate, reference, 2).f1,
            Metric::RougeL => rouge_l(candidate, reference).f1,
        }
    }
}

fn all_metrics() -> BTreeSet<Metric> {
    Metric::ALL.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ALConfig {
    pub strategy: Strategy,
    pub query_size: usize,
    pub iterations: usize,
    /// Defaults to `query_size`.
    pub seed_size: Option<usize>,
    pub subset_size: Option<usize>,
    pub rng_seed: u64,
    pub m_passes: usize,
    pub idds: IddsConfig,
    pub mmr: MmrConfig,
    pub selflearn: Option<SelfLearnConfig>,
    pub eval_metrics: BTreeSet<Metric>,
    pub overlap_threshold: f64,
    /// Adds wall-clock phase timings to the report, which then stops being
    /// byte-reproducible.
    pub record_timings: bool,
}

impl Default for ALConfig {
    fn default() -> Self {
        ALConfig {
            strategy: Strategy::Random,
            query_size: 10,
            iterations: 10,
            seed_size: None,
            subset_size: None,
            rng_seed: 0,
            m_passes: 10,
            idds: IddsConfig::default(),
            mmr: MmrConfig::default(),
            selflearn: None,
            eval_metrics: all_metrics(),
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            record_timings: false,
        }
    }
}

impl ALConfig {
    pub fn seed_size(&self) -> usize {
        self.seed_size.unwrap_or(self.query_size)
    }

    /// Stochastic passes requested from the generator for scoring.
    pub fn passes_for_scoring(&self) -> usize {
        match self.strategy {
            Strategy::Mmr => self.mmr.uncertainty.passes_to_request(self.m_passes),
            s => s.passes_to_request(self.m_passes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.query_size == 0 {
            return Err(Error::Config("query_size must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if let Some(s) = self.subset_size {
            if s < self.query_size {
                return Err(Error::Config(format!(
                    "subset_size {s} is smaller than query_size {}",
                    self.query_size
                )));
            }
        }
        let needed = match self.strategy {
            Strategy::Mmr => self.mmr.uncertainty.min_passes(),
            s => s.min_passes(),
        };
        if self.m_passes < needed {
            return Err(Error::Config(format!(
                "strategy {} needs m_passes >= {needed}, got {}",
                self.strategy, self.m_passes
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(Error::Config("overlap_threshold must be in [0, 1]".into()));
        }
        self.idds.validate()?;
        self.mmr.validate()?;
        if let Some(sl) = &self.selflearn {
            sl.validate()?;
        }
        Ok(())
    }
}

/// Labeled and unlabeled id sets. Unlabeled ids stay in pool order; labeled
/// ids are in the order they were added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ALState {
    pub labeled_ids: Vec<String>,
    pub unlabeled_ids: Vec<String>,
    pub iteration: usize,
}

impl ALState {
    pub fn new(pool: &[String]) -> Self {
        ALState {
            labeled_ids: Vec::new(),
            unlabeled_ids: pool.to_vec(),
            iteration: 0,
        }
    }

    /// Moves `ids` from the unlabeled to the labeled set.
    pub fn label(&mut self, ids: &[String]) -> Result<()> {
        let moving: HashSet<&String> = ids.iter().collect();
        let before = self.unlabeled_ids.len();
        self.unlabeled_ids.retain(|id| !moving.contains(id));
        if before - self.unlabeled_ids.len() != moving.len() || moving.len() != ids.len() {
            return Err(Error::Validation(
                "queried ids must be distinct members of the unlabeled pool".into(),
            ));
        }
        self.labeled_ids.extend(ids.iter().cloned());
        Ok(())
    }
}

/// Random seeding set for model-based strategies; IDDS starts empty.
pub fn seed_labeled(pool: &[String], cfg: &ALConfig, rng: &mut ExperimentRng) -> Result<ALState> {
    if pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    let mut state = ALState::new(pool);
    if cfg.strategy == Strategy::Idds {
        return Ok(state);
    }
    let k = cfg.seed_size();
    if k > pool.len() {
        return Err(Error::Config(format!(
            "seed_size {k} exceeds pool size {}",
            pool.len()
        )));
    }
    let seed = rng.sample(pool, k);
    state.label(&seed)?;
    Ok(state)
}

/// Candidates for this iteration, in pool order. Draws from `rng` only when
/// the pool is larger than `subset_size`.
pub fn candidate_subset(state: &ALState, cfg: &ALConfig, rng: &mut ExperimentRng) -> Vec<String> {
    match cfg.subset_size {
        Some(size) if size < state.unlabeled_ids.len() => {
            let chosen: HashSet<String> = rng.sample(&state.unlabeled_ids, size).into_iter().collect();
            state
                .unlabeled_ids
                .iter()
                .filter(|id| chosen.contains(*id))
                .cloned()
                .collect()
        }
        _ => state.unlabeled_ids.clone(),
    }
}

/// The `k` highest-scoring ids; ties go to the smaller doc id.
pub fn select_query(scores: &[AcquisitionScore], k: usize) -> Vec<String> {
    let mut ranked: Vec<&AcquisitionScore> = scores.iter().collect();
    ranked.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.doc_id.cmp(&b.doc_id)));
    ranked.into_iter().take(k).map(|s| s.doc_id.clone()).collect()
}

/// Percentages of the batch taking part in at least one fully (identical
/// tokens) or partly (ROUGE-1 F above `threshold`) overlapping pair of gold
/// summaries.
pub fn batch_overlap(query_ids: &[String], corpus: &Corpus, threshold: f64) -> Result<(f64, f64)> {
    let summaries = query_ids
        .iter()
        .map(|id| {
            let ex = corpus
                .get(id)
                .ok_or_else(|| Error::UnknownId { id: id.clone() })?;
            if !ex.has_summary() {
                return Err(Error::Validation(format!("\"{id}\" has no gold summary")));
            }
            Ok(tokenize(&ex.summary))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = summaries.len();
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let mut full = vec![false; n];
    let mut partial = vec![false; n];
    for i in 0..n {
        for j in i + 1..n {
            if summaries[i] == summaries[j] {
                full[i] = true;
                full[j] = true;
            } else if rouge_n(&summaries[i], &summaries[j], 1).f1 > threshold {
                partial[i] = true;
                partial[j] = true;
            }
        }
    }
    let pct = |flags: &[bool]| 100.0 * flags.iter().filter(|f| **f).count() as f64 / n as f64;
    Ok((pct(&full), pct(&partial)))
}

/// Mean F-score of greedy summaries against gold, per metric.
pub fn evaluate(
    generator: &dyn SummaryGenerator,
    test: &Corpus,
    metrics: &BTreeSet<Metric>,
) -> Result<BTreeMap<Metric, f64>> {
    if metrics.is_empty() {
        return Ok(BTreeMap::new());
    }
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let per_doc: Vec<Vec<f64>> = test
        .examples()
        .par_iter()
        .map(|ex| {
            let hyp = generator.greedy(&ex.doc).map_err(|e| Error::in_doc(ex.id(), e))?;
            let gold = tokenize(&ex.summary);
            Ok(metrics.iter().map(|m| m.score(&hyp.tokens, &gold)).collect())
        })
        .collect::<Result<_>>()?;
    let n = per_doc.len() as f64;
    Ok(metrics
        .iter()
        .enumerate()
        .map(|(i, m)| (*m, per_doc.iter().map(|row| row[i]).sum::<f64>() / n))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub query_ids: Vec<String>,
    pub labeled_count: usize,
    pub metrics: BTreeMap<Metric, f64>,
    pub overlap_full_pct: f64,
    pub overlap_partial_pct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_kept: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub scoring: f64,
    pub selection: f64,
    pub selflearn: f64,
    pub evaluation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ALConfig,
    pub pool_size: usize,
    pub iterations: Vec<IterationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<PhaseTimes>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn bundles_for(
    generator: &dyn SummaryGenerator,
    pool: &Corpus,
    ids: &[String],
    passes: usize,
) -> Result<Vec<GenerationBundle>> {
    ids.par_iter()
        .map(|id| {
            let ex = pool.get(id).ok_or_else(|| Error::UnknownId { id: id.clone() })?;
            generator
                .generate(&ex.doc, passes)
                .map_err(|e| Error::in_doc(id, e))
        })
        .collect()
}

fn labeled_corpus(pool: &Corpus, ids: &[String]) -> Result<Corpus> {
    Corpus::from_examples(
        format!("{}-labeled", pool.name),
        ids.iter()
            .map(|id| pool.get(id).expect("labeled ids come from the pool").clone()),
    )
}

struct Scorer<'a> {
    pool: &'a Corpus,
    initial_pool: &'a [String],
    store: Option<&'a EmbeddingStore>,
    cfg: &'a ALConfig,
}

impl Scorer<'_> {
    fn store(&self) -> Result<&EmbeddingStore> {
        self.store.ok_or_else(|| {
            Error::Config(format!(
                "strategy {} needs document embeddings",
                self.cfg.strategy
            ))
        })
    }

    fn score(
        &self,
        generator: &dyn SummaryGenerator,
        state: &ALState,
        candidates: &[String],
        rng: &mut ExperimentRng,
    ) -> Result<Vec<AcquisitionScore>> {
        let cfg = self.cfg;
        match cfg.strategy {
            Strategy::Random => {
                let mut order = candidates.to_vec();
                rng.shuffle(&mut order);
                let n = order.len();
                Ok(order
                    .into_iter()
                    .enumerate()
                    .map(|(pos, doc_id)| AcquisitionScore {
                        doc_id,
                        strategy: Strategy::Random,
                        value: (n - pos) as f64,
                    })
                    .collect())
            }
            Strategy::Idds => {
                let pool_ids = if cfg.idds.freeze_pool {
                    self.initial_pool
                } else {
                    candidates
                };
                if candidates.is_empty() {
                    return Ok(Vec::new());
                }
                idds_scores(candidates, pool_ids, &state.labeled_ids, self.store()?, &cfg.idds)
            }
            Strategy::Mmr => {
                let bundles = bundles_for(generator, self.pool, candidates, cfg.passes_for_scoring())?;
                let uncertainty = bundles
                    .iter()
                    .map(|b| {
                        score_bundle(cfg.mmr.uncertainty, b)
                            .map(|v| (b.doc_id.clone(), v))
                            .map_err(|e| Error::in_doc(&b.doc_id, e))
                    })
                    .collect::<Result<HashMap<_, _>>>()?;
                mmr_scores(
                    candidates,
                    &state.labeled_ids,
                    self.store()?,
                    &uncertainty,
                    &cfg.mmr,
                )
            }
            s => {
                let bundles = bundles_for(generator, self.pool, candidates, cfg.passes_for_scoring())?;
                score_pool(s, &bundles)
            }
        }
    }
}

fn pseudo_label(
    generator: &dyn SummaryGenerator,
    pool: &Corpus,
    unlabeled: &[String],
) -> Result<Vec<PseudoExample>> {
    unlabeled
        .par_iter()
        .map(|id| {
            let ex = pool.get(id).ok_or_else(|| Error::UnknownId { id: id.clone() })?;
            let bundle = generator.generate(&ex.doc, 0).map_err(|e| Error::in_doc(id, e))?;
            let nsp_score = nsp(&bundle).map_err(|e| Error::in_doc(id, e))?;
            Ok(PseudoExample {
                doc_id: id.clone(),
                summary_tokens: bundle.greedy.tokens,
                nsp_score,
            })
        })
        .collect()
}

/// Runs the full emulation loop.
///
/// The pool is deduplicated first and must carry gold summaries. The
/// generator's `prepare` hook is called once with iteration 0 for the
/// seeding set, then once per iteration after the queried documents have
/// been labeled (and pseudo-labeled examples appended when self-learning is
/// configured). Pseudo-labels come from the model prepared on the previous
/// iteration's labeled set.
pub fn run_simulation(
    corpus: &Corpus,
    test: &Corpus,
    store: Option<&EmbeddingStore>,
    generator: &mut dyn SummaryGenerator,
    cfg: &ALConfig,
) -> Result<RunReport> {
    cfg.validate()?;
    let pool = deduplicate(corpus);
    pool.require_summaries()?;
    if !cfg.eval_metrics.is_empty() {
        test.require_summaries()?;
    }
    let pool_ids = pool.ids();
    if matches!(cfg.strategy, Strategy::Idds | Strategy::Mmr) {
        let store = store
            .ok_or_else(|| Error::Config(format!("strategy {} needs document embeddings", cfg.strategy)))?;
        if let Some(id) = store.first_missing(&pool_ids) {
            return Err(Error::MissingEmbedding { id: id.clone() });
        }
    }

    let mut rng = ExperimentRng::seed_from_u64(cfg.rng_seed);
    let mut state = seed_labeled(&pool_ids, cfg, &mut rng)?;
    let scorer = Scorer {
        pool: &pool,
        initial_pool: &pool_ids,
        store,
        cfg,
    };
    let mut times = PhaseTimes::default();
    let clock = |slot: &mut f64, start: Instant| {
        if cfg.record_timings {
            *slot += start.elapsed().as_secs_f64();
        }
    };

    generator.prepare(0, &state.labeled_ids, &labeled_corpus(&pool, &state.labeled_ids)?)?;

    let mut iterations = Vec::with_capacity(cfg.iterations);
    for t in 1..=cfg.iterations {
        state.iteration = t;

        let start = Instant::now();
        let candidates = candidate_subset(&state, cfg, &mut rng);
        let scores = scorer.score(&*generator, &state, &candidates, &mut rng)?;
        clock(&mut times.scoring, start);

        let start = Instant::now();
        let query = select_query(&scores, cfg.query_size);
        state.label(&query)?;
        let (full, partial) = batch_overlap(&query, &pool, cfg.overlap_threshold)?;
        clock(&mut times.selection, start);

        let start = Instant::now();
        let gold = labeled_corpus(&pool, &state.labeled_ids)?;
        let (training, pseudo_kept) = match &cfg.selflearn {
            Some(sl) => {
                let pseudo = pseudo_label(&*generator, &pool, &state.unlabeled_ids)?;
                let kept = filter_pseudo(&pseudo, sl);
                (augment(&gold, &kept, &pool)?, Some(kept.len()))
            }
            None => (gold, None),
        };
        generator.prepare(t, &state.labeled_ids, &training)?;
        clock(&mut times.selflearn, start);

        let start = Instant::now();
        let metrics = evaluate(&*generator, test, &cfg.eval_metrics)?;
        clock(&mut times.evaluation, start);

        iterations.push(IterationReport {
            iteration: t,
            query_ids: query,
            labeled_count: state.labeled_ids.len(),
            metrics,
            overlap_full_pct: full,
            overlap_partial_pct: partial,
            pseudo_kept,
        });
    }

    Ok(RunReport {
        config: cfg.clone(),
        pool_size: pool.len(),
        iterations,
        wall_time_s: cfg.record_timings.then_some(times),
    })
}
