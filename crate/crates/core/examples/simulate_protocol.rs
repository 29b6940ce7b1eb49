// The full active learning emulation on a synthetic corpus.
//
// The summarizer is a nearest-neighbour stand-in that "trains" in
// `prepare` by memorizing the labeled set: it answers with the summary of
// the most similar labeled document, with confidence equal to that
// similarity. Each strategy runs for three seeds and the per-iteration
// mean and spread of ROUGE on the held-out set are printed.

use alqs::alsim::{aggregate_runs, render_table, run_simulation, ALConfig};
use alqs::corpus::{Corpus, Document, LabeledExample, Provenance};
use alqs::diversity::EmbeddingStore;
use alqs::generation::{fnv1a64, GenerationBundle, GenerationRecord, ScoringMode, SummaryGenerator};
use alqs::metrics::{rouge_n, tokenize, TokenSeq};
use alqs::rng::ExperimentRng;
use alqs::Strategy;

const TOPICS: [(&str, &[&str]); 4] = [
    (
        "markets",
        &[
            "shares",
            "earnings",
            "quarter",
            "investors",
            "growth",
            "profit",
            "bank",
            "rates",
        ],
    ),
    (
        "weather",
        &[
            "storm", "rain", "flooding", "coast", "winds", "forecast", "heat", "snow",
        ],
    ),
    (
        "sport",
        &[
            "match", "goal", "season", "coach", "league", "injury", "final", "score",
        ],
    ),
    (
        "health",
        &[
            "vaccine", "trial", "patients", "dose", "clinic", "results", "study", "virus",
        ],
    ),
];

fn synthetic(prefix: &str, n: usize, seed: u64) -> alqs::Result<Corpus> {
    let mut rng = ExperimentRng::seed_from_u64(seed);
    let mut examples = Vec::new();
    for i in 0..n {
        let (name, words) = TOPICS[rng.below(TOPICS.len() as u64) as usize];
        let body: Vec<&str> = (0..12)
            .map(|_| words[rng.below(words.len() as u64) as usize])
            .collect();
        let text = format!("{name} report {} {}", i, body.join(" "));
        let summary = format!("{name} {} {}", body[0], body[1]);
        examples.push(LabeledExample::new(
            Document::new(format!("{prefix}{i:03}"), text)?,
            summary,
            Provenance::Gold,
        ));
    }
    Corpus::from_examples(prefix, examples)
}

fn embed(corpus: &Corpus) -> alqs::Result<EmbeddingStore> {
    let mut store = EmbeddingStore::new(16)?;
    for ex in corpus.iter() {
        let mut v = vec![0.0; 16];
        for t in ex.doc.tokens().iter() {
            v[(fnv1a64(t.as_bytes()) % 16) as usize] += 1.0;
        }
        store.insert(ex.doc.id.clone(), v)?;
    }
    Ok(store)
}

#[derive(Default)]
struct NearestNeighbour {
    memory: Vec<(TokenSeq, TokenSeq)>,
}

impl NearestNeighbour {
    /// Labeled summaries ranked by unigram similarity of their documents.
    fn ranked(&self, doc: &Document) -> Vec<(f64, TokenSeq)> {
        let tokens = doc.tokens();
        let mut out: Vec<(f64, TokenSeq)> = self
            .memory
            .iter()
            .map(|(d, s)| (rouge_n(&tokens, d, 1).f1, s.clone()))
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }
}

fn record(doc_id: &str, pass_index: usize, tokens: TokenSeq, confidence: f64) -> GenerationRecord {
    let lp = confidence.clamp(0.01, 1.0).ln();
    GenerationRecord {
        doc_id: doc_id.into(),
        pass_index,
        token_logprobs: vec![lp; tokens.len()],
        tokens,
    }
}

impl SummaryGenerator for NearestNeighbour {
    fn generate(&self, doc: &Document, passes: usize) -> alqs::Result<GenerationBundle> {
        let ranked = self.ranked(doc);
        let fallback = (0.01, TokenSeq::from_tokens(doc.tokens().iter().take(3).cloned()));
        let pick = |k: usize| ranked.get(k).cloned().unwrap_or_else(|| fallback.clone());
        let (conf, greedy) = pick(0);
        // stochastic pass j answers with one of the top three neighbours
        let stochastic = (1..=passes)
            .map(|j| {
                let (c, s) = pick(j % 3);
                record(&doc.id, j, s, c)
            })
            .collect();
        GenerationBundle::new(record(&doc.id, 0, greedy, conf), stochastic, ScoringMode::PerPass)
    }

    fn prepare(&mut self, _iteration: usize, _labeled: &[String], training: &Corpus) -> alqs::Result<()> {
        self.memory = training
            .iter()
            .map(|ex| (ex.doc.tokens(), tokenize(&ex.summary)))
            .collect();
        Ok(())
    }
}

pub fn run_example() -> alqs::Result<()> {
    let pool = synthetic("p", 150, 1)?;
    let test = synthetic("t", 30, 2)?;
    let store = embed(&pool)?;

    for strategy in [Strategy::Random, Strategy::Nsp, Strategy::Bleuvar, Strategy::Idds] {
        let reports = (0..3)
            .map(|seed| {
                let cfg = ALConfig {
                    strategy,
                    query_size: 4,
                    iterations: 4,
                    m_passes: 5,
                    rng_seed: seed,
                    ..Default::default()
                };
                run_simulation(&pool, &test, Some(&store), &mut NearestNeighbour::default(), &cfg)
            })
            .collect::<alqs::Result<Vec<_>>>()?;
        println!(
            "== {strategy}: first batch {:?}",
            reports[0].iterations[0].query_ids
        );
        print!("{}", render_table(&aggregate_runs(&reports)?));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> alqs::Result<()> {
    run_example()
}
