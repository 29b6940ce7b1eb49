//! Summary generation boundary.
//!
//! A [`GenerationBundle`] holds one greedy decode (pass 0) and `M`
//! stochastic decodes (passes `1..=M`), each with per-token log
//! probabilities. Stochastic passes stand in for Monte Carlo dropout
//! samples. Bundles come either from a replay file produced by an external
//! model or from [`ToyGenerator`], a deterministic hash-seeded test double.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::metrics::TokenSeq;

/// How the stochastic passes of a bundle were produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Every stochastic pass rescored the greedy tokens.
    RescoreGreedy,
    /// Every stochastic pass carries its own decoded sequence.
    #[default]
    PerPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub doc_id: String,
    pub pass_index: usize,
    pub tokens: TokenSeq,
    pub token_logprobs: Vec<f64>,
}

impl GenerationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::Validation(format!(
                "record {}#{} has no tokens",
                self.doc_id, self.pass_index
            )));
        }
        if self.tokens.len() != self.token_logprobs.len() {
            return Err(Error::Validation(format!(
                "record {}#{}: {} tokens but {} logprobs",
                self.doc_id,
                self.pass_index,
                self.tokens.len(),
                self.token_logprobs.len()
            )));
        }
        if let Some(bad) = self.token_logprobs.iter().find(|lp| lp.is_nan() || **lp > 0.0) {
            return Err(Error::Validation(format!(
                "record {}#{}: logprob {bad} is not <= 0",
                self.doc_id, self.pass_index
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationBundle {
    pub doc_id: String,
    pub greedy: GenerationRecord,
    pub stochastic: Vec<GenerationRecord>,
    pub scoring_mode: ScoringMode,
}

impl GenerationBundle {
    /// Builds a bundle and checks its structural invariants: pass 0 is the
    /// greedy record, stochastic passes are numbered `1..=M` in order, all
    /// records share the doc id. Rescored bundles must repeat the greedy
    /// tokens in every stochastic pass.
    pub fn new(
        greedy: GenerationRecord,
        stochastic: Vec<GenerationRecord>,
        scoring_mode: ScoringMode,
    ) -> Result<Self> {
        let bundle = GenerationBundle {
            doc_id: greedy.doc_id.clone(),
            greedy,
            stochastic,
            scoring_mode,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        if self.greedy.pass_index != 0 {
            return Err(Error::Validation(format!(
                "bundle {}: greedy record has pass_index {}",
                self.doc_id, self.greedy.pass_index
            )));
        }
        for (i, rec) in self.records().enumerate() {
            if rec.doc_id != self.doc_id {
                return Err(Error::Validation(format!(
                    "bundle {} contains a record for {}",
                    self.doc_id, rec.doc_id
                )));
            }
            if rec.pass_index != i {
                return Err(Error::Validation(format!(
                    "bundle {}: expected pass_index {i}, found {}",
                    self.doc_id, rec.pass_index
                )));
            }
            rec.validate()?;
        }
        if self.scoring_mode == ScoringMode::RescoreGreedy {
            if let Some(rec) = self.stochastic.iter().find(|r| r.tokens != self.greedy.tokens) {
                return Err(Error::Validation(format!(
                    "bundle {}: rescored pass {} differs from greedy tokens",
                    self.doc_id, rec.pass_index
                )));
            }
        }
        Ok(())
    }

    pub fn passes(&self) -> usize {
        self.stochastic.len()
    }

    /// Greedy record followed by the stochastic ones.
    pub fn records(&self) -> impl Iterator<Item = &GenerationRecord> {
        std::iter::once(&self.greedy).chain(self.stochastic.iter())
    }
}

/// A source of generation bundles.
///
/// `prepare` is the per-iteration training hook: the simulation calls it
/// with the current labeled ids and the training corpus (gold examples,
/// plus pseudo-labeled ones when self-learning is on) before the generator
/// is used for that iteration. Generators backed by fixed outputs ignore it.
pub trait SummaryGenerator: Sync {
    /// Returns a bundle with exactly `passes` stochastic records.
    fn generate(&self, doc: &Document, passes: usize) -> Result<GenerationBundle>;

    fn greedy(&self, doc: &Document) -> Result<GenerationRecord> {
        Ok(self.generate(doc, 0)?.greedy)
    }

    fn prepare(&mut self, _iteration: usize, _labeled_ids: &[String], _training: &Corpus) -> Result<()> {
        Ok(())
    }
}

impl<G: SummaryGenerator + ?Sized> SummaryGenerator for Box<G> {
    fn generate(&self, doc: &Document, passes: usize) -> Result<GenerationBundle> {
        (**self).generate(doc, passes)
    }

    fn greedy(&self, doc: &Document) -> Result<GenerationRecord> {
        (**self).greedy(doc)
    }

    fn prepare(&mut self, iteration: usize, labeled_ids: &[String], training: &Corpus) -> Result<()> {
        (**self).prepare(iteration, labeled_ids, training)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorKind {
    Replay { path: PathBuf },
    Toy { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub m_passes: usize,
}

impl GeneratorSpec {
    pub fn toy(k: usize, m_passes: usize) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Toy { k },
            m_passes,
        }
    }

    pub fn replay(path: impl Into<PathBuf>, m_passes: usize) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Replay { path: path.into() },
            m_passes,
        }
    }

    pub fn build(&self) -> Result<Box<dyn SummaryGenerator>> {
        Ok(match &self.kind {
            GeneratorKind::Replay { path } => Box::new(ReplayGenerator::load(path)?),
            GeneratorKind::Toy { k } => Box::new(ToyGenerator::new(*k)?),
        })
    }
}

/// One-shot generation from a spec. Replay specs read their file on every
/// call; build the generator once with [`GeneratorSpec::build`] for loops.
pub fn generate(spec: &GeneratorSpec, doc: &Document) -> Result<GenerationBundle> {
    spec.build()?.generate(doc, spec.m_passes)
}

// ---------------------------------------------------------------------------
// replay

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    doc_id: String,
    pass_index: usize,
    tokens: Vec<String>,
    token_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scoring_mode: Option<ScoringMode>,
}

/// Serves bundles read from a generation-record file. When more stochastic
/// passes are stored than requested, the lowest pass indices are used.
#[derive(Debug, Clone, Default)]
pub struct ReplayGenerator {
    bundles: HashMap<String, GenerationBundle>,
    order: Vec<String>,
}

impl ReplayGenerator {
    pub fn from_bundles(bundles: impl IntoIterator<Item = GenerationBundle>) -> Result<Self> {
        let mut out = ReplayGenerator::default();
        for b in bundles {
            b.validate()?;
            if out.bundles.contains_key(&b.doc_id) {
                return Err(Error::Validation(format!("duplicate bundle for {}", b.doc_id)));
            }
            out.order.push(b.doc_id.clone());
            out.bundles.insert(b.doc_id.clone(), b);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_bundles(read_bundles(BufReader::new(file))?)
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&GenerationBundle> {
        self.bundles.get(doc_id)
    }

    /// Bundles in file order.
    pub fn bundles(&self) -> impl Iterator<Item = &GenerationBundle> {
        self.order.iter().map(|id| &self.bundles[id])
    }
}

impl SummaryGenerator for ReplayGenerator {
    fn generate(&self, doc: &Document, passes: usize) -> Result<GenerationBundle> {
        let stored = self.bundles.get(&doc.id).ok_or_else(|| Error::MissingBundle {
            doc_id: doc.id.clone(),
        })?;
        if stored.passes() < passes {
            return Err(Error::PassShortfall {
                doc_id: doc.id.clone(),
                available: stored.passes(),
                requested: passes,
            });
        }
        Ok(GenerationBundle {
            doc_id: stored.doc_id.clone(),
            greedy: stored.greedy.clone(),
            stochastic: stored.stochastic[..passes].to_vec(),
            scoring_mode: stored.scoring_mode,
        })
    }

    fn greedy(&self, doc: &Document) -> Result<GenerationRecord> {
        self.bundles
            .get(&doc.id)
            .map(|b| b.greedy.clone())
            .ok_or_else(|| Error::MissingBundle {
                doc_id: doc.id.clone(),
            })
    }
}

/// Blank lines and `#` comment lines carry no records.
pub(crate) fn skip_line(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#')
}

/// Parses generation-record JSONL into validated bundles, in order of
/// each doc id's first appearance. Blank and `#` comment lines are skipped.
pub fn read_bundles(reader: impl BufRead) -> Result<Vec<GenerationBundle>> {
    struct Pending {
        records: Vec<GenerationRecord>,
        mode: Option<ScoringMode>,
        first_line: usize,
    }
    let mut pending: HashMap<String, Pending> = HashMap::new();
    let mut order = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if skip_line(&line) {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if rec.scoring_mode.is_some() && rec.pass_index != 0 {
            return Err(parse_err("scoring_mode is only allowed on pass 0".into()));
        }
        let record = GenerationRecord {
            doc_id: rec.doc_id,
            pass_index: rec.pass_index,
            tokens: TokenSeq::from_tokens(rec.tokens),
            token_logprobs: rec.token_logprobs,
        };
        record.validate().map_err(|e| parse_err(e.to_string()))?;
        let entry = pending.entry(record.doc_id.clone()).or_insert_with(|| {
            order.push(record.doc_id.clone());
            Pending {
                records: Vec::new(),
                mode: None,
                first_line: lineno,
            }
        });
        if entry.records.iter().any(|r| r.pass_index == record.pass_index) {
            return Err(parse_err(format!(
                "duplicate pass_index {} for {}",
                record.pass_index, record.doc_id
            )));
        }
        if rec.scoring_mode.is_some() {
            entry.mode = rec.scoring_mode;
        }
        entry.records.push(record);
    }

    order
        .into_iter()
        .map(|id| {
            let mut p = pending.remove(&id).expect("pending entry");
            p.records.sort_by_key(|r| r.pass_index);
            let mut records = p.records.into_iter();
            let greedy = records.next().expect("at least one record");
            GenerationBundle::new(greedy, records.collect(), p.mode.unwrap_or_default()).map_err(|e| {
                Error::Parse {
                    line: p.first_line,
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

pub fn write_bundles<'a>(
    bundles: impl IntoIterator<Item = &'a GenerationBundle>,
    mut writer: impl Write,
) -> std::io::Result<()> {
    for b in bundles {
        for rec in b.records() {
            let line = RecordLine {
                doc_id: rec.doc_id.clone(),
                pass_index: rec.pass_index,
                tokens: rec.tokens.to_vec(),
                token_logprobs: rec.token_logprobs.clone(),
                scoring_mode: (rec.pass_index == 0).then_some(b.scoring_mode),
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n")?;
        }
    }
    writer.flush()
}

pub fn save_bundles<'a>(
    bundles: impl IntoIterator<Item = &'a GenerationBundle>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_bundles(bundles, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// toy

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn position_logprob(i: usize) -> f64 {
    (1.0 - 0.05 * i as f64).max(0.05).ln()
}

/// Deterministic stand-in for a summarization model.
///
/// Pass 0 returns the first `k` document tokens. Stochastic pass `j` first
/// drops every input token at position `p` with
/// `fnv1a64("{id}:{j}:{p}") % 10 == 0`, then takes the first `k` survivors
/// and lowers every logprob by `0.05 * (fnv1a64("{id}:{j}") % 5)`. The
/// logprob of output position `i` is `ln(max(0.05, 1 - 0.05 i))` before
/// the shift. If every input token is dropped, the pass falls back to the
/// greedy tokens.
pub fn toy_generate(doc: &Document, pass_index: usize, k: usize) -> Result<GenerationRecord> {
    if k == 0 {
        return Err(Error::Config("toy generator needs k >= 1".into()));
    }
    let input = doc.tokens();
    if input.is_empty() {
        return Err(Error::Validation(format!(
            "document \"{}\" has no tokens",
            doc.id
        )));
    }

    let (tokens, shift): (Vec<String>, f64) = if pass_index == 0 {
        (input.iter().take(k).cloned().collect(), 0.0)
    } else {
        let survivors: Vec<String> = input
            .iter()
            .enumerate()
            .filter(|(p, _)| {
                !fnv1a64(format!("{}:{}:{}", doc.id, pass_index, p).as_bytes()).is_multiple_of(10)
            })
            .map(|(_, t)| t.clone())
            .take(k)
            .collect();
        let shift = 0.05 * (fnv1a64(format!("{}:{}", doc.id, pass_index).as_bytes()) % 5) as f64;
        if survivors.is_empty() {
            (input.iter().take(k).cloned().collect(), shift)
        } else {
            (survivors, shift)
        }
    };

    let token_logprobs = (0..tokens.len()).map(|i| position_logprob(i) - shift).collect();
    Ok(GenerationRecord {
        doc_id: doc.id.clone(),
        pass_index,
        tokens: TokenSeq::from_tokens(tokens),
        token_logprobs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyGenerator {
    k: usize,
}

impl ToyGenerator {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("toy generator needs k >= 1".into()));
        }
        Ok(ToyGenerator { k })
    }

    pub fn summary_len(&self) -> usize {
        self.k
    }
}

impl SummaryGenerator for ToyGenerator {
    fn generate(&self, doc: &Document, passes: usize) -> Result<GenerationBundle> {
        let greedy = toy_generate(doc, 0, self.k)?;
        let stochastic = (1..=passes)
            .map(|j| toy_generate(doc, j, self.k))
            .collect::<Result<Vec<_>>>()?;
        Ok(GenerationBundle {
            doc_id: doc.id.clone(),
            greedy,
            stochastic,
            scoring_mode: ScoringMode::PerPass,
        })
    }

    fn greedy(&self, doc: &Document) -> Result<GenerationRecord> {
        toy_generate(doc, 0, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text).unwrap()
    }

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn toy_greedy_prefix_and_logprobs() {
        let r = toy_generate(&doc("d", "a b c d"), 0, 2).unwrap();
        assert_eq!(&*r.tokens, ["a", "b"]);
        assert_eq!(r.token_logprobs, vec![1.0f64.ln(), 0.95f64.ln()]);

        let whole = toy_generate(&doc("d", "a b c"), 0, 10).unwrap();
        assert_eq!(&*whole.tokens, ["a", "b", "c"]);
    }

    #[test]
    fn toy_logprob_floor() {
        let text = (0..30).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let r = toy_generate(&doc("d", &text), 0, 30).unwrap();
        assert!((r.token_logprobs[25] - 0.05f64.ln()).abs() < 1e-15);
        assert!((r.token_logprobs[19] - 0.05f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn toy_stochastic_pass_applies_drop_rule() {
        let d = doc(
            "doc-7",
            "t0 t1 t2 t3 t4 t5 t6 t7 t8 t9 t10 t11 t12 t13 t14 t15 t16 t17 t18 t19",
        );
        for j in 1..=6 {
            let r = toy_generate(&d, j, 5).unwrap();
            let expected: Vec<String> = (0..20)
                .filter(|p| !fnv1a64(format!("doc-7:{j}:{p}").as_bytes()).is_multiple_of(10))
                .map(|p| format!("t{p}"))
                .take(5)
                .collect();
            assert_eq!(r.tokens.to_vec(), expected);
            let shift = 0.05 * (fnv1a64(format!("doc-7:{j}").as_bytes()) % 5) as f64;
            for (i, lp) in r.token_logprobs.iter().enumerate() {
                assert!((lp - ((1.0 - 0.05 * i as f64).ln() - shift)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn toy_is_pure() {
        let g = ToyGenerator::new(3).unwrap();
        let d = doc("x", "one two three four five six");
        assert_eq!(g.generate(&d, 4).unwrap(), g.generate(&d, 4).unwrap());
        assert_eq!(g.generate(&d, 4).unwrap().passes(), 4);
    }

    #[test]
    fn toy_rejects_empty_token_docs_and_zero_k() {
        assert!(toy_generate(&doc("x", "a"), 0, 0).is_err());
        // "..." tokenizes to a single punctuation token, so it is not empty
        assert!(toy_generate(&doc("x", "..."), 0, 1).is_ok());
    }

    fn rec(id: &str, pass: usize, toks: &[&str], lps: &[f64]) -> GenerationRecord {
        GenerationRecord {
            doc_id: id.into(),
            pass_index: pass,
            tokens: TokenSeq::from_tokens(toks.iter().copied()),
            token_logprobs: lps.to_vec(),
        }
    }

    fn five_pass_bundle(id: &str) -> GenerationBundle {
        let stochastic = (1..=5)
            .map(|j| rec(id, j, &["a"], &[-(j as f64) / 10.0]))
            .collect();
        GenerationBundle::new(rec(id, 0, &["a"], &[0.0]), stochastic, ScoringMode::RescoreGreedy).unwrap()
    }

    #[test]
    fn replay_prefix_rule_and_errors() {
        let g = ReplayGenerator::from_bundles([five_pass_bundle("d1")]).unwrap();
        let b = g.generate(&doc("d1", "x"), 3).unwrap();
        assert_eq!(
            b.stochastic.iter().map(|r| r.pass_index).collect::<Vec<_>>(),
            [1, 2, 3]
        );
        assert!(matches!(
            g.generate(&doc("d9", "x"), 1),
            Err(Error::MissingBundle { doc_id }) if doc_id == "d9"
        ));
        assert!(matches!(
            g.generate(&doc("d1", "x"), 6),
            Err(Error::PassShortfall {
                available: 5,
                requested: 6,
                ..
            })
        ));
    }

    #[test]
    fn replay_file_round_trip() {
        let bundles = vec![five_pass_bundle("d1"), five_pass_bundle("d2")];
        let mut buf = Vec::new();
        write_bundles(&bundles, &mut buf).unwrap();
        let back = read_bundles(buf.as_slice()).unwrap();
        assert_eq!(back, bundles);
    }

    #[test]
    fn read_bundles_sorts_passes_and_rejects_bad_records() {
        let text = r#"{"doc_id":"a","pass_index":2,"tokens":["x"],"token_logprobs":[-0.1]}
{"doc_id":"a","pass_index":0,"tokens":["x"],"token_logprobs":[0.0],"scoring_mode":"per_pass"}
{"doc_id":"a","pass_index":1,"tokens":["y"],"token_logprobs":[-0.2]}
"#;
        let b = read_bundles(text.as_bytes()).unwrap();
        assert_eq!(b[0].passes(), 2);
        assert_eq!(b[0].stochastic[0].pass_index, 1);

        let bad = r#"{"doc_id":"a","pass_index":0,"tokens":["x","y"],"token_logprobs":[0.0]}"#;
        assert!(matches!(
            read_bundles(bad.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let positive = r#"{"doc_id":"a","pass_index":0,"tokens":["x"],"token_logprobs":[0.5]}"#;
        assert!(read_bundles(positive.as_bytes()).is_err());
        let gap = r#"{"doc_id":"a","pass_index":0,"tokens":["x"],"token_logprobs":[0.0]}
{"doc_id":"a","pass_index":2,"tokens":["x"],"token_logprobs":[0.0]}"#;
        assert!(read_bundles(gap.as_bytes()).is_err());
        let no_greedy = r#"{"doc_id":"a","pass_index":1,"tokens":["x"],"token_logprobs":[0.0]}"#;
        assert!(read_bundles(no_greedy.as_bytes()).is_err());
    }

    #[test]
    fn rescored_bundle_must_repeat_greedy_tokens() {
        let r = GenerationBundle::new(
            rec("a", 0, &["x"], &[0.0]),
            vec![rec("a", 1, &["y"], &[0.0])],
            ScoringMode::RescoreGreedy,
        );
        assert!(r.is_err());
    }

    #[test]
    fn spec_generate_is_deterministic() {
        let spec = GeneratorSpec::toy(2, 3);
        let d = doc("d", "a b c d");
        assert_eq!(generate(&spec, &d).unwrap(), generate(&spec, &d).unwrap());
    }
}
