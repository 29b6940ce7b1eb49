//! Documents, gold/pseudo summaries and JSONL corpus files.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{tokenize, TokenSeq};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Gold,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub token_count: usize,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        if id.is_empty() {
            return Err(Error::Validation("document id must not be empty".into()));
        }
        if text.trim().is_empty() {
            return Err(Error::Validation(format!("document \"{id}\" has empty text")));
        }
        let token_count = tokenize(&text).len();
        Ok(Document {
            id,
            text,
            token_count,
        })
    }

    pub fn tokens(&self) -> TokenSeq {
        tokenize(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub doc: Document,
    pub summary: String,
    pub summary_token_count: usize,
    pub provenance: Provenance,
}

impl LabeledExample {
    pub fn new(doc: Document, summary: impl Into<String>, provenance: Provenance) -> Self {
        let summary = summary.into();
        let summary_token_count = tokenize(&summary).len();
        LabeledExample {
            doc,
            summary,
            summary_token_count,
            provenance,
        }
    }

    pub fn id(&self) -> &str {
        &self.doc.id
    }

    pub fn has_summary(&self) -> bool {
        !self.summary.trim().is_empty()
    }
}

/// On-disk record, one per JSONL line.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    id: String,
    document: String,
    #[serde(default)]
    summary: String,
    #[serde(default)]
    provenance: Provenance,
}

/// An ordered collection of examples with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    examples: Vec<LabeledExample>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(name: impl Into<String>) -> Self {
        Corpus {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn from_examples(
        name: impl Into<String>,
        examples: impl IntoIterator<Item = LabeledExample>,
    ) -> Result<Self> {
        let mut corpus = Corpus::new(name);
        for ex in examples {
            corpus.push(ex)?;
        }
        Ok(corpus)
    }

    /// Appends an example, rejecting duplicate ids.
    pub fn push(&mut self, example: LabeledExample) -> Result<()> {
        if self.index.contains_key(example.id()) {
            return Err(Error::DuplicateId {
                id: example.id().to_owned(),
                line: self.examples.len() + 1,
            });
        }
        self.index.insert(example.id().to_owned(), self.examples.len());
        self.examples.push(example);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledExample> {
        self.examples.iter()
    }

    pub fn get(&self, id: &str) -> Option<&LabeledExample> {
        self.index.get(id).map(|&i| &self.examples[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.examples.iter().map(|e| e.doc.id.clone()).collect()
    }

    /// Fails with the first example lacking a gold summary.
    pub fn require_summaries(&self) -> Result<()> {
        match self.examples.iter().find(|e| !e.has_summary()) {
            Some(e) => Err(Error::Validation(format!(
                "example \"{}\" has no summary",
                e.id()
            ))),
            None => Ok(()),
        }
    }

    /// Keeps examples with at least the given numbers of document and
    /// summary tokens.
    pub fn filter_by_length(&self, min_doc_tokens: usize, min_summary_tokens: usize) -> Corpus {
        self.retain_clone(|e| {
            e.doc.token_count >= min_doc_tokens && e.summary_token_count >= min_summary_tokens
        })
    }

    fn retain_clone(&self, mut keep: impl FnMut(&LabeledExample) -> bool) -> Corpus {
        let mut out = Corpus::new(self.name.clone());
        for ex in self.examples.iter().filter(|e| keep(e)) {
            out.index.insert(ex.id().to_owned(), out.examples.len());
            out.examples.push(ex.clone());
        }
        out
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a LabeledExample;
    type IntoIter = std::slice::Iter<'a, LabeledExample>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    pub avg_doc_len: f64,
    pub avg_summary_len: f64,
}

pub fn read_corpus(reader: impl BufRead, name: impl Into<String>) -> Result<Corpus> {
    let mut corpus = Corpus::new(name);
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let doc = Document::new(rec.id, rec.document).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if corpus.contains(&doc.id) {
            return Err(Error::DuplicateId {
                id: doc.id,
                line: lineno,
            });
        }
        corpus.push(LabeledExample::new(doc, rec.summary, rec.provenance))?;
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_corpus(BufReader::new(file), name)
}

pub fn write_corpus(corpus: &Corpus, mut writer: impl Write) -> std::io::Result<()> {
    for ex in corpus {
        let rec = CorpusRecord {
            id: ex.doc.id.clone(),
            document: ex.doc.text.clone(),
            summary: ex.summary.clone(),
            provenance: ex.provenance,
        };
        serde_json::to_writer(&mut writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(corpus, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Drops every example whose tokenized document repeats an earlier one.
pub fn deduplicate(corpus: &Corpus) -> Corpus {
    let mut seen: HashSet<TokenSeq> = HashSet::with_capacity(corpus.len());
    corpus.retain_clone(|e| seen.insert(e.doc.tokens()))
}

pub fn stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let n = corpus.len() as f64;
    let doc_tokens: usize = corpus.iter().map(|e| e.doc.token_count).sum();
    let summary_tokens: usize = corpus.iter().map(|e| e.summary_token_count).sum();
    Ok(CorpusStats {
        count: corpus.len(),
        avg_doc_len: doc_tokens as f64 / n,
        avg_summary_len: summary_tokens as f64 / n,
    })
}
