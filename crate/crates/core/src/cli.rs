//! `alqs` command-line interface.
//!
//! Exit codes: 0 success, 1 invalid input or config, 2 an input file does
//! not cover a required id, 3 internal failure. Every failure prints one
//! `error: code=<n> msg=<text>` line to stderr; data goes to stdout or to
//! the requested output files.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::alsim::{aggregate_runs, render_csv, render_table, run_simulation, ALConfig, RunReport};
use crate::corpus::{deduplicate, load_corpus, save_corpus, stats, Corpus, Document};
use crate::diversity::{idds_scores, load_embeddings, mmr_scores, EmbeddingStore, IddsConfig};
use crate::error::Error;
use crate::generation::{save_bundles, GenerationBundle, ReplayGenerator, SummaryGenerator, ToyGenerator};
use crate::rng::ExperimentRng;
use crate::selflearn::{augment, filter_pseudo, load_pseudo, SelfLearnConfig};
use crate::uncertainty::{score_bundle, score_pool, AcquisitionScore, Strategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_COVERAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "alqs",
    version,
    about = "Active-learning query strategies for summarization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Remove documents whose tokenized text repeats an earlier one.
    Dedup {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep examples with minimum document and summary lengths.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        min_doc_tokens: usize,
        #[arg(long, default_value_t = 0)]
        min_summary_tokens: usize,
    },
    /// Print corpus size and average token lengths as JSON.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Write generation records from the deterministic toy generator.
    ToyGen {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        m_passes: usize,
    },
    /// Score the unlabeled part of a corpus with one strategy.
    Score {
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        bundles: Option<PathBuf>,
        /// File with one labeled doc id per line.
        #[arg(long)]
        labeled_ids: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 10)]
        m_passes: usize,
        /// Seed for the random strategy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the active learning emulation for one or more seeds.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        bundles: Option<PathBuf>,
        /// Number of runs; run i uses rng_seed + i.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        query_size: Option<usize>,
        #[arg(long)]
        subset_size: Option<usize>,
        #[arg(long)]
        rng_seed: Option<u64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Summary length of the toy generator used when no bundles are given.
        #[arg(long, default_value_t = 8)]
        toy_k: usize,
    },
    /// Filter pseudo-labeled summaries by NSP percentiles and append them.
    Selflearn {
        #[arg(long)]
        pseudo: PathBuf,
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        kl: f64,
        #[arg(long, default_value_t = 1.0)]
        kh: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate run reports into a per-iteration mean±std table.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
    },
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_coverage() {
                EXIT_COVERAGE
            } else {
                EXIT_INPUT
            },
            message: e.to_string(),
        }
    }
}

type CliResult = std::result::Result<(), CliError>;

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = writeln!(stderr, "error: code={code} msg={}", one_line(&rendered));
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: code={} msg={}", e.code, one_line(&e.message));
            e.code
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Dedup { input, out } => cmd_dedup(&input, &out, stderr),
        Command::Filter {
            input,
            out,
            min_doc_tokens,
            min_summary_tokens,
        } => {
            let corpus = load_corpus(&input)?;
            let kept = corpus.filter_by_length(min_doc_tokens, min_summary_tokens);
            save_corpus(&kept, &out)?;
            note(
                stderr,
                format_args!("kept={} removed={}", kept.len(), corpus.len() - kept.len()),
            )
        }
        Command::Stats { corpus } => {
            let s = stats(&load_corpus(&corpus)?)?;
            let json = serde_json::to_string(&s).map_err(|e| CliError::internal(e.to_string()))?;
            writeln!(stdout, "{json}").map_err(|e| CliError::internal(e.to_string()))
        }
        Command::ToyGen {
            corpus,
            out,
            k,
            m_passes,
        } => {
            let corpus = load_corpus(&corpus)?;
            let gen = ToyGenerator::new(k)?;
            let bundles = corpus
                .iter()
                .map(|ex| gen.generate(&ex.doc, m_passes))
                .collect::<crate::Result<Vec<_>>>()?;
            save_bundles(&bundles, &out)?;
            note(stderr, format_args!("bundles={}", bundles.len()))
        }
        Command::Score {
            strategy,
            corpus,
            embeddings,
            bundles,
            labeled_ids,
            lambda,
            m_passes,
            seed,
            out,
        } => cmd_score(
            ScoreArgs {
                strategy: strategy.parse()?,
                corpus: &corpus,
                embeddings: embeddings.as_deref(),
                bundles: bundles.as_deref(),
                labeled_ids: labeled_ids.as_deref(),
                lambda,
                m_passes,
                seed,
            },
            &out,
        ),
        Command::Simulate {
            config,
            corpus,
            test,
            embeddings,
            bundles,
            seeds,
            out_dir,
            strategy,
            iterations,
            query_size,
            subset_size,
            rng_seed,
            lambda,
            toy_k,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = strategy {
                cfg.strategy = s.parse()?;
            }
            if let Some(v) = iterations {
                cfg.iterations = v;
            }
            if let Some(v) = query_size {
                cfg.query_size = v;
            }
            if let Some(v) = subset_size {
                cfg.subset_size = Some(v);
            }
            if let Some(v) = rng_seed {
                cfg.rng_seed = v;
            }
            if let Some(v) = lambda {
                match cfg.strategy {
                    Strategy::Mmr => cfg.mmr.lambda = v,
                    _ => cfg.idds.lambda = v,
                }
            }
            cmd_simulate(
                &cfg,
                SimInputs {
                    corpus: &corpus,
                    test: &test,
                    embeddings: embeddings.as_deref(),
                    bundles: bundles.as_deref(),
                    toy_k,
                },
                seeds,
                &out_dir,
                stderr,
            )
        }
        Command::Selflearn {
            pseudo,
            labeled,
            source,
            kl,
            kh,
            out,
        } => cmd_selflearn(&pseudo, &labeled, &source, kl, kh, &out, stderr),
        Command::Report { runs, format } => cmd_report(&runs, format, stdout),
    }
}

fn note(stderr: &mut dyn Write, args: std::fmt::Arguments<'_>) -> CliResult {
    writeln!(stderr, "{args}").map_err(|e| CliError::internal(e.to_string()))
}

fn cmd_dedup(input: &Path, out: &Path, stderr: &mut dyn Write) -> CliResult {
    let corpus = load_corpus(input)?;
    let deduped = deduplicate(&corpus);
    save_corpus(&deduped, out)?;
    note(stderr, format_args!("removed={}", corpus.len() - deduped.len()))
}

struct ScoreArgs<'a> {
    strategy: Strategy,
    corpus: &'a Path,
    embeddings: Option<&'a Path>,
    bundles: Option<&'a Path>,
    labeled_ids: Option<&'a Path>,
    lambda: Option<f64>,
    m_passes: usize,
    seed: u64,
}

fn read_id_list(path: &Path) -> Result<Vec<String>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn require_store(
    path: Option<&Path>,
    strategy: Strategy,
    ids: &[String],
) -> Result<EmbeddingStore, CliError> {
    let path = path.ok_or_else(|| CliError::input(format!("strategy {strategy} needs --embeddings")))?;
    let store = load_embeddings(path)?;
    if let Some(id) = store.first_missing(ids) {
        return Err(Error::MissingEmbedding { id: id.clone() }.into());
    }
    Ok(store)
}

fn require_bundles(
    path: Option<&Path>,
    strategy: Strategy,
    corpus: &Corpus,
    ids: &[String],
    passes: usize,
) -> Result<Vec<GenerationBundle>, CliError> {
    let path = path.ok_or_else(|| CliError::input(format!("strategy {strategy} needs --bundles")))?;
    let gen = ReplayGenerator::load(path)?;
    Ok(ids
        .iter()
        .map(|id| gen.generate(&corpus.get(id).expect("id from corpus").doc, passes))
        .collect::<crate::Result<Vec<_>>>()?)
}

fn cmd_score(args: ScoreArgs<'_>, out: &Path) -> CliResult {
    let corpus = load_corpus(args.corpus)?;
    let labeled = match args.labeled_ids {
        Some(p) => read_id_list(p)?,
        None => Vec::new(),
    };
    if let Some(id) = labeled.iter().find(|id| !corpus.contains(id)) {
        return Err(Error::UnknownId { id: id.clone() }.into());
    }
    let labeled_set: HashSet<&String> = labeled.iter().collect();
    let candidates: Vec<String> = corpus
        .ids()
        .into_iter()
        .filter(|id| !labeled_set.contains(id))
        .collect();
    let strategy = args.strategy;

    let scores: Vec<AcquisitionScore> = match strategy {
        Strategy::Idds => {
            let store = require_store(args.embeddings, strategy, &corpus.ids())?;
            let mut cfg = IddsConfig::default();
            if let Some(l) = args.lambda {
                cfg.lambda = l;
            }
            if candidates.is_empty() {
                Vec::new()
            } else {
                idds_scores(&candidates, &candidates, &labeled, &store, &cfg)?
            }
        }
        Strategy::Mmr => {
            let store = require_store(args.embeddings, strategy, &corpus.ids())?;
            let mut cfg = crate::diversity::MmrConfig::default();
            if let Some(l) = args.lambda {
                cfg.lambda = l;
            }
            let passes = cfg.uncertainty.passes_to_request(args.m_passes);
            let bundles = require_bundles(args.bundles, strategy, &corpus, &candidates, passes)?;
            let unc = bundles
                .iter()
                .map(|b| Ok((b.doc_id.clone(), score_bundle(cfg.uncertainty, b)?)))
                .collect::<crate::Result<_>>()?;
            mmr_scores(&candidates, &labeled, &store, &unc, &cfg)?
        }
        Strategy::Random => {
            let mut order = candidates.clone();
            ExperimentRng::seed_from_u64(args.seed).shuffle(&mut order);
            let n = order.len();
            let rank: std::collections::HashMap<&String, usize> =
                order.iter().enumerate().map(|(i, id)| (id, i)).collect();
            candidates
                .iter()
                .map(|id| AcquisitionScore {
                    doc_id: id.clone(),
                    strategy,
                    value: (n - rank[id]) as f64,
                })
                .collect()
        }
        s => {
            let passes = s.passes_to_request(args.m_passes);
            let bundles = require_bundles(args.bundles, s, &corpus, &candidates, passes)?;
            score_pool(s, &bundles)?
        }
    };

    let file = fs::File::create(out).map_err(|e| Error::Io {
        path: out.to_owned(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    for s in &scores {
        serde_json::to_writer(&mut w, s).map_err(|e| CliError::internal(e.to_string()))?;
        w.write_all(b"\n")
            .map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
    }
    w.flush()
        .map_err(|e| CliError::input(format!("{}: {e}", out.display())))
}

fn load_config(path: &Path) -> Result<ALConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::input(format!(
            "{}: {e} (valid strategies: {})",
            path.display(),
            Strategy::valid_names()
        ))
    })
}

struct SimInputs<'a> {
    corpus: &'a Path,
    test: &'a Path,
    embeddings: Option<&'a Path>,
    bundles: Option<&'a Path>,
    toy_k: usize,
}

#[derive(Clone)]
enum GenSource {
    Replay(ReplayGenerator),
    Toy(ToyGenerator),
}

impl GenSource {
    fn instance(&self) -> Box<dyn SummaryGenerator> {
        match self {
            GenSource::Replay(g) => Box::new(g.clone()),
            GenSource::Toy(g) => Box::new(*g),
        }
    }
}

/// Writes every training corpus handed to the generator.
struct EmitTraining<'a> {
    inner: Box<dyn SummaryGenerator>,
    dir: &'a Path,
    seed: u64,
}

impl SummaryGenerator for EmitTraining<'_> {
    fn generate(&self, doc: &Document, passes: usize) -> crate::Result<GenerationBundle> {
        self.inner.generate(doc, passes)
    }

    fn greedy(&self, doc: &Document) -> crate::Result<crate::generation::GenerationRecord> {
        self.inner.greedy(doc)
    }

    fn prepare(&mut self, iteration: usize, labeled_ids: &[String], training: &Corpus) -> crate::Result<()> {
        let path = self
            .dir
            .join(format!("train_seed{}_iter{iteration:03}.jsonl", self.seed));
        save_corpus(training, path)?;
        self.inner.prepare(iteration, labeled_ids, training)
    }
}

fn cmd_simulate(
    cfg: &ALConfig,
    inputs: SimInputs<'_>,
    seeds: u64,
    out_dir: &Path,
    stderr: &mut dyn Write,
) -> CliResult {
    if seeds == 0 {
        return Err(CliError::input("--seeds must be >= 1"));
    }
    cfg.validate()?;
    let corpus = load_corpus(inputs.corpus)?;
    let test = load_corpus(inputs.test)?;
    let store = inputs.embeddings.map(load_embeddings).transpose()?;
    let source = match inputs.bundles {
        Some(p) => GenSource::Replay(ReplayGenerator::load(p)?),
        None => GenSource::Toy(ToyGenerator::new(inputs.toy_k)?),
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_owned(),
        source: e,
    })?;

    let reports: Vec<RunReport> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let mut run_cfg = cfg.clone();
            run_cfg.rng_seed = cfg.rng_seed.wrapping_add(i);
            let mut generator: Box<dyn SummaryGenerator + '_> = if cfg.selflearn.is_some() {
                Box::new(EmitTraining {
                    inner: source.instance(),
                    dir: out_dir,
                    seed: run_cfg.rng_seed,
                })
            } else {
                source.instance()
            };
            let report = run_simulation(&corpus, &test, store.as_ref(), &mut generator, &run_cfg)?;
            write_file(
                &out_dir.join(format!("run_seed{}.json", run_cfg.rng_seed)),
                &report.to_json(),
            )?;
            Ok(report)
        })
        .collect::<Result<_, CliError>>()?;

    let agg = aggregate_runs(&reports)?;
    write_file(&out_dir.join("aggregate.json"), &agg.to_json())?;
    note(stderr, format_args!("runs={}", reports.len()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn cmd_selflearn(
    pseudo: &Path,
    labeled: &Path,
    source: &Path,
    kl: f64,
    kh: f64,
    out: &Path,
    stderr: &mut dyn Write,
) -> CliResult {
    let cfg = SelfLearnConfig::new(kl, kh)?;
    let items = load_pseudo(pseudo)?;
    let labeled = load_corpus(labeled)?;
    let source = load_corpus(source)?;
    let kept = filter_pseudo(&items, &cfg);
    let corpus = augment(&labeled, &kept, &source)?;
    save_corpus(&corpus, out)?;
    note(
        stderr,
        format_args!("kept={} dropped={}", kept.len(), items.len() - kept.len()),
    )
}

/// Run reports in `dir`, ordered by file name.
pub fn load_run_reports(dir: &Path) -> crate::Result<Vec<RunReport>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_owned(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn cmd_report(dir: &Path, format: ReportFormat, stdout: &mut dyn Write) -> CliResult {
    let reports = load_run_reports(dir)?;
    if reports.is_empty() {
        return Err(CliError::input(format!("no run reports in {}", dir.display())));
    }
    let agg = aggregate_runs(&reports)?;
    let text = match format {
        ReportFormat::Table => render_table(&agg),
        ReportFormat::Csv => render_csv(&agg)?,
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::internal(e.to_string()))
}
