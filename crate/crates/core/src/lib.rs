//! Active-learning query strategies for abstractive summarization.
//!
//! The crate scores unlabeled documents for annotation and emulates the
//! annotation loop end to end:
//!
//! - [`corpus`]: JSONL corpora, deduplication, length statistics.
//! - [`metrics`]: tokenization, ROUGE-1/2/L, BLEU and smoothed BLEU.
//! - [`generation`]: greedy plus stochastic decodes with token logprobs,
//!   replayed from file or produced by a deterministic toy generator.
//! - [`uncertainty`]: NSP, ENSP, ENSV, BLEUVar and SacreBLEUVar.
//! - [`diversity`]: in-domain diversity sampling (IDDS) and an MMR baseline
//!   over document embeddings.
//! - [`selflearn`]: NSP-percentile filtering of pseudo-labeled summaries.
//! - [`alsim`]: the seeded active learning emulation and its reports.
//! - [`cli`]: the `alqs` command line.
//!
//! Neural models stay outside the crate. Embeddings and generation bundles
//! are read from JSONL files that any model runtime can produce.

pub mod alsim;
pub mod cli;
pub mod corpus;
pub mod diversity;
pub mod error;
pub mod generation;
pub mod metrics;
pub mod rng;
pub mod selflearn;
pub mod uncertainty;

pub use error::{Error, Result};
pub use uncertainty::{AcquisitionScore, Strategy};
