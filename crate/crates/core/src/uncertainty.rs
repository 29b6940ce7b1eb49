//! Sequence-level uncertainty acquisition functions over generation bundles.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generation::{GenerationBundle, GenerationRecord};
use crate::metrics::{bleu, sacrebleu};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Nsp,
    Ensp,
    Ensv,
    Bleuvar,
    Sacrebleuvar,
    Idds,
    Mmr,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Nsp,
        Strategy::Ensp,
        Strategy::Ensv,
        Strategy::Bleuvar,
        Strategy::Sacrebleuvar,
        Strategy::Idds,
        Strategy::Mmr,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Nsp => "nsp",
            Strategy::Ensp => "ensp",
            Strategy::Ensv => "ensv",
            Strategy::Bleuvar => "bleuvar",
            Strategy::Sacrebleuvar => "sacrebleuvar",
            Strategy::Idds => "idds",
            Strategy::Mmr => "mmr",
            Strategy::Random => "random",
        }
    }

    /// Scored from generation bundles by this module.
    pub fn is_uncertainty(self) -> bool {
        matches!(
            self,
            Strategy::Nsp | Strategy::Ensp | Strategy::Ensv | Strategy::Bleuvar | Strategy::Sacrebleuvar
        )
    }

    /// Minimum number of stochastic passes the strategy needs.
    pub fn min_passes(self) -> usize {
        match self {
            Strategy::Ensp => 1,
            Strategy::Ensv | Strategy::Bleuvar | Strategy::Sacrebleuvar => 2,
            _ => 0,
        }
    }

    /// Stochastic passes to request when `m_passes` are configured.
    pub fn passes_to_request(self, m_passes: usize) -> usize {
        if self.min_passes() == 0 {
            0
        } else {
            m_passes
        }
    }

    pub fn valid_names() -> String {
        Strategy::ALL.map(Strategy::name).join(", ")
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy \"{s}\"; valid: {}",
                    Strategy::valid_names()
                ))
            })
    }
}

/// Higher value means higher annotation priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionScore {
    pub doc_id: String,
    pub strategy: Strategy,
    pub value: f64,
}

/// Geometric mean of token probabilities, `exp(mean(logprobs))`.
pub fn seq_prob(record: &GenerationRecord) -> Result<f64> {
    if record.token_logprobs.is_empty() {
        return Err(Error::Validation(format!(
            "record {}#{} has no tokens",
            record.doc_id, record.pass_index
        )));
    }
    let mean = record.token_logprobs.iter().sum::<f64>() / record.token_logprobs.len() as f64;
    Ok(mean.exp())
}

fn require_passes(bundle: &GenerationBundle, min: usize, what: &str) -> Result<()> {
    if bundle.passes() < min {
        return Err(Error::Validation(format!(
            "{what} needs at least {min} stochastic passes, bundle {} has {}",
            bundle.doc_id,
            bundle.passes()
        )));
    }
    Ok(())
}

fn stochastic_probs(bundle: &GenerationBundle) -> Result<Vec<f64>> {
    bundle.stochastic.iter().map(seq_prob).collect()
}

pub fn nsp(bundle: &GenerationBundle) -> Result<f64> {
    Ok(1.0 - seq_prob(&bundle.greedy)?)
}

pub fn ensp(bundle: &GenerationBundle) -> Result<f64> {
    require_passes(bundle, 1, "ENSP")?;
    let probs = stochastic_probs(bundle)?;
    Ok(1.0 - probs.iter().sum::<f64>() / probs.len() as f64)
}

/// Population variance of the per-pass sequence probabilities.
pub fn ensv(bundle: &GenerationBundle) -> Result<f64> {
    require_passes(bundle, 2, "ENSV")?;
    let probs = stochastic_probs(bundle)?;
    let n = probs.len() as f64;
    let mean = probs.iter().sum::<f64>() / n;
    Ok(probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n)
}

fn pairwise_distance_sq(bundle: &GenerationBundle, sim: fn(&[String], &[String]) -> f64) -> f64 {
    let passes = &bundle.stochastic;
    let m = passes.len();
    let mut total = 0.0;
    for (i, a) in passes.iter().enumerate() {
        for (j, b) in passes.iter().enumerate() {
            if i != j {
                total += (1.0 - sim(&a.tokens, &b.tokens)).powi(2);
            }
        }
    }
    total / (m * (m - 1)) as f64
}

/// Mean of `(1 - BLEU(y_i, y_j))^2` over ordered pairs of distinct passes.
pub fn bleuvar(bundle: &GenerationBundle) -> Result<f64> {
    require_passes(bundle, 2, "BLEUVar")?;
    Ok(pairwise_distance_sq(bundle, bleu))
}

pub fn sacrebleuvar(bundle: &GenerationBundle) -> Result<f64> {
    require_passes(bundle, 2, "SacreBLEUVar")?;
    Ok(pairwise_distance_sq(bundle, sacrebleu))
}

pub fn score_bundle(strategy: Strategy, bundle: &GenerationBundle) -> Result<f64> {
    match strategy {
        Strategy::Nsp => nsp(bundle),
        Strategy::Ensp => ensp(bundle),
        Strategy::Ensv => ensv(bundle),
        Strategy::Bleuvar => bleuvar(bundle),
        Strategy::Sacrebleuvar => sacrebleuvar(bundle),
        other => Err(Error::WrongModule {
            strategy: other.name(),
            module: "uncertainty",
        }),
    }
}

/// Scores every bundle in parallel; output order follows input order.
pub fn score_pool(strategy: Strategy, bundles: &[GenerationBundle]) -> Result<Vec<AcquisitionScore>> {
    if !strategy.is_uncertainty() {
        return Err(Error::WrongModule {
            strategy: strategy.name(),
            module: "uncertainty",
        });
    }
    bundles
        .par_iter()
        .map(|b| {
            let value = score_bundle(strategy, b).map_err(|e| Error::in_doc(&b.doc_id, e))?;
            Ok(AcquisitionScore {
                doc_id: b.doc_id.clone(),
                strategy,
                value,
            })
        })
        .collect()
}
