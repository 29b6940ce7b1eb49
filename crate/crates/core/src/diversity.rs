//! Embedding-based acquisition: in-domain diversity sampling (IDDS) and the
//! MMR-style uncertainty/diversity baseline.
//!
//! IDDS scores a candidate `x` as
//!
//! ```text
//! lambda * agg_{u in U} s(x, u) - (1 - lambda) * agg_{l in L} s(x, l)
//! ```
//!
//! where `U` is the unlabeled pool (including `x` itself), `L` the labeled
//! set and `agg` the mean (default) or the maximum. An empty `L` contributes
//! zero. Candidates close to the pool on average but far from what is
//! already labeled rank first.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::{AcquisitionScore, Strategy};

const MAHALANOBIS_RIDGE: f64 = 1e-6;

// ---------------------------------------------------------------------------
// embedding store

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    order: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingHeader {
    dim: usize,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingLine {
    id: String,
    vector: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("embedding dim must be >= 1".into()));
        }
        Ok(EmbeddingStore {
            dim,
            entries: HashMap::new(),
            order: Vec::new(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "embedding \"{id}\" has a non-finite component"
            )));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate embedding id \"{id}\"")));
        }
        self.order.push(id.clone());
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Result<&[f64]> {
        self.entries
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbedding { id: id.to_owned() })
    }

    /// Ids in insertion order.
    pub fn ids(&self) -> &[String] {
        &self.order
    }

    /// Returns the store with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            v.iter_mut().for_each(|x| *x *= factor);
        }
        out
    }

    /// First id of `ids` without a vector, if any.
    pub fn first_missing<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Option<&'a String> {
        ids.into_iter().find(|id| !self.contains(id))
    }
}

/// Reads embedding JSONL: a `{"dim": D, "count": N}` header line followed
/// by exactly `N` `{"id": .., "vector": [..]}` lines. Blank and `#`
/// comment lines are skipped.
pub fn read_embeddings(reader: impl BufRead) -> Result<EmbeddingStore> {
    let mut lines = reader
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !crate::generation::skip_line(l)));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line".into()))?;
    let header: EmbeddingHeader =
        serde_json::from_str(&header.map_err(|e| parse_err(hline + 1, e.to_string()))?)
            .map_err(|e| parse_err(hline + 1, format!("bad header: {e}")))?;
    let mut store = EmbeddingStore::new(header.dim).map_err(|e| parse_err(hline + 1, e.to_string()))?;

    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let rec: EmbeddingLine = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        store
            .insert(rec.id, rec.vector)
            .map_err(|e| parse_err(lineno, e.to_string()))?;
    }
    if store.len() != header.count {
        return Err(Error::Validation(format!(
            "embedding header declares {} vectors, file has {}",
            header.count,
            store.len()
        )));
    }
    Ok(store)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file))
}

pub fn write_embeddings(store: &EmbeddingStore, mut writer: impl Write) -> std::io::Result<()> {
    serde_json::to_writer(
        &mut writer,
        &EmbeddingHeader {
            dim: store.dim,
            count: store.len(),
        },
    )?;
    writer.write_all(b"\n")?;
    for id in &store.order {
        serde_json::to_writer(
            &mut writer,
            &EmbeddingLine {
                id: id.clone(),
                vector: store.entries[id].clone(),
            },
        )?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_embeddings(store, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// similarity kernels

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Dot,
    Cosine,
    Euclidean,
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Average,
    Maximum,
}

/// Inverse of a ridge-regularized sample covariance matrix.
#[derive(Debug, Clone)]
pub struct Mahalanobis {
    inverse: DMatrix<f64>,
}

impl Mahalanobis {
    /// Needs at least `dim + 1` vectors.
    pub fn fit(vectors: &[&[f64]]) -> Result<Self> {
        let n = vectors.len();
        let dim = vectors.first().map_or(0, |v| v.len());
        if dim == 0 || n < dim + 1 {
            return Err(Error::Validation(format!(
                "mahalanobis similarity needs at least dim + 1 = {} pool vectors, got {n}",
                dim + 1
            )));
        }
        let mean = mean_vector(vectors);
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for v in vectors {
            let centered = DVector::from_iterator(dim, v.iter().zip(&mean).map(|(x, m)| x - m));
            cov += &centered * centered.transpose();
        }
        cov /= (n - 1) as f64;
        for i in 0..dim {
            cov[(i, i)] += MAHALANOBIS_RIDGE;
        }
        let inverse = cov.cholesky().ok_or(Error::SingularCovariance)?.inverse();
        Ok(Mahalanobis { inverse })
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| x - y));
        (diff.transpose() * &self.inverse * &diff)[(0, 0)].max(0.0).sqrt()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector in the direction of `a`; the zero vector maps to itself.
pub fn unit(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    if n == 0.0 {
        a.to_vec()
    } else {
        a.iter().map(|x| x / n).collect()
    }
}

/// Similarity where larger means closer. Distances are negated.
pub fn similarity(a: &[f64], b: &[f64], kind: Similarity, ctx: Option<&Mahalanobis>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(match kind {
        Similarity::Dot => dot(a, b),
        Similarity::Cosine => {
            let (na, nb) = (norm(a), norm(b));
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                dot(a, b) / (na * nb)
            }
        }
        Similarity::Euclidean => -a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        Similarity::Mahalanobis => {
            let ctx =
                ctx.ok_or_else(|| Error::Config("mahalanobis similarity needs a fitted covariance".into()))?;
            if ctx.inverse.nrows() != a.len() {
                return Err(Error::DimMismatch {
                    expected: ctx.inverse.nrows(),
                    actual: a.len(),
                });
            }
            -ctx.distance(a, b)
        }
    })
}

fn mean_vector(vectors: &[&[f64]]) -> Vec<f64> {
    let dim = vectors.first().map_or(0, |v| v.len());
    let mut acc = vec![0.0; dim];
    for v in vectors {
        acc.iter_mut().zip(v.iter()).for_each(|(a, x)| *a += x);
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Component-wise mean of the pool's vectors.
pub fn pool_mean_vector(unlabeled: &[String], store: &EmbeddingStore) -> Result<Vec<f64>> {
    if unlabeled.is_empty() {
        return Err(Error::Empty("unlabeled pool"));
    }
    let vectors = unlabeled
        .iter()
        .map(|id| store.get(id))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_vector(&vectors))
}

// ---------------------------------------------------------------------------
// IDDS

fn default_idds_lambda() -> f64 {
    0.67
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IddsConfig {
    pub lambda: f64,
    pub similarity: Similarity,
    pub aggregation: Aggregation,
    pub normalize: bool,
    /// Aggregate over the initial pool instead of the live unlabeled set.
    pub freeze_pool: bool,
}

impl Default for IddsConfig {
    fn default() -> Self {
        IddsConfig {
            lambda: default_idds_lambda(),
            similarity: Similarity::Dot,
            aggregation: Aggregation::Average,
            normalize: false,
            freeze_pool: false,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("lambda {lambda} is outside [0, 1]")));
    }
    Ok(())
}

impl IddsConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)
    }
}

/// Vectors for `ids`, unit-normalized when asked.
fn gather<'a>(
    ids: &[String],
    store: &'a EmbeddingStore,
    normalize: bool,
) -> Result<Vec<std::borrow::Cow<'a, [f64]>>> {
    ids.iter()
        .map(|id| {
            let v = store.get(id)?;
            Ok(if normalize {
                std::borrow::Cow::Owned(unit(v))
            } else {
                std::borrow::Cow::Borrowed(v)
            })
        })
        .collect()
}

fn aggregate(
    x: &[f64],
    others: &[&[f64]],
    kind: Similarity,
    agg: Aggregation,
    ctx: Option<&Mahalanobis>,
) -> Result<f64> {
    if others.is_empty() {
        return Ok(0.0);
    }
    match agg {
        Aggregation::Average => {
            let mut sum = 0.0;
            for o in others {
                sum += similarity(x, o, kind, ctx)?;
            }
            Ok(sum / others.len() as f64)
        }
        Aggregation::Maximum => {
            let mut best = f64::NEG_INFINITY;
            for o in others {
                best = best.max(similarity(x, o, kind, ctx)?);
            }
            Ok(best)
        }
    }
}

/// IDDS scores for `candidates`, in candidate order.
///
/// `unlabeled` is the pool the first term averages over and must contain
/// every candidate. With dot or cosine similarity and average aggregation
/// the pool term is computed against the pool mean vector, which is exact
/// by bilinearity.
pub fn idds_scores(
    candidates: &[String],
    unlabeled: &[String],
    labeled: &[String],
    store: &EmbeddingStore,
    cfg: &IddsConfig,
) -> Result<Vec<AcquisitionScore>> {
    cfg.validate()?;
    if unlabeled.is_empty() {
        return Err(Error::Empty("unlabeled pool"));
    }
    let pool_ids: HashSet<&String> = unlabeled.iter().collect();
    if let Some(stray) = candidates.iter().find(|c| !pool_ids.contains(c)) {
        return Err(Error::Validation(format!(
            "candidate \"{stray}\" is not in the unlabeled pool"
        )));
    }

    // cosine on raw vectors equals dot on unit vectors
    let (kind, normalize) = match cfg.similarity {
        Similarity::Cosine => (Similarity::Dot, true),
        k => (k, cfg.normalize),
    };
    let cand_vecs = gather(candidates, store, normalize)?;
    let pool_vecs = gather(unlabeled, store, normalize)?;
    let lab_vecs = gather(labeled, store, normalize)?;
    let pool_refs: Vec<&[f64]> = pool_vecs.iter().map(|v| v.as_ref()).collect();
    let lab_refs: Vec<&[f64]> = lab_vecs.iter().map(|v| v.as_ref()).collect();

    let ctx = match kind {
        Similarity::Mahalanobis => Some(Mahalanobis::fit(&pool_refs)?),
        _ => None,
    };
    let fast = kind == Similarity::Dot && cfg.aggregation == Aggregation::Average;
    let pool_mean = fast.then(|| mean_vector(&pool_refs));
    let lab_mean = (fast && !lab_refs.is_empty()).then(|| mean_vector(&lab_refs));

    let lambda = cfg.lambda;
    candidates
        .par_iter()
        .zip(cand_vecs.par_iter())
        .map(|(id, x)| {
            let x = x.as_ref();
            let (pool_term, lab_term) = match (&pool_mean, &lab_mean) {
                (Some(pm), lm) => (dot(x, pm), lm.as_ref().map_or(0.0, |lm| dot(x, lm))),
                (None, _) => (
                    aggregate(x, &pool_refs, kind, cfg.aggregation, ctx.as_ref())?,
                    aggregate(x, &lab_refs, kind, cfg.aggregation, ctx.as_ref())?,
                ),
            };
            Ok(AcquisitionScore {
                doc_id: id.clone(),
                strategy: Strategy::Idds,
                value: lambda * pool_term - (1.0 - lambda) * lab_term,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// MMR baseline

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MmrConfig {
    pub lambda: f64,
    pub similarity: Similarity,
    /// Uncertainty strategy supplying the relevance term.
    pub uncertainty: Strategy,
}

impl Default for MmrConfig {
    fn default() -> Self {
        MmrConfig {
            lambda: 0.5,
            similarity: Similarity::Dot,
            uncertainty: Strategy::Nsp,
        }
    }
}

impl MmrConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !self.uncertainty.is_uncertainty() {
            return Err(Error::Config(format!(
                "mmr uncertainty must be an uncertainty strategy, got {}",
                self.uncertainty
            )));
        }
        Ok(())
    }
}

fn min_max_scale(values: &[f64]) -> impl Fn(f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    move |v| if range > 0.0 { (v - lo) / range } else { 0.0 }
}

/// MMR-style scores: `lambda * u(x) - (1 - lambda) * max_l s(x, l)`, with
/// the uncertainty `u` min-max scaled over the candidates and the
/// similarity min-max scaled over all candidate/labeled pairs. Constant
/// inputs scale to zero; an empty labeled set contributes zero.
pub fn mmr_scores(
    candidates: &[String],
    labeled: &[String],
    store: &EmbeddingStore,
    uncertainty: &HashMap<String, f64>,
    cfg: &MmrConfig,
) -> Result<Vec<AcquisitionScore>> {
    cfg.validate()?;
    let raw_u = candidates
        .iter()
        .map(|id| {
            uncertainty
                .get(id)
                .copied()
                .ok_or_else(|| Error::MissingUncertainty { id: id.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let cand_vecs = gather(candidates, store, false)?;
    let lab_vecs = gather(labeled, store, false)?;

    let ctx = if cfg.similarity == Similarity::Mahalanobis {
        let all: Vec<&[f64]> = cand_vecs.iter().chain(&lab_vecs).map(|v| v.as_ref()).collect();
        Some(Mahalanobis::fit(&all)?)
    } else {
        None
    };

    let sims: Vec<Vec<f64>> = cand_vecs
        .par_iter()
        .map(|x| {
            lab_vecs
                .iter()
                .map(|l| similarity(x, l, cfg.similarity, ctx.as_ref()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = sims.iter().flatten().copied().collect();
    let scale_s = min_max_scale(&flat);
    let scale_u = min_max_scale(&raw_u);

    Ok(candidates
        .iter()
        .zip(raw_u)
        .zip(&sims)
        .map(|((id, u), row)| {
            let penalty = row
                .iter()
                .map(|&s| scale_s(s))
                .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))
                .unwrap_or(0.0);
            AcquisitionScore {
                doc_id: id.clone(),
                strategy: Strategy::Mmr,
                value: cfg.lambda * scale_u(u) - (1.0 - cfg.lambda) * penalty,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn store(entries: &[(&str, &[f64])]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new(entries[0].1.len()).unwrap();
        for (id, v) in entries {
            s.insert(*id, v.to_vec()).unwrap();
        }
        s
    }

    fn values(scores: &[AcquisitionScore]) -> Vec<f64> {
        scores.iter().map(|s| s.value).collect()
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(
            similarity(&[1.0, 0.0], &[1.0, 0.0], Similarity::Dot, None).unwrap(),
            1.0
        );
        assert_eq!(
            similarity(&[1.0, 1.0], &[1.0, 0.0], Similarity::Dot, None).unwrap(),
            1.0
        );
        assert_eq!(
            similarity(&[0.0, 0.0], &[3.0, 4.0], Similarity::Euclidean, None).unwrap(),
            -5.0
        );
        assert_eq!(
            similarity(&[0.0, 0.0], &[3.0, 4.0], Similarity::Cosine, None).unwrap(),
            0.0
        );
        let c = similarity(&[2.0, 0.0], &[1.0, 1.0], Similarity::Cosine, None).unwrap();
        assert!((c - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            similarity(&[1.0], &[1.0, 2.0], Similarity::Dot, None),
            Err(Error::DimMismatch { .. })
        ));
        assert!(similarity(&[1.0], &[1.0], Similarity::Mahalanobis, None).is_err());
    }

    #[test]
    fn mahalanobis_with_identity_like_covariance() {
        // four points with covariance diag(2/3, 2/3)
        let pts: Vec<&[f64]> = vec![&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]];
        let m = Mahalanobis::fit(&pts).unwrap();
        let d = m.distance(&[0.0, 0.0], &[1.0, 0.0]);
        let expected = (1.0 / (2.0 / 3.0 + MAHALANOBIS_RIDGE)).sqrt();
        assert!((d - expected).abs() < 1e-12);
        assert!(Mahalanobis::fit(&pts[..2]).is_err());
    }

    fn hand_store() -> EmbeddingStore {
        store(&[
            ("u1", &[1.0, 0.0]),
            ("u2", &[0.0, 1.0]),
            ("u3", &[1.0, 1.0]),
            ("l1", &[1.0, 0.0]),
        ])
    }

    #[test]
    fn idds_hand_example() {
        let s = hand_store();
        let u = ids(&["u1", "u2", "u3"]);
        let cfg = IddsConfig::default();
        let out = idds_scores(&ids(&["u3"]), &u, &ids(&["l1"]), &s, &cfg).unwrap();
        // 0.67 * (1 + 1 + 2) / 3 - 0.33 * 1
        assert!((out[0].value - 0.563_333_333_333_333_3).abs() < 1e-12);
        assert_eq!(out[0].strategy, Strategy::Idds);

        let pure = IddsConfig { lambda: 1.0, ..cfg };
        let out = idds_scores(&ids(&["u3"]), &u, &ids(&["l1"]), &s, &pure).unwrap();
        assert!((out[0].value - 4.0 / 3.0).abs() < 1e-12);

        let out = idds_scores(&ids(&["u3"]), &u, &[], &s, &cfg).unwrap();
        assert!((out[0].value - 0.67 * 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn idds_max_aggregation_and_normalize() {
        let s = hand_store();
        let u = ids(&["u1", "u2", "u3"]);
        let cfg = IddsConfig {
            lambda: 0.5,
            aggregation: Aggregation::Maximum,
            ..Default::default()
        };
        let out = idds_scores(&ids(&["u1"]), &u, &ids(&["l1"]), &s, &cfg).unwrap();
        // max dot of u1 with pool is 1, with labeled 1
        assert!((out[0].value - 0.0).abs() < 1e-12);

        let cfg = IddsConfig {
            lambda: 1.0,
            normalize: true,
            ..Default::default()
        };
        let out = idds_scores(&ids(&["u3"]), &u, &[], &s, &cfg).unwrap();
        let r = 0.5f64.sqrt();
        assert!((out[0].value - (r + r + 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn idds_errors() {
        let s = hand_store();
        let cfg = IddsConfig::default();
        assert!(matches!(
            idds_scores(&[], &[], &[], &s, &cfg),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            idds_scores(&ids(&["zz"]), &ids(&["zz"]), &[], &s, &cfg),
            Err(Error::MissingEmbedding { .. })
        ));
        assert!(idds_scores(&ids(&["l1"]), &ids(&["u1"]), &[], &s, &cfg).is_err());
        let bad = IddsConfig { lambda: 1.5, ..cfg };
        assert!(idds_scores(&ids(&["u1"]), &ids(&["u1"]), &[], &s, &bad).is_err());
    }

    #[test]
    fn pool_mean_examples() {
        let s = hand_store();
        assert_eq!(pool_mean_vector(&ids(&["u1", "u2"]), &s).unwrap(), vec![0.5, 0.5]);
        assert_eq!(pool_mean_vector(&ids(&["u3"]), &s).unwrap(), vec![1.0, 1.0]);
        assert!(pool_mean_vector(&[], &s).is_err());
    }

    #[test]
    fn mmr_hand_expansion() {
        let s = store(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.0, 1.0]),
            ("c", &[1.0, 1.0]),
            ("l", &[2.0, 1.0]),
        ]);
        let unc: HashMap<String, f64> = [("a", 0.2), ("b", 0.6), ("c", 0.4)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let cfg = MmrConfig {
            lambda: 0.5,
            ..Default::default()
        };
        let out = mmr_scores(&ids(&["a", "b", "c"]), &ids(&["l"]), &s, &unc, &cfg).unwrap();
        // u_hat = 0, 1, 0.5; dots with l = 2, 1, 3 -> s_hat = 0.5, 0, 1
        let expected = [0.5 * 0.0 - 0.5 * 0.5, 0.5 * 1.0 - 0.0, 0.5 * 0.5 - 0.5 * 1.0];
        for (got, want) in values(&out).iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn mmr_limits() {
        let s = store(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.0, 1.0]),
            ("c", &[1.0, 1.0]),
            ("l", &[1.0, 0.2]),
        ]);
        let unc: HashMap<String, f64> = [("a", 0.9), ("b", 0.1), ("c", 0.5)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let cands = ids(&["a", "b", "c"]);

        let only_u = MmrConfig {
            lambda: 1.0,
            ..Default::default()
        };
        let v = values(&mmr_scores(&cands, &ids(&["l"]), &s, &unc, &only_u).unwrap());
        assert!(v[0] > v[2] && v[2] > v[1]);

        let only_s = MmrConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let v = values(&mmr_scores(&cands, &ids(&["l"]), &s, &unc, &only_s).unwrap());
        // dots with l: a = 1, b = 0.2, c = 1.2; least similar ranks first
        assert!(v[1] > v[0] && v[0] > v[2]);

        let constant: HashMap<String, f64> = cands.iter().map(|c| (c.clone(), 0.3)).collect();
        let v = values(&mmr_scores(&cands, &[], &s, &constant, &only_u).unwrap());
        assert_eq!(v, vec![0.0, 0.0, 0.0]);

        let mut missing = unc.clone();
        missing.remove("b");
        assert!(matches!(
            mmr_scores(&cands, &[], &s, &missing, &only_u),
            Err(Error::MissingUncertainty { .. })
        ));
    }

    #[test]
    fn embedding_file_round_trip_and_validation() {
        let s = hand_store();
        let mut buf = Vec::new();
        write_embeddings(&s, &mut buf).unwrap();
        assert_eq!(read_embeddings(buf.as_slice()).unwrap(), s);

        let wrong_dim = "{\"dim\":2,\"count\":1}\n{\"id\":\"a\",\"vector\":[1.0]}\n";
        assert!(matches!(
            read_embeddings(wrong_dim.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let wrong_count = "{\"dim\":1,\"count\":2}\n{\"id\":\"a\",\"vector\":[1.0]}\n";
        assert!(read_embeddings(wrong_count.as_bytes()).is_err());
        let no_header = "{\"id\":\"a\",\"vector\":[1.0]}\n";
        assert!(read_embeddings(no_header.as_bytes()).is_err());
        assert!(read_embeddings("".as_bytes()).is_err());
    }
}
