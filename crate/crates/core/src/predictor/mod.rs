//! Top-k mask completions from a pluggable source, with a persistent cache
//! that doubles as a deterministic replay store.

mod cache;
mod remote;

pub use cache::{text_hash, CacheFileError, CacheKey, PredictionCache, ReplayRecord};
pub use remote::RemoteSource;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexical::normalize_token;
use crate::templates::{Dataset, MaskedSentence, MASK};

pub const DEFAULT_CONCURRENCY: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("top-k must be 1 or 5, got {0}")]
    InvalidK(usize),
    #[error("sentence {sentence_id} has {masks} mask tokens, expected 1")]
    BadSentence { sentence_id: usize, masks: usize },
    #[error("prediction source unavailable: {0}")]
    Unavailable(String),
    #[error("source rejected the sentence (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    Schema(String),
    #[error("sentence {sentence_id}: {got} usable candidates, need {wanted}")]
    TooFewCandidates {
        sentence_id: usize,
        wanted: usize,
        got: usize,
    },
    #[error("replay miss for (model {model}, sentence {sentence_id}, k {k})")]
    ReplayMiss {
        model: String,
        sentence_id: usize,
        k: usize,
    },
}

impl PredictError {
    /// Short code used in coverage reports.
    pub fn reason_code(&self) -> &'static str {
        match self {
            Self::InvalidK(_) => "invalid-k",
            Self::BadSentence { .. } => "bad-sentence",
            Self::Unavailable(_) => "source-unavailable",
            Self::Rejected { .. } => "source-rejected",
            Self::Schema(_) => "schema-violation",
            Self::TooFewCandidates { .. } => "too-few-candidates",
            Self::ReplayMiss { .. } => "replay-miss",
        }
    }
}

/// Number of completions requested per sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TopK(usize);

impl TopK {
    pub const ONE: TopK = TopK(1);
    pub const FIVE: TopK = TopK(5);

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for TopK {
    type Error = PredictError;

    fn try_from(k: usize) -> Result<Self, Self::Error> {
        match k {
            1 | 5 => Ok(TopK(k)),
            other => Err(PredictError::InvalidK(other)),
        }
    }
}

impl std::str::FromStr for TopK {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k: usize = s
            .trim()
            .parse()
            .map_err(|_| PredictError::Schema(format!("top-k must be 1 or 5, got {s:?}")))?;
        TopK::try_from(k)
    }
}

impl From<TopK> for usize {
    fn from(k: TopK) -> usize {
        k.0
    }
}

impl fmt::Display for TopK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub token: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub sentence_id: usize,
    pub model_id: String,
    pub k: usize,
    pub predictions: Vec<Prediction>,
}

/// Probability descending, then token ascending.
fn rank_order(a: &Prediction, b: &Prediction) -> Ordering {
    b.probability
        .partial_cmp(&a.probability)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.token.cmp(&b.token))
}

/// A candidate as returned by a source, before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCandidate {
    pub token: String,
    pub score: f64,
}

impl RawCandidate {
    pub fn new(token: impl Into<String>, score: f64) -> Self {
        Self {
            token: token.into(),
            score,
        }
    }

    /// WordPiece (`##x`) and BERTweet BPE (`x@@`) continuation pieces.
    fn is_fragment(&self) -> bool {
        let t = self.token.trim();
        t.starts_with("##") || t.ends_with("@@")
    }
}

/// Something that can fill a single `[MASK]`. Implementations may return
/// more than `top_k` candidates, in any order.
pub trait PredictionSource: Send + Sync {
    fn fill_mask(&self, text: &str, model: &str, top_k: usize) -> Result<Vec<RawCandidate>, PredictError>;
}

/// Normalizes, filters and ranks raw candidates into a set of exactly `k`.
///
/// Fragments, multi-word tokens and tokens that normalize to nothing are
/// dropped; duplicates keep their highest score.
pub fn finalize(
    sentence_id: usize,
    model_id: &str,
    k: TopK,
    raw: Vec<RawCandidate>,
) -> Result<PredictionSet, PredictError> {
    let mut best: HashMap<String, f64> = HashMap::new();
    for cand in raw {
        if !cand.score.is_finite() || !(0.0..=1.0).contains(&cand.score) {
            return Err(PredictError::Schema(format!(
                "score {} for {:?} outside [0, 1]",
                cand.score, cand.token
            )));
        }
        if cand.is_fragment() {
            continue;
        }
        let Ok(token) = normalize_token(&cand.token) else {
            continue;
        };
        if token.contains(char::is_whitespace) {
            continue;
        }
        let slot = best.entry(token).or_insert(cand.score);
        if cand.score > *slot {
            *slot = cand.score;
        }
    }
    let mut predictions: Vec<Prediction> = best
        .into_iter()
        .map(|(token, probability)| Prediction { token, probability })
        .collect();
    predictions.sort_by(rank_order);
    if predictions.len() < k.get() {
        return Err(PredictError::TooFewCandidates {
            sentence_id,
            wanted: k.get(),
            got: predictions.len(),
        });
    }
    predictions.truncate(k.get());
    Ok(PredictionSet {
        sentence_id,
        model_id: model_id.to_owned(),
        k: k.get(),
        predictions,
    })
}

/// Returns the same candidates for every sentence.
#[derive(Debug, Clone)]
pub struct StubSource {
    candidates: Vec<RawCandidate>,
}

impl StubSource {
    pub fn new(candidates: Vec<RawCandidate>) -> Self {
        Self { candidates }
    }

    /// Candidates in the given order with strictly decreasing scores.
    pub fn ranked<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let candidates = tokens
            .into_iter()
            .enumerate()
            .map(|(i, t)| RawCandidate::new(t, 0.5 / (i + 1) as f64))
            .collect();
        Self { candidates }
    }
}

impl PredictionSource for StubSource {
    fn fill_mask(&self, _text: &str, _model: &str, _top_k: usize) -> Result<Vec<RawCandidate>, PredictError> {
        Ok(self.candidates.clone())
    }
}

/// Per-sentence lookup table keyed by the exact masked text.
#[derive(Debug, Clone, Default)]
pub struct TableSource {
    table: HashMap<String, Vec<RawCandidate>>,
}

impl TableSource {
    pub fn insert(&mut self, text: impl Into<String>, candidates: Vec<RawCandidate>) {
        self.table.insert(text.into(), candidates);
    }
}

impl PredictionSource for TableSource {
    fn fill_mask(&self, text: &str, _model: &str, _top_k: usize) -> Result<Vec<RawCandidate>, PredictError> {
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| PredictError::Rejected {
                status: 404,
                body: format!("no entry for {text:?}"),
            })
    }
}

/// Front end combining a source with the cache. Without a source the
/// predictor is in replay mode and answers only from the cache.
pub struct Predictor {
    source: Option<Arc<dyn PredictionSource>>,
    cache: Arc<PredictionCache>,
    concurrency: usize,
}

impl Predictor {
    pub fn new(source: Arc<dyn PredictionSource>, cache: Arc<PredictionCache>) -> Self {
        Self {
            source: Some(source),
            cache,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }

    pub fn replay(cache: Arc<PredictionCache>) -> Self {
        Self {
            source: None,
            cache,
            concurrency: DEFAULT_CONCURRENCY,
        }
    }

    pub fn with_concurrency(mut self, in_flight: usize) -> Self {
        self.concurrency = in_flight.max(1);
        self
    }

    pub fn cache(&self) -> &PredictionCache {
        &self.cache
    }

    pub fn predict_top_k(&self, sentence: &MaskedSentence, model_id: &str, k: TopK) -> Result<PredictionSet, PredictError> {
        let masks = sentence.text.matches(MASK).count();
        if masks != 1 {
            return Err(PredictError::BadSentence {
                sentence_id: sentence.sentence_id,
                masks,
            });
        }
        let key = CacheKey::new(model_id, sentence.sentence_id, k);
        if let Some(hit) = self.cache.get(&key, &sentence.text) {
            return Ok(hit);
        }
        let Some(source) = &self.source else {
            return Err(PredictError::ReplayMiss {
                model: model_id.to_owned(),
                sentence_id: sentence.sentence_id,
                k: k.get(),
            });
        };
        let raw = source.fill_mask(&sentence.text, model_id, k.get())?;
        let set = finalize(sentence.sentence_id, model_id, k, raw)?;
        self.cache
            .put(&sentence.text, set.clone())
            .map_err(|e| PredictError::Unavailable(format!("cache write failed: {e}")))?;
        Ok(set)
    }

    /// Predicts every sentence with at most `concurrency` requests in flight.
    /// Results come back in dataset order.
    pub fn predict_all(
        &self,
        dataset: &Dataset,
        model_id: &str,
        k: TopK,
    ) -> Vec<(usize, Result<PredictionSet, PredictError>)> {
        let run = || {
            dataset
                .sentences
                .par_iter()
                .map(|s| (s.sentence_id, self.predict_top_k(s, model_id, k)))
                .collect()
        };
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.concurrency)
            .build()
        {
            Ok(pool) => pool.install(run),
            Err(_) => dataset
                .sentences
                .iter()
                .map(|s| (s.sentence_id, self.predict_top_k(s, model_id, k)))
                .collect(),
        }
    }
}
