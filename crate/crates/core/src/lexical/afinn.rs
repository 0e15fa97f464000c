use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::LexiconError;
use crate::predictor::PredictionSet;

/// Word valence lexicon, integer scores in [-5, 5].
#[derive(Debug, Clone, Default)]
pub struct AfinnLexicon {
    scores: HashMap<String, i8>,
}

impl AfinnLexicon {
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// `word<TAB>score` per line. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self, LexiconError> {
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let invalid = |message: String| LexiconError::Invalid {
                path: path.to_owned(),
                line: i + 1,
                message,
            };
            let (word, score) = line
                .rsplit_once('\t')
                .ok_or_else(|| invalid("expected word<TAB>score".into()))?;
            let score: i8 = score
                .trim()
                .parse()
                .map_err(|_| invalid(format!("score {score:?} is not an integer")))?;
            if !(-5..=5).contains(&score) {
                return Err(invalid(format!("score {score} outside [-5, 5]")));
            }
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(invalid("empty word".into()));
            }
            scores.insert(word, score);
        }
        Ok(Self { scores })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, i8)>) -> Self {
        Self {
            scores: pairs
                .into_iter()
                .map(|(w, s)| (w.to_lowercase(), s.clamp(-5, 5)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Score of a normalized word; absent words are neutral (0).
    pub fn word(&self, word: &str) -> i8 {
        self.scores.get(word).copied().unwrap_or(0)
    }
}

/// Mean AFINN score over the predicted words of one sentence.
pub fn afinn_sentence(lex: &AfinnLexicon, predictions: &PredictionSet) -> f64 {
    let words = &predictions.predictions;
    if words.is_empty() {
        return 0.0;
    }
    let total: i64 = words.iter().map(|p| i64::from(lex.word(&p.token))).sum();
    total as f64 / words.len() as f64
}

/// Absolute value of the mean per-sentence score, rescaled from [-5, 5] to
/// [0, 100].
pub fn afinn_aggregate(per_sentence_means: &[f64]) -> Result<f64, LexiconError> {
    if per_sentence_means.is_empty() {
        return Err(LexiconError::EmptyAggregate("AFINN sentence means"));
    }
    let mean = per_sentence_means.iter().sum::<f64>() / per_sentence_means.len() as f64;
    Ok(mean.abs() * 20.0)
}
