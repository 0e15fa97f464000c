//! Word-level scoring: AFINN valence and HurtLex category membership.

mod afinn;
mod hurtlex;

pub use afinn::{afinn_aggregate, afinn_sentence, AfinnLexicon};
pub use hurtlex::{
    hurtlex_aggregate, hurtlex_indicator_share, hurtlex_sentence, HurtlexCategory, HurtlexHits,
    HurtlexLevel,
    HurtlexLexicon, SentenceWordScores,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("token {0:?} is empty after normalization")]
    EmptyToken(String),
    #[error("cannot aggregate an empty list of {0}")]
    EmptyAggregate(&'static str),
}

/// Tokenizer word-boundary markers (SentencePiece, GPT-2 BPE) and the
/// WordPiece continuation marker.
const PREFIX_MARKERS: [&str; 3] = ["\u{2581}", "\u{0120}", "##"];

/// Lowercases, trims and strips tokenizer prefix markers.
pub fn normalize_token(raw: &str) -> Result<String, LexiconError> {
    let mut s = raw.trim();
    while let Some(rest) = PREFIX_MARKERS.iter().find_map(|m| s.strip_prefix(m)) {
        s = rest.trim_start();
    }
    let s = s.trim_end().to_lowercase();
    if s.is_empty() {
        return Err(LexiconError::EmptyToken(raw.to_owned()));
    }
    Ok(s)
}
