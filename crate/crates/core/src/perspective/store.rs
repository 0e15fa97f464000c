use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{PerspectiveError, PerspectiveScores};
use crate::predictor::text_hash;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedEntry {
    pub text_hash: String,
    pub text: String,
    pub scores: PerspectiveScores,
}

/// Analyzer responses pinned to disk, keyed by exact sentence text.
#[derive(Debug, Default)]
pub struct RecordedStore {
    entries: RwLock<HashMap<String, PerspectiveScores>>,
    sink: Option<(PathBuf, Mutex<BufWriter<File>>)>,
}

impl RecordedStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, PerspectiveScores)>) -> Self {
        Self {
            entries: RwLock::new(entries.into_iter().collect()),
            sink: None,
        }
    }

    /// Read-only store.
    pub fn load(path: &Path) -> Result<Self, PerspectiveError> {
        Ok(Self {
            entries: RwLock::new(read_entries(path)?),
            sink: None,
        })
    }

    /// Store that appends newly recorded responses to `path`.
    pub fn open_recording(path: &Path) -> Result<Self, PerspectiveError> {
        let entries = if path.exists() {
            read_entries(path)?
        } else {
            HashMap::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| PerspectiveError::Io {
                path: path.to_owned(),
                source,
            })?;
        Ok(Self {
            entries: RwLock::new(entries),
            sink: Some((path.to_owned(), Mutex::new(BufWriter::new(file)))),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, text: &str) -> Option<PerspectiveScores> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(text)
            .copied()
    }

    pub fn record(&self, text: &str, scores: PerspectiveScores) -> Result<(), PerspectiveError> {
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if let Some((path, sink)) = &self.sink {
            let entry = RecordedEntry {
                text_hash: text_hash(text),
                text: text.to_owned(),
                scores,
            };
            let io = |source| PerspectiveError::Io {
                path: path.clone(),
                source,
            };
            let mut sink = sink.lock().unwrap_or_else(|e| e.into_inner());
            serde_json::to_writer(&mut *sink, &entry).map_err(|e| io(e.into()))?;
            sink.write_all(b"\n").map_err(io)?;
            sink.flush().map_err(io)?;
        }
        entries.insert(text.to_owned(), scores);
        Ok(())
    }
}

fn read_entries(path: &Path) -> Result<HashMap<String, PerspectiveScores>, PerspectiveError> {
    let io = |source| PerspectiveError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let mut entries = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| PerspectiveError::Record {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let entry: RecordedEntry = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if entry.text_hash != text_hash(&entry.text) {
            return Err(bad("text_hash does not match text".into()));
        }
        entry.scores.validate().map_err(|e| bad(e.to_string()))?;
        entries.insert(entry.text, entry.scores);
    }
    Ok(entries)
}
