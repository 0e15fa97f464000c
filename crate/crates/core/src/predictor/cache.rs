use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{rank_order, Prediction, PredictionSet, TopK};

/// Lowercase hex SHA-256 of `text`.
pub fn text_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey {
    pub model: String,
    pub sentence_id: usize,
    pub k: usize,
}

impl CacheKey {
    pub fn new(model: &str, sentence_id: usize, k: TopK) -> Self {
        Self {
            model: model.to_owned(),
            sentence_id,
            k: k.get(),
        }
    }
}

/// One line of a replay/cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub model: String,
    pub sentence_id: usize,
    pub k: TopK,
    pub predictions: Vec<(String, f64)>,
    /// Hash of the masked sentence the record was produced for. Records
    /// without it match on `(model, sentence_id, k)` alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_hash: Option<String>,
}

impl ReplayRecord {
    fn into_entry(self) -> Result<(CacheKey, Entry), String> {
        if self.predictions.len() != self.k.get() {
            return Err(format!(
                "{} predictions for k = {}",
                self.predictions.len(),
                self.k
            ));
        }
        let mut predictions = Vec::with_capacity(self.predictions.len());
        for (token, probability) in self.predictions {
            if token.trim().is_empty() {
                return Err("empty token".into());
            }
            if !probability.is_finite() || !(0.0..=1.0).contains(&probability) {
                return Err(format!("probability {probability} outside [0, 1]"));
            }
            predictions.push(Prediction { token, probability });
        }
        predictions.sort_by(rank_order);
        let key = CacheKey {
            model: self.model.clone(),
            sentence_id: self.sentence_id,
            k: self.k.get(),
        };
        let set = PredictionSet {
            sentence_id: self.sentence_id,
            model_id: self.model,
            k: self.k.get(),
            predictions,
        };
        Ok((
            key,
            Entry {
                text_hash: self.text_hash,
                set,
            },
        ))
    }

    fn from_entry(entry: &Entry) -> Self {
        Self {
            model: entry.set.model_id.clone(),
            sentence_id: entry.set.sentence_id,
            k: TopK::try_from(entry.set.k).expect("cached sets have a valid k"),
            predictions: entry
                .set
                .predictions
                .iter()
                .map(|p| (p.token.clone(), p.probability))
                .collect(),
            text_hash: entry.text_hash.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    text_hash: Option<String>,
    set: PredictionSet,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Append-only prediction store. Reads are concurrent; writes are serialized
/// and, when a backing file is attached, appended to it immediately.
#[derive(Debug, Default)]
pub struct PredictionCache {
    entries: RwLock<HashMap<CacheKey, Entry>>,
    sink: Option<Mutex<BufWriter<File>>>,
}

impl PredictionCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads a replay file; the resulting cache never writes anywhere.
    pub fn replay_load(path: &Path) -> Result<Self, CacheFileError> {
        let entries = read_records(path)?;
        Ok(Self {
            entries: RwLock::new(entries),
            sink: None,
        })
    }

    /// Opens (or creates) a cache file: existing records are loaded and new
    /// ones are appended as they arrive.
    pub fn open(path: &Path) -> Result<Self, CacheFileError> {
        let entries = if path.exists() {
            read_records(path)?
        } else {
            HashMap::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| CacheFileError::Io {
                path: path.to_owned(),
                source,
            })?;
        Ok(Self {
            entries: RwLock::new(entries),
            sink: Some(Mutex::new(BufWriter::new(file))),
        })
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, HashMap<CacheKey, Entry>> {
        self.entries.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Exact-match lookup. A stored text hash that disagrees with `text`
    /// counts as a miss.
    pub fn get(&self, key: &CacheKey, text: &str) -> Option<PredictionSet> {
        let entries = self.read();
        let entry = entries.get(key)?;
        match &entry.text_hash {
            Some(h) if *h != text_hash(text) => {
                tracing::warn!(
                    model = %key.model,
                    sentence_id = key.sentence_id,
                    "cached prediction was made for a different sentence text"
                );
                None
            }
            _ => Some(entry.set.clone()),
        }
    }

    pub fn get_by_key(&self, key: &CacheKey) -> Option<PredictionSet> {
        self.read().get(key).map(|e| e.set.clone())
    }

    pub fn put(&self, text: &str, set: PredictionSet) -> io::Result<()> {
        let key = CacheKey {
            model: set.model_id.clone(),
            sentence_id: set.sentence_id,
            k: set.k,
        };
        let entry = Entry {
            text_hash: Some(text_hash(text)),
            set,
        };
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if let Some(sink) = &self.sink {
            let mut sink = sink.lock().unwrap_or_else(|e| e.into_inner());
            serde_json::to_writer(&mut *sink, &ReplayRecord::from_entry(&entry))?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        entries.insert(key, entry);
        Ok(())
    }

    /// All records sorted by `(model, sentence_id, k)`.
    pub fn records(&self) -> Vec<ReplayRecord> {
        let entries = self.read();
        let mut keys: Vec<&CacheKey> = entries.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| ReplayRecord::from_entry(&entries[k]))
            .collect()
    }

    /// Rewrites `path` with every record in sorted order.
    pub fn save(&self, path: &Path) -> Result<(), CacheFileError> {
        let io = |source| CacheFileError::Io {
            path: path.to_owned(),
            source,
        };
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp).map_err(io)?);
            for r in self.records() {
                serde_json::to_writer(&mut out, &r).map_err(|e| io(e.into()))?;
                out.write_all(b"\n").map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
        std::fs::rename(&tmp, path).map_err(io)
    }
}

fn read_records(path: &Path) -> Result<HashMap<CacheKey, Entry>, CacheFileError> {
    let file = File::open(path).map_err(|source| CacheFileError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut entries = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CacheFileError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CacheFileError::Record {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let record: ReplayRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let (key, entry) = record.into_entry().map_err(bad)?;
        entries.insert(key, entry);
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(id: usize, tokens: &[(&str, f64)]) -> PredictionSet {
        PredictionSet {
            sentence_id: id,
            model_id: "bert".into(),
            k: tokens.len(),
            predictions: tokens
                .iter()
                .map(|(t, p)| Prediction {
                    token: (*t).into(),
                    probability: *p,
                })
                .collect(),
        }
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            text_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn store_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let original = set(3, &[("nurse", 0.4)]);
        {
            let cache = PredictionCache::open(&path).unwrap();
            cache.put("he is a [MASK].", original.clone()).unwrap();
        }
        let replay = PredictionCache::replay_load(&path).unwrap();
        let key = CacheKey::new("bert", 3, TopK::ONE);
        assert_eq!(replay.get(&key, "he is a [MASK]."), Some(original));
        assert_eq!(replay.get(&key, "she is a [MASK]."), None);
    }

    #[test]
    fn unknown_key_is_absent() {
        let cache = PredictionCache::in_memory();
        assert!(cache.get(&CacheKey::new("m", 0, TopK::FIVE), "x").is_none());
    }

    #[test]
    fn replay_rejects_wrong_length() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, r#"{"model":"m","sentence_id":0,"k":5,"predictions":[["a",0.1]]}"#).unwrap();
        let err = PredictionCache::replay_load(&path).unwrap_err();
        assert!(matches!(err, CacheFileError::Record { line: 1, .. }), "{err}");
    }

    #[test]
    fn replay_sorts_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(
            &path,
            r#"{"model":"m","sentence_id":0,"k":5,"predictions":[["e",0.1],["d",0.2],["c",0.2],["b",0.4],["a",0.05]]}"#,
        )
        .unwrap();
        let cache = PredictionCache::replay_load(&path).unwrap();
        let got = cache.get_by_key(&CacheKey::new("m", 0, TopK::FIVE)).unwrap();
        let tokens: Vec<_> = got.predictions.iter().map(|p| p.token.as_str()).collect();
        assert_eq!(tokens, ["b", "c", "d", "e", "a"]);
    }

    #[test]
    fn save_is_sorted_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        let cache = PredictionCache::in_memory();
        for id in [5, 1, 3] {
            cache.put(&format!("s{id}"), set(id, &[("x", 0.5)])).unwrap();
        }
        cache.save(&a).unwrap();
        PredictionCache::replay_load(&a).unwrap().save(&b).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
        let ids: Vec<usize> = cache.records().iter().map(|r| r.sentence_id).collect();
        assert_eq!(ids, [1, 3, 5]);
    }
}
