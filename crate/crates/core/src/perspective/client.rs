use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{CompletedSentence, PerspectiveCategory, PerspectiveError, PerspectiveScores, RecordedStore};
use crate::retry::{with_retry, Attempt, RateGate, RetryPolicy};

pub const DEFAULT_ANALYZER_URL: &str = "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze";

/// HTTP analyzer behind a rate gate. Quota responses (429) back off and
/// retry up to five attempts.
#[derive(Debug)]
pub struct LiveAnalyzer {
    url: String,
    api_key: String,
    client: Client,
    gate: RateGate,
    retry: RetryPolicy,
}

impl LiveAnalyzer {
    pub fn new(url: &str, api_key: &str) -> Result<Self, PerspectiveError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| PerspectiveError::Transport(e.to_string()))?;
        Ok(Self {
            url: url.to_owned(),
            api_key: api_key.to_owned(),
            client,
            gate: RateGate::per_second(1.0),
            retry: RetryPolicy::new(5, Duration::from_secs(1)),
        })
    }

    pub fn with_rate_limit(mut self, requests_per_second: f64) -> Self {
        self.gate = RateGate::per_second(requests_per_second);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn request_body(text: &str) -> Value {
        let attributes: serde_json::Map<String, Value> = PerspectiveCategory::ALL
            .into_iter()
            .map(|c| (c.api_name().to_owned(), json!({})))
            .collect();
        json!({
            "comment": { "text": text },
            "languages": ["en"],
            "requestedAttributes": attributes,
        })
    }

    fn parse_response(body: &Value) -> Result<PerspectiveScores, PerspectiveError> {
        let score = |c: PerspectiveCategory| {
            body.pointer(&format!("/attributeScores/{}/summaryScore/value", c.api_name()))
                .and_then(Value::as_f64)
                .ok_or(PerspectiveError::MissingAttribute(c.label()))
        };
        let scores = PerspectiveScores {
            toxicity: score(PerspectiveCategory::Toxicity)?,
            insult: score(PerspectiveCategory::Insult)?,
            profanity: score(PerspectiveCategory::Profanity)?,
            identity_attack: score(PerspectiveCategory::IdentityAttack)?,
            threat: score(PerspectiveCategory::Threat)?,
        };
        scores.validate()?;
        Ok(scores)
    }

    pub fn analyze(&self, text: &str) -> Result<PerspectiveScores, PerspectiveError> {
        let body = Self::request_body(text);
        let attempts = self.retry.max_attempts;
        let value: Value = with_retry(&self.retry, |attempt| {
            self.gate.wait();
            let resp = self
                .client
                .post(&self.url)
                .query(&[("key", self.api_key.as_str())])
                .json(&body)
                .send();
            match resp {
                Ok(r) if r.status().is_success() => r
                    .json::<Value>()
                    .map_err(|e| Attempt::Fail(PerspectiveError::Transport(e.to_string()))),
                Ok(r) if r.status() == StatusCode::TOO_MANY_REQUESTS => {
                    tracing::debug!(attempt, "analyzer quota hit, backing off");
                    Err(Attempt::Retry(PerspectiveError::Quota { attempts }))
                }
                Ok(r) => Err(Attempt::Fail(PerspectiveError::Refused {
                    status: r.status().as_u16(),
                    body: r.text().unwrap_or_default(),
                })),
                Err(e) => Err(Attempt::Retry(PerspectiveError::Transport(e.to_string()))),
            }
        })?;
        Self::parse_response(&value)
    }
}

/// Scores completed sentences from, in order: the in-process cache, the
/// recorded store, then the live analyzer if one is configured. Live
/// responses are written back to the recorded store.
#[derive(Debug)]
pub struct PerspectiveClient {
    cache: RwLock<HashMap<String, PerspectiveScores>>,
    recorded: Arc<RecordedStore>,
    live: Option<LiveAnalyzer>,
}

impl PerspectiveClient {
    /// Network-free client answering only from `store`.
    pub fn recorded(store: Arc<RecordedStore>) -> Self {
        Self {
            cache: RwLock::default(),
            recorded: store,
            live: None,
        }
    }

    pub fn live(analyzer: LiveAnalyzer, store: Arc<RecordedStore>) -> Self {
        Self {
            cache: RwLock::default(),
            recorded: store,
            live: Some(analyzer),
        }
    }

    pub fn is_live(&self) -> bool {
        self.live.is_some()
    }

    pub fn analyze(&self, sentence: &CompletedSentence) -> Result<PerspectiveScores, PerspectiveError> {
        let text = sentence.text.as_str();
        if let Some(hit) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(text) {
            return Ok(*hit);
        }
        let scores = match self.recorded.get(text) {
            Some(s) => s,
            None => match &self.live {
                Some(live) => {
                    let s = live.analyze(text)?;
                    self.recorded.record(text, s)?;
                    s
                }
                None => {
                    return Err(PerspectiveError::MissingRecord {
                        text: text.to_owned(),
                    })
                }
            },
        };
        self.cache
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(text.to_owned(), scores);
        Ok(scores)
    }
}
