use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{PredictError, PredictionSource, RawCandidate};
use crate::retry::{with_retry, Attempt, RetryPolicy};

#[derive(Serialize)]
struct FillMaskRequest<'a> {
    text: &'a str,
    model: &'a str,
    top_k: usize,
}

#[derive(Deserialize)]
struct FillMaskResponse {
    predictions: Vec<RawCandidate>,
}

#[derive(Deserialize)]
struct HealthResponse {
    status: String,
}

/// HTTP client for the fill-mask sidecar.
#[derive(Debug, Clone)]
pub struct RemoteSource {
    base: String,
    client: Client,
    retry: RetryPolicy,
}

impl RemoteSource {
    pub fn new(endpoint: &str) -> Result<Self, PredictError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| PredictError::Unavailable(e.to_string()))?;
        Ok(Self {
            base: endpoint.trim_end_matches('/').to_owned(),
            client,
            retry: RetryPolicy::new(3, Duration::from_millis(250)),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send(&self, req: reqwest::blocking::RequestBuilder) -> Result<reqwest::blocking::Response, PredictError> {
        with_retry(&self.retry, |attempt| {
            let req = req
                .try_clone()
                .ok_or_else(|| Attempt::Fail(PredictError::Unavailable("request not cloneable".into())))?;
            match req.send() {
                Ok(resp) if resp.status().is_success() => Ok(resp),
                // the sidecar answers 503 while a model is loading
                Ok(resp) if resp.status() == StatusCode::SERVICE_UNAVAILABLE => {
                    tracing::debug!(attempt, "sidecar busy, retrying");
                    Err(Attempt::Retry(PredictError::Unavailable(format!(
                        "HTTP 503: {}",
                        resp.text().unwrap_or_default()
                    ))))
                }
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    Err(Attempt::Fail(PredictError::Rejected {
                        status,
                        body: resp.text().unwrap_or_default(),
                    }))
                }
                Err(e) => {
                    tracing::debug!(attempt, error = %e, "transport error, retrying");
                    Err(Attempt::Retry(PredictError::Unavailable(e.to_string())))
                }
            }
        })
    }

    pub fn health(&self) -> Result<(), PredictError> {
        let resp = self.send(self.client.get(self.url("/v1/health")))?;
        let body: HealthResponse = resp
            .json()
            .map_err(|e| PredictError::Schema(e.to_string()))?;
        if body.status == "ok" {
            Ok(())
        } else {
            Err(PredictError::Unavailable(format!("health status {:?}", body.status)))
        }
    }

    pub fn models(&self) -> Result<Vec<String>, PredictError> {
        let resp = self.send(self.client.get(self.url("/v1/models")))?;
        resp.json().map_err(|e| PredictError::Schema(e.to_string()))
    }
}

impl PredictionSource for RemoteSource {
    fn fill_mask(&self, text: &str, model: &str, top_k: usize) -> Result<Vec<RawCandidate>, PredictError> {
        let req = self
            .client
            .post(self.url("/v1/fill-mask"))
            .json(&FillMaskRequest { text, model, top_k });
        let resp = self.send(req)?;
        let body: FillMaskResponse = resp
            .json()
            .map_err(|e| PredictError::Schema(e.to_string()))?;
        Ok(body.predictions)
    }
}
