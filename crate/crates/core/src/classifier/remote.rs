//! HTTP adapter for transformer classification backends.
//!
//! Protocol: `POST {endpoint}/classify` with `{"texts": [...]}`; the
//! backend answers `{"labels": [...], "scores": [[p_neg, p_neu,
//! p_pos], ...]}`. Requests go out in bounded batches and results are
//! reassembled in input order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, LabelDistribution, TextClassifier};
use crate::corpus::Label;

/// Connection settings for a classification backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteBackendConfig {
    /// Base URL; the adapter posts to `{endpoint}/classify`.
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Retries after the first attempt, for transport errors and 5xx.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_retries() -> u32 {
    2
}

fn default_batch_size() -> usize {
    32
}

impl RemoteBackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteBackendConfig {
            endpoint: endpoint.into(),
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            batch_size: default_batch_size(),
        }
    }
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct ClassifyResponse {
    labels: Vec<String>,
    scores: Vec<Vec<f64>>,
}

/// A classification backend reached over HTTP.
pub struct RemoteBackend {
    config: RemoteBackendConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteBackendConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        RemoteBackend { config, agent }
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<LabelDistribution>, ClassifierError> {
        let url = format!(
            "{}/classify",
            self.config.endpoint.trim_end_matches('/')
        );
        let attempts = self.config.retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50));
            }
            let body = serde_json::to_value(ClassifyRequest { texts })
                .expect("request serializes");
            match self.agent.post(&url).send_json(body) {
                Ok(response) => {
                    let parsed: ClassifyResponse = response.into_json().map_err(|e| {
                        ClassifierError::ProtocolViolation {
                            reason: format!("unparseable response body: {e}"),
                        }
                    })?;
                    return validate_response(parsed, texts.len());
                }
                Err(ureq::Error::Status(code, _)) if code < 500 => {
                    return Err(ClassifierError::ProtocolViolation {
                        reason: format!("backend answered HTTP {code}"),
                    });
                }
                Err(err) => {
                    last_error = err.to_string();
                }
            }
        }
        Err(ClassifierError::BackendUnavailable {
            attempts,
            reason: last_error,
        })
    }
}

fn validate_response(
    response: ClassifyResponse,
    expected: usize,
) -> Result<Vec<LabelDistribution>, ClassifierError> {
    if response.labels.len() != expected || response.scores.len() != expected {
        return Err(ClassifierError::ProtocolViolation {
            reason: format!(
                "expected {expected} results, got {} labels and {} score rows",
                response.labels.len(),
                response.scores.len()
            ),
        });
    }
    for value in &response.labels {
        if Label::parse(value).is_none() {
            return Err(ClassifierError::ProtocolViolation {
                reason: format!("unknown label `{value}`"),
            });
        }
    }
    let mut distributions = Vec::with_capacity(expected);
    for row in response.scores {
        if row.len() != 3 {
            return Err(ClassifierError::ProtocolViolation {
                reason: format!("score row has {} entries, expected 3", row.len()),
            });
        }
        let dist = LabelDistribution {
            probs: [row[0], row[1], row[2]],
        };
        if !dist.is_valid(1e-6) {
            return Err(ClassifierError::ProtocolViolation {
                reason: format!("scores {:?} are not a probability distribution", dist.probs),
            });
        }
        distributions.push(dist);
    }
    Ok(distributions)
}

impl TextClassifier for RemoteBackend {
    fn classify(&self, texts: &[String]) -> Result<Vec<LabelDistribution>, ClassifierError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.batch_size.max(1)) {
            out.extend(self.classify_batch(chunk)?);
        }
        Ok(out)
    }
}

/// One-shot batched classification against a backend.
pub fn predict_remote(
    config: &RemoteBackendConfig,
    texts: &[String],
) -> Result<Vec<LabelDistribution>, ClassifierError> {
    RemoteBackend::new(config.clone()).classify(texts)
}
