//! Client for external inference services.
//!
//! Wire format: `POST <endpoint>` with `{"texts": [...]}`; the response is
//! `{"predictions": [...]}` holding one object per text, in order.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, Prediction, Scorer};

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("inference request timed out")]
    Timeout,
    #[error("inference service unreachable: {0}")]
    Network(String),
    #[error("inference service returned HTTP {0}")]
    Status(u16),
    #[error("inference response schema error: {0}")]
    Schema(String),
}

#[derive(Serialize)]
struct InferenceRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct InferenceResponse<T> {
    predictions: Vec<T>,
}

#[derive(Deserialize)]
struct HeadProbabilities {
    menacing: f64,
    profiling: f64,
}

#[derive(Debug, Clone)]
pub struct InferenceClient {
    endpoint: String,
    agent: ureq::Agent,
}

impl InferenceClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self::with_timeout(endpoint, Duration::from_secs(30))
    }

    pub fn with_timeout(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Posts `texts` and returns exactly one decoded item per text.
    pub fn infer<T: DeserializeOwned>(&self, texts: &[&str]) -> Result<Vec<T>, ExternalError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(InferenceRequest { texts })
            .map_err(transport_error)?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(ExternalError::Status(status));
        }
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(transport_error)?;
        let parsed: InferenceResponse<T> =
            serde_json::from_str(&body).map_err(|e| ExternalError::Schema(e.to_string()))?;
        if parsed.predictions.len() != texts.len() {
            return Err(ExternalError::Schema(format!(
                "sent {} texts, received {} predictions",
                texts.len(),
                parsed.predictions.len()
            )));
        }
        Ok(parsed.predictions)
    }
}

fn transport_error(e: ureq::Error) -> ExternalError {
    match e {
        ureq::Error::Timeout(_) => ExternalError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => ExternalError::Timeout,
        other => ExternalError::Network(other.to_string()),
    }
}

/// Range-checks a probability coming off the wire.
pub fn checked_probability(value: f64, what: &str, index: usize) -> Result<f64, ExternalError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ExternalError::Schema(format!(
            "prediction {index}: {what} probability {value} outside [0, 1]"
        )))
    }
}

/// External two-head model.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    client: InferenceClient,
}

impl ExternalScorer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            client: InferenceClient::new(endpoint),
        }
    }

    pub fn from_client(client: InferenceClient) -> Self {
        Self { client }
    }
}

impl Scorer for ExternalScorer {
    fn predict_batch(&self, texts: &[&str]) -> Result<Vec<Prediction>, ClassifierError> {
        Ok(external_predict(&self.client, texts)?)
    }
}

pub fn external_predict(
    client: &InferenceClient,
    texts: &[&str],
) -> Result<Vec<Prediction>, ExternalError> {
    client
        .infer::<HeadProbabilities>(texts)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(Prediction {
                p_menacing: checked_probability(p.menacing, "menacing", i)?,
                p_profiling: checked_probability(p.profiling, "profiling", i)?,
            })
        })
        .collect()
}
