//! Client for an HTTP embedding service.
//!
//! `POST {endpoint}/embed` with `{"model_id", "texts"}`; the service answers
//! `{"dim", "embeddings"}` aligned index-for-index with `texts`. Texts are
//! sent in batches of `batch_size`, at most `max_in_flight` batches at once.
//! A failed batch is retried whole (embedding is side-effect free).

use std::thread;

use serde::{Deserialize, Serialize};

use crate::corpus::Definition;
use crate::error::{Error, Result};
use crate::http::{join_url, JsonClient};

use super::{EmbeddingProvider, ProviderConfig};

/// Environment variable holding the embedding service bearer token.
pub const EMBED_TOKEN_ENV: &str = "EMBED_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub model_id: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    url: String,
    model_id: String,
    batch_size: usize,
    max_in_flight: usize,
    client: JsonClient,
}

impl RemoteEmbedder {
    pub fn from_config(config: &ProviderConfig) -> Result<Self> {
        let endpoint = config
            .endpoint
            .as_deref()
            .filter(|e| !e.is_empty())
            .ok_or_else(|| Error::InvalidConfig("remote provider requires an endpoint".into()))?;
        if config.batch_size == 0 || config.max_in_flight == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and max_in_flight must be at least 1".into(),
            ));
        }
        Ok(Self {
            url: join_url(endpoint, "embed"),
            model_id: config.model_id.clone(),
            batch_size: config.batch_size,
            max_in_flight: config.max_in_flight,
            client: JsonClient::new(
                config.timeout,
                JsonClient::token_from_env(EMBED_TOKEN_ENV),
                config.max_retries,
                config.retry_backoff,
            ),
        })
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let req = EmbedRequest {
            model_id: self.model_id.clone(),
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let resp: EmbedResponse = self.client.post(&self.url, &req)?;
        if resp.embeddings.len() != texts.len() {
            return Err(Error::ProviderUnavailable(format!(
                "service returned {} embeddings for {} texts",
                resp.embeddings.len(),
                texts.len()
            )));
        }
        for (i, e) in resp.embeddings.iter().enumerate() {
            if e.len() != resp.dim {
                return Err(Error::DimensionMismatch {
                    expected: resp.dim,
                    actual: e.len(),
                    context: format!("remote embedding {i} of batch"),
                });
            }
        }
        Ok(resp.embeddings)
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, defs: &[&Definition]) -> Result<Vec<Vec<f64>>> {
        let texts: Vec<&str> = defs.iter().map(|d| d.text.as_str()).collect();
        let batches: Vec<&[&str]> = texts.chunks(self.batch_size).collect();
        let mut results: Vec<Option<Vec<Vec<f64>>>> = vec![None; batches.len()];

        for (wave_idx, wave) in batches.chunks(self.max_in_flight).enumerate() {
            let outcomes: Vec<Result<Vec<Vec<f64>>>> = thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| s.spawn(move || self.embed_batch(batch)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding worker panicked"))
                    .collect()
            });
            for (offset, outcome) in outcomes.into_iter().enumerate() {
                results[wave_idx * self.max_in_flight + offset] = Some(outcome?);
            }
        }

        let out: Vec<Vec<f64>> = results.into_iter().flatten().flatten().collect();
        if let Some(first) = out.first() {
            if let Some((i, bad)) = out.iter().enumerate().find(|(_, v)| v.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    actual: bad.len(),
                    context: format!("remote embedding for {:?}", defs[i].id),
                });
            }
        }
        Ok(out)
    }
}
