//! JSON-over-HTTP POST with bearer auth and exponential-backoff retries.

use std::thread;
use std::time::Duration;

use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct JsonClient {
    agent: Agent,
    token: Option<String>,
    max_retries: u32,
    backoff: Duration,
}

impl JsonClient {
    pub(crate) fn new(
        timeout: Duration,
        token: Option<String>,
        max_retries: u32,
        backoff: Duration,
    ) -> Self {
        let config = Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        Self {
            agent: Agent::new_with_config(config),
            token: token.filter(|t| !t.is_empty()),
            max_retries,
            backoff,
        }
    }

    /// Reads a bearer token from `var`, if set and non-empty.
    pub(crate) fn token_from_env(var: &str) -> Option<String> {
        std::env::var(var).ok().filter(|t| !t.is_empty())
    }

    fn post_once<B: Serialize, T: DeserializeOwned>(&self, url: &str, body: &B) -> Result<T> {
        let mut req = self.agent.post(url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Error::ProviderUnavailable(format!("POST {url}: {e}")))?;
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| Error::ProviderUnavailable(format!("POST {url}: malformed body: {e}")))
    }

    /// Posts `body`, retrying the whole request up to `max_retries` times.
    pub(crate) fn post<B: Serialize, T: DeserializeOwned>(&self, url: &str, body: &B) -> Result<T> {
        let mut attempt = 0u32;
        loop {
            match self.post_once(url, body) {
                Ok(v) => return Ok(v),
                Err(e) if attempt < self.max_retries => {
                    let delay = self.backoff.saturating_mul(1u32 << attempt.min(16));
                    warn!(
                        "{e}; retry {} of {} in {delay:?}",
                        attempt + 1,
                        self.max_retries
                    );
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Joins a base URL and a path segment with exactly one slash.
pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!(
        "{}/{}",
        base.trim_end_matches('/'),
        path.trim_start_matches('/')
    )
}
