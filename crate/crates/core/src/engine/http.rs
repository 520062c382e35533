//! Backend adapter for a remote completion-style HTTP API.
//!
//! The wire shape follows the widely deployed completions endpoint: a JSON
//! body with `model`, `prompt`, `temperature`, `top_p`, `max_tokens`, and
//! `stop`, posted to `/v1/completions` under the configured base URL. The
//! request body is byte-stable given identical inputs; see the golden
//! fixture under `tests/golden/`.

use super::{BackendCapabilities, BackendError, GenerationConfig, GeneratorBackend, ProduceRequest};
use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use std::time::Duration;
use tokio::sync::Semaphore;

/// Remote API settings. The auth token is read from the environment at call
/// time and never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApiConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_token_env: String,
    pub request_timeout_secs: u64,
    /// Transport-level retries (HTTP 429/5xx, timeouts). Independent from
    /// the rejection-sampling retry cap.
    pub transport_retries: u32,
    /// `max_tokens` per word of the length constraint.
    pub tokens_per_word: u32,
    /// `max_tokens` when no length constraint is present.
    pub max_tokens_cap: u32,
    /// Concurrent in-flight request limit.
    pub max_in_flight: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            base_url: "http://127.0.0.1:8000".to_string(),
            model_name: "completion-model".to_string(),
            auth_token_env: "REI_API_TOKEN".to_string(),
            request_timeout_secs: 60,
            transport_retries: 2,
            tokens_per_word: 3,
            max_tokens_cap: 256,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    stop: &'a [String],
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Debug, Deserialize)]
struct CompletionChoice {
    text: String,
}

/// Serialize the completion request body. Field order is fixed, so identical
/// inputs give identical bytes.
pub fn build_request_body(
    prompt: &str,
    config: &GenerationConfig,
    api: &ApiConfig,
    stop: &[String],
    length_constraint: Option<u32>,
) -> String {
    let max_tokens = match length_constraint {
        Some(words) => words * api.tokens_per_word,
        None => api.max_tokens_cap,
    };
    serde_json::to_string(&CompletionRequest {
        model: &api.model_name,
        prompt,
        temperature: config.temperature,
        top_p: config.top_p,
        max_tokens,
        stop,
    })
    .expect("request body always serializes")
}

fn completions_url(api: &ApiConfig) -> String {
    format!("{}/v1/completions", api.base_url.trim_end_matches('/'))
}

/// Issue one completion request, with transport-level retries and
/// exponential backoff on 429/5xx and timeouts. The auth token is checked
/// before any request goes out.
pub async fn complete_prompt(
    prompt: &str,
    config: &GenerationConfig,
    api: &ApiConfig,
    stop: &[String],
    length_constraint: Option<u32>,
) -> Result<String, BackendError> {
    let token = std::env::var(&api.auth_token_env).map_err(|_| BackendError::AuthMissing {
        var: api.auth_token_env.clone(),
    })?;
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(api.request_timeout_secs))
        .build()
        .map_err(|e| BackendError::Transport(e.to_string()))?;
    complete_with_client(&client, &token, prompt, config, api, stop, length_constraint).await
}

async fn complete_with_client(
    client: &reqwest::Client,
    token: &str,
    prompt: &str,
    config: &GenerationConfig,
    api: &ApiConfig,
    stop: &[String],
    length_constraint: Option<u32>,
) -> Result<String, BackendError> {
    let body = build_request_body(prompt, config, api, stop, length_constraint);
    let url = completions_url(api);

    let mut last_error = BackendError::Transport("no attempt made".to_string());
    for attempt in 0..=api.transport_retries {
        if attempt > 0 {
            let backoff = Duration::from_millis(100u64 << (attempt - 1).min(6));
            tokio::time::sleep(backoff).await;
        }
        let response = client
            .post(&url)
            .bearer_auth(token)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.clone())
            .send()
            .await;
        match response {
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    let parsed: CompletionResponse = response
                        .json()
                        .await
                        .map_err(|e| BackendError::Transport(e.to_string()))?;
                    return parsed
                        .choices
                        .into_iter()
                        .next()
                        .map(|choice| choice.text)
                        .ok_or_else(|| {
                            BackendError::Transport("completion response had no choices".into())
                        });
                }
                let err = BackendError::Http {
                    status: status.as_u16(),
                };
                // Rate limits and server faults are retriable; other client
                // errors are not.
                if status.as_u16() == 429 || status.is_server_error() {
                    last_error = err;
                    continue;
                }
                return Err(err);
            }
            Err(e) if e.is_timeout() => {
                last_error = BackendError::Timeout;
                continue;
            }
            Err(e) => {
                last_error = BackendError::Transport(e.to_string());
                continue;
            }
        }
    }
    Err(last_error)
}

/// Completion-API backend with an in-flight limit.
pub struct HttpBackend {
    api: ApiConfig,
    stop: Vec<String>,
    client: reqwest::Client,
    limiter: Semaphore,
}

impl HttpBackend {
    pub fn new(api: ApiConfig, stop: Vec<String>) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(api.request_timeout_secs))
            .build()
            .expect("client construction does not fail");
        let limiter = Semaphore::new(api.max_in_flight.max(1));
        HttpBackend {
            api,
            stop,
            client,
            limiter,
        }
    }

    pub fn api(&self) -> &ApiConfig {
        &self.api
    }
}

#[async_trait]
impl GeneratorBackend for HttpBackend {
    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            supports_beam: false,
            concurrent_calls: true,
        }
    }

    async fn produce(
        &self,
        request: &ProduceRequest<'_>,
        config: &GenerationConfig,
    ) -> Result<String, BackendError> {
        let token =
            std::env::var(&self.api.auth_token_env).map_err(|_| BackendError::AuthMissing {
                var: self.api.auth_token_env.clone(),
            })?;
        let _permit = self.limiter.acquire().await.expect("limiter never closed");
        complete_with_client(
            &self.client,
            &token,
            request.prompt,
            config,
            &self.api,
            &self.stop,
            request.document.expr.length_constraint,
        )
        .await
    }
}
