use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, BackendRequest, BackendResponse, ChatBackend};

static REQUESTS_SENT: AtomicUsize = AtomicUsize::new(0);

/// HTTP requests issued by every [`HttpBackend`] in this process.
pub fn requests_sent() -> usize {
    REQUESTS_SENT.load(Ordering::SeqCst)
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// Chat-completions style endpoint: POST `{model, messages, temperature}`,
/// read `choices[0].message.content`.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<set>"))
            .finish()
    }
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build();
        HttpBackend { agent: ureq::Agent::new_with_config(config), endpoint: endpoint.into(), model: model.into(), api_key }
    }

    /// Reads the key from the environment variable `key_env`. The error
    /// names the variable, never a value.
    pub fn from_env(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        key_env: &str,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let key = std::env::var(key_env)
            .map_err(|_| BackendError::Fatal(format!("environment variable {key_env} is not set")))?;
        Ok(Self::new(endpoint, model, Some(key), timeout))
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let body = WireRequest {
            model: &request.model,
            messages: request.messages.iter().map(|m| WireMessage { role: m.role.as_str(), content: &m.content }).collect(),
            temperature: request.temperature,
        };
        let mut call = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        REQUESTS_SENT.fetch_add(1, Ordering::SeqCst);
        let mut response = call.send_json(&body).map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if status != 200 {
            return Err(BackendError::Fatal(format!("HTTP {status}")));
        }
        let parsed: WireResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Fatal(format!("malformed response: {e}")))?;
        let choice = parsed.choices.into_iter().next().ok_or_else(|| BackendError::Fatal("response has no choices".into()))?;
        let text = choice.message.content.unwrap_or_default();
        if text.is_empty() {
            return Err(BackendError::Fatal("empty assistant text".into()));
        }
        Ok(BackendResponse { text, finish: choice.finish_reason.unwrap_or_else(|| "stop".into()) })
    }

    fn descriptor(&self) -> String {
        format!("http:{}", self.model)
    }
}
