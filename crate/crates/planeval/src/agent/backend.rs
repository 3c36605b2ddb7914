//! Model backends: the completion interface the agent stages run against.

use std::collections::VecDeque;
use std::sync::Mutex;

use base64::Engine;
use serde::Deserialize;
use thiserror::Error;

use crate::agent::{ImagePayload, ModelRequest, ModelResponse};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend does not accept image inputs")]
    UnsupportedModality,
    #[error("backend returned an empty response for agent {0:?}")]
    EmptyResponse(String),
    #[error("missing configuration: set the {0} environment variable")]
    MissingConfig(&'static str),
    #[error("no recorded response for agent {agent:?} (request hash {hash})")]
    CassetteMiss { agent: String, hash: String },
    #[error("cassette {0}: {1}")]
    CassetteFormat(String, String),
    #[error("http request failed: {0}")]
    Http(String),
    #[error("unexpected completion payload: {0}")]
    Payload(String),
}

/// A completion provider. Implementations must be safe to call from
/// multiple threads up to [`max_in_flight`](ModelBackend::max_in_flight)
/// requests at once.
pub trait ModelBackend: Send + Sync {
    fn complete(&self, agent: &str, request: &ModelRequest) -> Result<ModelResponse, BackendError>;

    /// Whether requests may carry an image payload.
    fn supports_images(&self) -> bool {
        true
    }

    /// Upper bound on concurrent `complete` calls the backend tolerates.
    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

const ECHO_TAIL_CHARS: usize = 400;

/// Returns the tail of the user prompt. Useful for exercising pipeline
/// plumbing without a model: the reply is never a valid structured answer.
#[derive(Debug, Default)]
pub struct EchoBackend {
    text_only: bool,
}

impl EchoBackend {
    pub fn new() -> EchoBackend {
        EchoBackend { text_only: false }
    }

    /// A variant that rejects image requests.
    pub fn text_only() -> EchoBackend {
        EchoBackend { text_only: true }
    }
}

impl ModelBackend for EchoBackend {
    fn complete(
        &self,
        _agent: &str,
        request: &ModelRequest,
    ) -> Result<ModelResponse, BackendError> {
        if self.text_only && request.image.is_some() {
            return Err(BackendError::UnsupportedModality);
        }
        let chars: Vec<char> = request.user_prompt.chars().collect();
        let start = chars.len().saturating_sub(ECHO_TAIL_CHARS);
        Ok(ModelResponse {
            text: chars[start..].iter().collect(),
        })
    }

    fn supports_images(&self) -> bool {
        !self.text_only
    }
}

/// Pops pre-scripted responses in order, regardless of agent. For tests
/// and cassette recording.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedBackend {
    pub fn new(responses: Vec<String>) -> ScriptedBackend {
        ScriptedBackend {
            responses: Mutex::new(responses.into()),
        }
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(
        &self,
        agent: &str,
        _request: &ModelRequest,
    ) -> Result<ModelResponse, BackendError> {
        self.responses
            .lock()
            .expect("scripted backend lock")
            .pop_front()
            .map(|text| ModelResponse { text })
            .ok_or_else(|| BackendError::EmptyResponse(agent.to_string()))
    }

    fn max_in_flight(&self) -> usize {
        1
    }
}

/// Generic chat-completions-style HTTP backend. Configured entirely from
/// the environment: `MODEL_ENDPOINT`, `MODEL_NAME`, `MODEL_API_KEY`.
pub struct HttpChatBackend {
    endpoint: String,
    model: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpChatBackend {
    /// Omits the API key.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl HttpChatBackend {
    pub fn from_env() -> Result<HttpChatBackend, BackendError> {
        let read = |name: &'static str| {
            std::env::var(name)
                .ok()
                .filter(|v| !v.is_empty())
                .ok_or(BackendError::MissingConfig(name))
        };
        Ok(HttpChatBackend::new(
            read("MODEL_ENDPOINT")?,
            read("MODEL_NAME")?,
            read("MODEL_API_KEY")?,
        ))
    }

    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: impl Into<String>,
    ) -> HttpChatBackend {
        HttpChatBackend {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: api_key.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(std::time::Duration::from_secs(600))
                .build()
                .expect("default TLS client"),
        }
    }

    fn user_content(request: &ModelRequest) -> serde_json::Value {
        match &request.image {
            None => serde_json::Value::String(request.user_prompt.clone()),
            Some(ImagePayload { data, media_type }) => {
                let encoded = base64::engine::general_purpose::STANDARD.encode(data);
                serde_json::json!([
                    {"type": "text", "text": request.user_prompt},
                    {"type": "image_url",
                     "image_url": {"url": format!("data:{media_type};base64,{encoded}")}},
                ])
            }
        }
    }
}

#[derive(Deserialize)]
struct ChatCompletion {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl ModelBackend for HttpChatBackend {
    fn complete(&self, agent: &str, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": HttpChatBackend::user_content(request)},
            ],
        });
        if let Some(temperature) = request
            .params
            .get("temperature")
            .and_then(|v| v.parse::<f64>().ok())
        {
            body["temperature"] = serde_json::json!(temperature);
        }
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Http(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| BackendError::Http(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http(format!(
                "{agent}: status {status}: {}",
                text.chars().take(200).collect::<String>()
            )));
        }
        let completion: ChatCompletion = serde_json::from_str(&text)
            .map_err(|e| BackendError::Payload(format!("{agent}: {e}")))?;
        let content = completion
            .choices
            .into_iter()
            .next()
            .map(|choice| choice.message.content)
            .ok_or_else(|| BackendError::Payload(format!("{agent}: no choices in reply")))?;
        Ok(ModelResponse { text: content })
    }

    fn max_in_flight(&self) -> usize {
        4
    }
}
