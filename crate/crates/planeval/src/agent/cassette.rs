//! Recorded request→response stores that make pipeline runs deterministic.
//!
//! Requests are matched to recordings by a SHA-256 digest over the agent
//! name, the rendered prompts, and the image digest. Any change to a prompt
//! template or input therefore invalidates stale recordings loudly instead
//! of replaying a wrong answer.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::backend::{BackendError, ModelBackend};
use crate::agent::{ModelRequest, ModelResponse};

/// Digest identifying one request: agent name, system prompt, user prompt,
/// and image digest (or `none`), NUL-separated.
pub fn request_hash(agent: &str, request: &ModelRequest) -> String {
    let image_digest = match &request.image {
        Some(image) => hex(&Sha256::digest(&image.data)),
        None => "none".to_string(),
    };
    let mut hasher = Sha256::new();
    hasher.update(agent.as_bytes());
    hasher.update([0]);
    hasher.update(request.system_prompt.as_bytes());
    hasher.update([0]);
    hasher.update(request.user_prompt.as_bytes());
    hasher.update([0]);
    hasher.update(image_digest.as_bytes());
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub agent: String,
    pub request_hash: String,
    pub response_text: String,
}

/// An ordered list of recorded exchanges.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Cassette, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::CassetteFormat(path.display().to_string(), e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| BackendError::CassetteFormat(path.display().to_string(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let mut text = serde_json::to_string_pretty(&self.entries)
            .map_err(|e| BackendError::CassetteFormat(path.display().to_string(), e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| BackendError::CassetteFormat(path.display().to_string(), e.to_string()))
    }
}

/// Replays recorded responses; a request without a recording is a hard
/// error naming the hash.
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> ReplayBackend {
        ReplayBackend {
            responses: cassette
                .entries
                .into_iter()
                .map(|entry| (entry.request_hash, entry.response_text))
                .collect(),
        }
    }

    pub fn from_path(path: &Path) -> Result<ReplayBackend, BackendError> {
        Ok(ReplayBackend::new(Cassette::load(path)?))
    }
}

impl ModelBackend for ReplayBackend {
    fn complete(&self, agent: &str, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let hash = request_hash(agent, request);
        self.responses
            .get(&hash)
            .map(|text| ModelResponse { text: text.clone() })
            .ok_or(BackendError::CassetteMiss {
                agent: agent.to_string(),
                hash,
            })
    }
}

/// Wraps another backend and records every successful exchange.
pub struct RecordingBackend {
    inner: Box<dyn ModelBackend>,
    entries: Mutex<Vec<CassetteEntry>>,
}

impl RecordingBackend {
    pub fn new(inner: Box<dyn ModelBackend>) -> RecordingBackend {
        RecordingBackend {
            inner,
            entries: Mutex::new(Vec::new()),
        }
    }

    pub fn into_cassette(self) -> Cassette {
        Cassette {
            entries: self.entries.into_inner().expect("recording lock"),
        }
    }
}

impl ModelBackend for RecordingBackend {
    fn complete(&self, agent: &str, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let response = self.inner.complete(agent, request)?;
        self.entries
            .lock()
            .expect("recording lock")
            .push(CassetteEntry {
                agent: agent.to_string(),
                request_hash: request_hash(agent, request),
                response_text: response.text.clone(),
            });
        Ok(response)
    }

    fn supports_images(&self) -> bool {
        self.inner.supports_images()
    }

    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}
