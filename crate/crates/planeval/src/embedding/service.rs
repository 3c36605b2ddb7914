//! Embedders backed by an HTTP embedding service.
//!
//! Wire protocol: `POST <endpoint>` with `{"texts": ["..."]}`; the service
//! replies `{"vectors": [[...]], "dim": n}` with one vector per input text.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use super::{
    cosine, EmbeddingError, SentenceEmbedder, Vector, WordEmbedder, DEFAULT_MATCH_THRESHOLD,
};

const PROBE_TEXT: &str = "dimension probe";

#[derive(Debug, Deserialize)]
struct ServiceReply {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

/// Sentence embedder that calls an embedding service, caching results so a
/// text is embedded at most once per process.
pub struct EmbeddingServiceClient {
    endpoint: String,
    client: reqwest::blocking::Client,
    dim: usize,
    threshold: f64,
    cache: Mutex<HashMap<String, Vector>>,
}

impl EmbeddingServiceClient {
    /// Connects and probes the service once to learn its dimensionality.
    pub fn connect(endpoint: &str) -> Result<Self, EmbeddingError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| EmbeddingError::Service(e.to_string()))?;
        let mut service = EmbeddingServiceClient {
            endpoint: endpoint.to_string(),
            client,
            dim: 0,
            threshold: DEFAULT_MATCH_THRESHOLD,
            cache: Mutex::new(HashMap::new()),
        };
        let probe = service.fetch(&[PROBE_TEXT.to_string()])?;
        service.dim = probe[0].dim();
        if service.dim == 0 {
            return Err(EmbeddingError::Service(format!(
                "service at {endpoint} returned zero-dimensional vectors"
            )));
        }
        Ok(service)
    }

    pub fn with_match_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    fn fetch(&self, texts: &[String]) -> Result<Vec<Vector>, EmbeddingError> {
        let reply: ServiceReply = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "texts": texts }))
            .send()
            .map_err(|e| EmbeddingError::Service(e.to_string()))?
            .error_for_status()
            .map_err(|e| EmbeddingError::Service(e.to_string()))?
            .json()
            .map_err(|e| EmbeddingError::Service(format!("malformed reply: {e}")))?;
        if reply.vectors.len() != texts.len() {
            return Err(EmbeddingError::Service(format!(
                "asked for {} vectors, received {}",
                texts.len(),
                reply.vectors.len()
            )));
        }
        reply
            .vectors
            .into_iter()
            .map(|values| {
                if values.len() != reply.dim {
                    return Err(EmbeddingError::Service(format!(
                        "vector has {} components, reply claims dim {}",
                        values.len(),
                        reply.dim
                    )));
                }
                Ok(Vector::new(values))
            })
            .collect()
    }

    fn embed_cached(&self, text: &str) -> Result<Vector, EmbeddingError> {
        if let Some(vector) = self.cache.lock().unwrap().get(text) {
            return Ok(vector.clone());
        }
        let vector = self.fetch(&[text.to_string()])?.remove(0);
        self.cache
            .lock()
            .unwrap()
            .insert(text.to_string(), vector.clone());
        Ok(vector)
    }
}

impl SentenceEmbedder for EmbeddingServiceClient {
    fn embed(&self, sentence: &str) -> Result<Vector, EmbeddingError> {
        let vector = self.embed_cached(sentence)?;
        if vector.is_zero() && !sentence.trim().is_empty() {
            return Err(EmbeddingError::Service(format!(
                "service returned an all-zero vector for {sentence:?}"
            )));
        }
        Ok(vector)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn match_threshold(&self) -> f64 {
        self.threshold
    }
}

/// Word embedder over the same service protocol: embeds each word and takes
/// the cosine. An all-zero vector marks a word as out-of-vocabulary.
pub struct ServiceWordEmbedder {
    inner: EmbeddingServiceClient,
}

impl ServiceWordEmbedder {
    pub fn connect(endpoint: &str) -> Result<Self, EmbeddingError> {
        Ok(ServiceWordEmbedder {
            inner: EmbeddingServiceClient::connect(endpoint)?,
        })
    }

    pub fn with_match_threshold(mut self, threshold: f64) -> Self {
        self.inner.threshold = threshold;
        self
    }
}

impl WordEmbedder for ServiceWordEmbedder {
    fn similarity(&self, a: &str, b: &str) -> Result<Option<f64>, EmbeddingError> {
        let va = self.inner.embed_cached(a)?;
        let vb = self.inner.embed_cached(b)?;
        if va.is_zero() || vb.is_zero() {
            return Ok(None);
        }
        if a == b {
            return Ok(Some(1.0));
        }
        cosine(&va, &vb).map(Some)
    }

    fn match_threshold(&self) -> f64 {
        self.inner.threshold
    }
}
