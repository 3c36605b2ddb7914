//! Table-backed embedders for deterministic, offline evaluation.
//!
//! Fixture file format (JSON):
//!
//! ```json
//! {"mode": "sentence", "dim": 3, "entries": {"Walk to the desk.": [0.1, 0.2, 0.3]}}
//! {"mode": "word", "dim": 0, "entries": {"walk|stroll": 0.83}}
//! ```
//!
//! Word keys are `"a|b"` pairs and are looked up symmetrically. Every lookup
//! the fixture cannot answer is an error, never a silent zero — with one
//! carve-out: a *word* that appears in no key at all is out-of-vocabulary,
//! which callers treat as similarity 0.0.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{EmbeddingError, SentenceEmbedder, Vector, WordEmbedder, DEFAULT_MATCH_THRESHOLD};

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
enum FixtureFile {
    Sentence {
        dim: usize,
        entries: HashMap<String, Vec<f64>>,
    },
    Word {
        #[allow(dead_code)]
        dim: usize,
        entries: HashMap<String, f64>,
    },
}

/// A fixture embedder in either mode, as loaded from disk.
pub enum LoadedFixture {
    Sentence(FixtureSentenceEmbedder),
    Word(FixtureWordEmbedder),
}

/// Loads a fixture file, dispatching on its `mode` field.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<LoadedFixture, EmbeddingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| EmbeddingError::Load {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_fixture(&text).map_err(|reason| EmbeddingError::Load {
        path: path.display().to_string(),
        reason,
    })
}

/// Parses fixture JSON text, dispatching on its `mode` field.
pub fn parse_fixture(text: &str) -> Result<LoadedFixture, String> {
    let file: FixtureFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    match file {
        FixtureFile::Sentence { dim, entries } => {
            FixtureSentenceEmbedder::from_entries(dim, entries).map(LoadedFixture::Sentence)
        }
        FixtureFile::Word { entries, .. } => {
            let pairs = entries
                .into_iter()
                .map(|(key, value)| {
                    let (a, b) = split_pair_key(&key)?;
                    Ok(((a, b), value))
                })
                .collect::<Result<Vec<_>, String>>()?;
            FixtureWordEmbedder::from_pairs(pairs).map(LoadedFixture::Word)
        }
    }
}

fn split_pair_key(key: &str) -> Result<(String, String), String> {
    let mut parts = key.splitn(2, '|');
    match (parts.next(), parts.next()) {
        (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() && !b.contains('|') => {
            Ok((a.to_string(), b.to_string()))
        }
        _ => Err(format!("word key {key:?} is not of the form \"a|b\"")),
    }
}

/// Sentence embedder backed by an exact-string lookup table.
#[derive(Debug, Clone)]
pub struct FixtureSentenceEmbedder {
    dim: usize,
    entries: HashMap<String, Vector>,
    threshold: f64,
}

impl FixtureSentenceEmbedder {
    /// Builds the table, checking every vector against `dim` and rejecting
    /// all-zero vectors.
    pub fn from_entries(dim: usize, entries: HashMap<String, Vec<f64>>) -> Result<Self, String> {
        if dim == 0 {
            return Err("sentence fixture dim must be positive".to_string());
        }
        let mut table = HashMap::with_capacity(entries.len());
        for (sentence, values) in entries {
            if values.len() != dim {
                return Err(format!(
                    "vector for {sentence:?} has {} components, expected {dim}",
                    values.len()
                ));
            }
            let vector = Vector::new(values);
            if vector.is_zero() {
                return Err(format!("vector for {sentence:?} is all zeros"));
            }
            table.insert(sentence, vector);
        }
        Ok(FixtureSentenceEmbedder {
            dim,
            entries: table,
            threshold: DEFAULT_MATCH_THRESHOLD,
        })
    }

    pub fn with_match_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

impl SentenceEmbedder for FixtureSentenceEmbedder {
    fn embed(&self, sentence: &str) -> Result<Vector, EmbeddingError> {
        self.entries
            .get(sentence)
            .cloned()
            .ok_or_else(|| EmbeddingError::UnknownFixtureKey(sentence.to_string()))
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn match_threshold(&self) -> f64 {
        self.threshold
    }
}

/// Word embedder backed by a pair-similarity table.
///
/// The vocabulary is the set of words mentioned by any key. Words outside it
/// are out-of-vocabulary (`Ok(None)`); a missing pair of two in-vocabulary
/// words is an [`EmbeddingError::UnknownFixtureKey`] error.
#[derive(Debug, Clone)]
pub struct FixtureWordEmbedder {
    pairs: HashMap<(String, String), f64>,
    vocab: HashSet<String>,
    threshold: f64,
}

impl FixtureWordEmbedder {
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = ((String, String), f64)>,
    ) -> Result<Self, String> {
        let mut table = HashMap::new();
        let mut vocab = HashSet::new();
        for ((a, b), value) in pairs {
            if a == b && value != 1.0 {
                return Err(format!(
                    "self pair {a:?} must have similarity 1.0, got {value}"
                ));
            }
            if !(-1.0..=1.0).contains(&value) {
                return Err(format!("similarity for ({a:?}, {b:?}) is outside [-1, 1]"));
            }
            vocab.insert(a.clone());
            vocab.insert(b.clone());
            table.insert((a, b), value);
        }
        Ok(FixtureWordEmbedder {
            pairs: table,
            vocab,
            threshold: DEFAULT_MATCH_THRESHOLD,
        })
    }

    pub fn with_match_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains(word)
    }
}

impl WordEmbedder for FixtureWordEmbedder {
    fn similarity(&self, a: &str, b: &str) -> Result<Option<f64>, EmbeddingError> {
        if !self.vocab.contains(a) || !self.vocab.contains(b) {
            return Ok(None);
        }
        if a == b {
            return Ok(Some(1.0));
        }
        if let Some(value) = self.pairs.get(&(a.to_string(), b.to_string())) {
            return Ok(Some(*value));
        }
        if let Some(value) = self.pairs.get(&(b.to_string(), a.to_string())) {
            return Ok(Some(*value));
        }
        Err(EmbeddingError::UnknownFixtureKey(format!("{a}|{b}")))
    }

    fn match_threshold(&self) -> f64 {
        self.threshold
    }
}
