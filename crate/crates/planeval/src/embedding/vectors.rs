//! Word embedder backed by a word2vec-style text file.
//!
//! Expected format: an optional `count dim` header line, then one entry per
//! line: the word followed by its vector components, space-separated.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{cosine, EmbeddingError, Vector, WordEmbedder, DEFAULT_MATCH_THRESHOLD};

pub struct WordVectors {
    map: HashMap<String, Vector>,
    dim: usize,
    threshold: f64,
}

impl WordVectors {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let load_err = |reason: String| EmbeddingError::Load {
            path: path.display().to_string(),
            reason,
        };
        let file = File::open(path).map_err(|e| load_err(e.to_string()))?;
        let reader = BufReader::new(file);

        let mut map = HashMap::new();
        let mut dim = 0usize;
        for (number, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| load_err(e.to_string()))?;
            let mut tokens = line.split_whitespace();
            let Some(word) = tokens.next() else { continue };
            let values: Vec<f64> = tokens
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| load_err(format!("line {}: {e}", number + 1)))?;
            if number == 0 && values.len() == 1 && word.parse::<usize>().is_ok() {
                // "count dim" header line
                continue;
            }
            if values.is_empty() {
                return Err(load_err(format!(
                    "line {}: no vector components",
                    number + 1
                )));
            }
            if dim == 0 {
                dim = values.len();
            } else if values.len() != dim {
                return Err(load_err(format!(
                    "line {}: expected {dim} components, found {}",
                    number + 1,
                    values.len()
                )));
            }
            map.insert(word.to_string(), Vector::new(values));
        }
        if map.is_empty() {
            return Err(load_err("file contains no vectors".to_string()));
        }
        Ok(WordVectors {
            map,
            dim,
            threshold: DEFAULT_MATCH_THRESHOLD,
        })
    }

    pub fn with_match_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Exact lookup first, then a lowercase fallback.
    fn lookup(&self, word: &str) -> Option<&Vector> {
        self.map
            .get(word)
            .or_else(|| self.map.get(word.to_lowercase().as_str()))
    }
}

impl WordEmbedder for WordVectors {
    fn similarity(&self, a: &str, b: &str) -> Result<Option<f64>, EmbeddingError> {
        let (Some(va), Some(vb)) = (self.lookup(a), self.lookup(b)) else {
            return Ok(None);
        };
        // A stored all-zero vector carries no signal; treat the word as unknown.
        if va.is_zero() || vb.is_zero() {
            return Ok(None);
        }
        if a == b {
            return Ok(Some(1.0));
        }
        cosine(va, vb).map(Some)
    }

    fn match_threshold(&self) -> f64 {
        self.threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_vectors(text: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        file.flush().unwrap();
        file
    }

    #[test]
    fn loads_plain_file_without_header() {
        let file = write_vectors("desk 1.0 0.0\nmoon 0.0 1.0\n");
        let vectors = WordVectors::from_path(file.path()).unwrap();
        assert_eq!(vectors.dim(), 2);
        assert_eq!(vectors.len(), 2);
        let sim = vectors.similarity("desk", "moon").unwrap().unwrap();
        assert!(sim.abs() < 1e-12);
    }

    #[test]
    fn skips_count_dim_header() {
        let file = write_vectors("2 3\ndesk 1.0 0.0 0.0\nlamp 1.0 1.0 0.0\n");
        let vectors = WordVectors::from_path(file.path()).unwrap();
        assert_eq!(vectors.dim(), 3);
        assert_eq!(vectors.len(), 2);
    }

    #[test]
    fn identical_known_word_is_one_and_unknown_word_is_none() {
        let file = write_vectors("desk 1.0 2.0\n");
        let vectors = WordVectors::from_path(file.path()).unwrap();
        assert_eq!(vectors.similarity("desk", "desk").unwrap(), Some(1.0));
        assert_eq!(vectors.similarity("desk", "qqxz").unwrap(), None);
    }

    #[test]
    fn lowercase_fallback_applies() {
        let file = write_vectors("desk 1.0 0.0\nmoon 0.5 0.5\n");
        let vectors = WordVectors::from_path(file.path()).unwrap();
        let direct = vectors.similarity("desk", "moon").unwrap().unwrap();
        let cased = vectors.similarity("Desk", "Moon").unwrap().unwrap();
        assert_eq!(direct, cased);
    }

    #[test]
    fn rejects_ragged_dimensions() {
        let file = write_vectors("desk 1.0 0.0\nmoon 1.0\n");
        assert!(matches!(
            WordVectors::from_path(file.path()),
            Err(EmbeddingError::Load { .. })
        ));
    }
}
