//! Evaluation configuration: a flat TOML file plus factories that turn
//! `scheme:argument` specs into live annotators and embedders.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::annotate::external::ExternalAnnotator;
use crate::annotate::rule_based::RuleBasedAnnotator;
use crate::annotate::{Annotator, FramingOptions};
use crate::embedding::fixture::{load_fixture, LoadedFixture};
use crate::embedding::service::{EmbeddingServiceClient, ServiceWordEmbedder};
use crate::embedding::vectors::WordVectors;
use crate::embedding::{SentenceEmbedder, WordEmbedder};
use crate::pg2s::{ActionMatchRule, AlphaOn, Pg2sConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error("{0}")]
    Invalid(String),
}

/// All keys any command accepts. Flags override file values field by field.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub alpha: Option<f64>,
    /// `goal` (default) or `plan`: which component `alpha` weights.
    pub alpha_on: Option<String>,
    pub sentence_threshold: Option<f64>,
    pub word_threshold: Option<f64>,
    /// `both_above_tau` (default) or `product_above_tau_sq`.
    pub action_match_rule: Option<String>,
    pub include_prep_objects: Option<bool>,
    pub split_conjunct_clauses: Option<bool>,
    /// `fixture:<path>` or `service:<url>`.
    pub sentence_embedder: Option<String>,
    /// `fixture:<path>`, `word2vec:<path>`, or `service:<url>`.
    pub word_embedder: Option<String>,
    /// `rule_based`, `lexicon_dir:<path>`, or `external:<url>`.
    pub annotator: Option<String>,
    pub jobs: Option<usize>,
}

impl EvalConfig {
    /// Overlays `other`'s set fields onto `self` (CLI flags beat file keys).
    pub fn overlaid(mut self, other: EvalConfig) -> EvalConfig {
        macro_rules! take {
            ($($field:ident),+) => {
                $(if other.$field.is_some() { self.$field = other.$field; })+
            };
        }
        take!(
            alpha,
            alpha_on,
            sentence_threshold,
            word_threshold,
            action_match_rule,
            include_prep_objects,
            split_conjunct_clauses,
            sentence_embedder,
            word_embedder,
            annotator,
            jobs
        );
        self
    }

    pub fn pg2s_config(&self) -> Result<Pg2sConfig, ConfigError> {
        let defaults = Pg2sConfig::default();
        let alpha_on = match self.alpha_on.as_deref() {
            None => defaults.alpha_on,
            Some("goal") => AlphaOn::Goal,
            Some("plan") => AlphaOn::Plan,
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "alpha_on must be \"goal\" or \"plan\", got {other:?}"
                )))
            }
        };
        let action_match_rule = match self.action_match_rule.as_deref() {
            None => defaults.action_match_rule,
            Some("both_above_tau") => ActionMatchRule::BothAboveTau,
            Some("product_above_tau_sq") => ActionMatchRule::ProductAboveTauSq,
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "action_match_rule must be \"both_above_tau\" or \"product_above_tau_sq\", got {other:?}"
                )))
            }
        };
        let alpha = self.alpha.unwrap_or(defaults.alpha);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ConfigError::Invalid(format!(
                "alpha must be in [0, 1], got {alpha}"
            )));
        }
        Ok(Pg2sConfig {
            alpha,
            alpha_on,
            sentence_threshold: self.sentence_threshold,
            word_threshold: self.word_threshold,
            action_match_rule,
            framing: FramingOptions {
                include_prep_objects: self
                    .include_prep_objects
                    .unwrap_or(defaults.framing.include_prep_objects),
                split_conjunct_clauses: self
                    .split_conjunct_clauses
                    .unwrap_or(defaults.framing.split_conjunct_clauses),
            },
        })
    }
}

pub fn load_config(path: &Path) -> Result<EvalConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::File {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((scheme, argument)) => (scheme, Some(argument)),
        None => (spec, None),
    }
}

pub fn make_sentence_embedder(spec: &str) -> Result<Box<dyn SentenceEmbedder>, ConfigError> {
    match split_spec(spec) {
        ("fixture", Some(path)) => match load_fixture(path) {
            Ok(LoadedFixture::Sentence(embedder)) => Ok(Box::new(embedder)),
            Ok(LoadedFixture::Word(_)) => Err(ConfigError::Invalid(format!(
                "sentence_embedder fixture {path} holds word-pair entries, not sentence vectors"
            ))),
            Err(e) => Err(ConfigError::Invalid(format!("sentence_embedder: {e}"))),
        },
        ("service", Some(url)) => EmbeddingServiceClient::connect(url)
            .map(|client| Box::new(client) as Box<dyn SentenceEmbedder>)
            .map_err(|e| ConfigError::Invalid(format!("sentence_embedder: {e}"))),
        _ => Err(ConfigError::Invalid(format!(
            "sentence_embedder must be fixture:<path> or service:<url>, got {spec:?}"
        ))),
    }
}

pub fn make_word_embedder(spec: &str) -> Result<Box<dyn WordEmbedder>, ConfigError> {
    match split_spec(spec) {
        ("fixture", Some(path)) => match load_fixture(path) {
            Ok(LoadedFixture::Word(embedder)) => Ok(Box::new(embedder)),
            Ok(LoadedFixture::Sentence(_)) => Err(ConfigError::Invalid(format!(
                "word_embedder fixture {path} holds sentence vectors, not word pairs"
            ))),
            Err(e) => Err(ConfigError::Invalid(format!("word_embedder: {e}"))),
        },
        ("word2vec", Some(path)) => WordVectors::from_path(path)
            .map(|vectors| Box::new(vectors) as Box<dyn WordEmbedder>)
            .map_err(|e| ConfigError::Invalid(format!("word_embedder: {e}"))),
        ("service", Some(url)) => ServiceWordEmbedder::connect(url)
            .map(|embedder| Box::new(embedder) as Box<dyn WordEmbedder>)
            .map_err(|e| ConfigError::Invalid(format!("word_embedder: {e}"))),
        _ => Err(ConfigError::Invalid(format!(
            "word_embedder must be fixture:<path>, word2vec:<path>, or service:<url>, got {spec:?}"
        ))),
    }
}

pub fn make_annotator(spec: &str) -> Result<Box<dyn Annotator>, ConfigError> {
    match split_spec(spec) {
        ("rule_based", None) => Ok(Box::new(RuleBasedAnnotator::bundled())),
        ("lexicon_dir", Some(path)) => RuleBasedAnnotator::from_lexicon_dir(path)
            .map(|annotator| Box::new(annotator) as Box<dyn Annotator>)
            .map_err(|e| ConfigError::Invalid(format!("annotator: {e}"))),
        ("external", Some(url)) => ExternalAnnotator::new(url)
            .map(|annotator| Box::new(annotator) as Box<dyn Annotator>)
            .map_err(|e| ConfigError::Invalid(format!("annotator: {e}"))),
        _ => Err(ConfigError::Invalid(format!(
            "annotator must be rule_based, lexicon_dir:<path>, or external:<url>, got {spec:?}"
        ))),
    }
}
