//! Linguistic annotation: tokens, the annotator interface, and action-frame
//! extraction.
//!
//! Submodules:
//! - [`lexicon`]: plain-text lexicon parsing and the bundled word lists
//! - [`rule_based`]: deterministic lexicon-driven annotator, no external models
//! - [`external`]: annotator backed by an HTTP tagging service

pub mod external;
pub mod lexicon;
pub mod rule_based;

use std::sync::Mutex;

use thiserror::Error;

use crate::plan::{ActionFrame, Plan};

/// Part-of-speech tags observable by consumers; richer tagsets are mapped
/// down to this alphabet inside each annotator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    Verb,
    Noun,
    Other,
}

/// Dependency labels observable by consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dep {
    Root,
    Dobj,
    Nsubj,
    Other,
}

/// One annotated token. `head_index` points into the same token list; the
/// root's head is itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedToken {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    pub dep: Dep,
    pub head_index: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct AnnotatorError(pub String);

/// Failure of the underlying annotator on one plan step; aborts evaluation.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("annotation failed on step {step_index}: {source}")]
pub struct AnnotationFailure {
    pub step_index: usize,
    pub source: AnnotatorError,
}

/// Sentence-to-tokens annotator. Implementations must be deterministic:
/// the same sentence always yields the same token list.
pub trait Annotator: Send + Sync {
    fn annotate(&self, sentence: &str) -> Result<Vec<AnnotatedToken>, AnnotatorError>;

    /// False when overlapping calls are not supported; callers must then
    /// serialize access (see [`SerializedAnnotator`]).
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Wraps an annotator behind a mutex so every call is serialized.
pub struct SerializedAnnotator {
    inner: Mutex<Box<dyn Annotator>>,
}

impl SerializedAnnotator {
    pub fn new(inner: Box<dyn Annotator>) -> Self {
        SerializedAnnotator {
            inner: Mutex::new(inner),
        }
    }
}

impl Annotator for SerializedAnnotator {
    fn annotate(&self, sentence: &str) -> Result<Vec<AnnotatedToken>, AnnotatorError> {
        self.inner.lock().unwrap().annotate(sentence)
    }
}

/// Wraps `annotator` so it is safe to share across threads, if it is not already.
pub fn ensure_concurrent(annotator: Box<dyn Annotator>) -> Box<dyn Annotator> {
    if annotator.concurrent_safe() {
        annotator
    } else {
        Box::new(SerializedAnnotator::new(annotator))
    }
}

/// Flags controlling how frames are read off the token structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramingOptions {
    /// Also count nouns reached through a preposition hanging off the root
    /// verb ("Walk to the desk" contributes "desk").
    pub include_prep_objects: bool,
    /// Emit one frame per conjoined clause verb instead of a single frame
    /// anchored to the first root.
    pub split_conjunct_clauses: bool,
}

impl Default for FramingOptions {
    fn default() -> Self {
        FramingOptions {
            include_prep_objects: true,
            split_conjunct_clauses: false,
        }
    }
}

/// Reads the action frame off an annotated step: the first root verb plus
/// its object nouns. Returns `None` when the step has no root verb.
pub fn framing(
    tokens: &[AnnotatedToken],
    step_index: usize,
    options: &FramingOptions,
) -> Option<ActionFrame> {
    let root = tokens
        .iter()
        .position(|t| t.pos == Pos::Verb && t.dep == Dep::Root)?;
    let nouns = collect_nouns(tokens, root, options, false);
    Some(ActionFrame::new(
        step_index,
        tokens[root].lemma.clone(),
        nouns,
    ))
}

/// Like [`framing`] but emits one frame per root verb, attributing each noun
/// to the clause whose root governs it. All frames share `step_index`.
pub fn framing_clauses(
    tokens: &[AnnotatedToken],
    step_index: usize,
    options: &FramingOptions,
) -> Vec<ActionFrame> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.pos == Pos::Verb && t.dep == Dep::Root)
        .map(|(root, token)| {
            let nouns = collect_nouns(tokens, root, options, true);
            ActionFrame::new(step_index, token.lemma.clone(), nouns)
        })
        .collect()
}

fn collect_nouns(
    tokens: &[AnnotatedToken],
    root: usize,
    options: &FramingOptions,
    clause_scoped: bool,
) -> Vec<String> {
    let mut nouns = Vec::new();
    for (index, token) in tokens.iter().enumerate() {
        if token.pos != Pos::Noun {
            continue;
        }
        let include = match token.dep {
            Dep::Dobj | Dep::Nsubj => !clause_scoped || token.head_index == root,
            Dep::Other if options.include_prep_objects => {
                // A noun one function word away from the root: its head is a
                // non-noun, non-verb token (a preposition) attached to the root.
                let head = token.head_index;
                head != index
                    && head != root
                    && tokens[head].pos == Pos::Other
                    && tokens[head].head_index == root
            }
            _ => false,
        };
        if include {
            nouns.push(token.lemma.clone());
        }
    }
    nouns
}

/// Checks that every token's head points inside the list.
pub fn validate_heads(tokens: &[AnnotatedToken]) -> Result<(), AnnotatorError> {
    for (index, token) in tokens.iter().enumerate() {
        if token.head_index >= tokens.len() {
            return Err(AnnotatorError(format!(
                "token {index} ({:?}) has head {} outside the token list",
                token.text, token.head_index
            )));
        }
    }
    Ok(())
}

/// Annotates every step of a plan and extracts its action frames.
///
/// Steps without a root verb yield no frame. Frames keep step order; with
/// clause splitting off there is at most one frame per step.
pub fn extract_frames(
    plan: &Plan,
    annotator: &dyn Annotator,
    options: &FramingOptions,
) -> Result<Vec<ActionFrame>, AnnotationFailure> {
    let mut frames = Vec::new();
    for (step_index, step) in plan.steps.iter().enumerate() {
        let tokens = annotator
            .annotate(step)
            .and_then(|tokens| validate_heads(&tokens).map(|()| tokens))
            .map_err(|source| AnnotationFailure { step_index, source })?;
        if options.split_conjunct_clauses {
            frames.extend(framing_clauses(&tokens, step_index, options));
        } else if let Some(frame) = framing(&tokens, step_index, options) {
            frames.push(frame);
        }
    }
    Ok(frames)
}
