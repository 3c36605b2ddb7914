//! PG2S: plan similarity as a weighted blend of sentence-level and
//! action-level matching.
//!
//! Both levels share one greedy scheme: walk the ground-truth side in order,
//! give each item its most similar not-yet-consumed predicted counterpart,
//! and record a binary hit iff that best candidate clears the threshold.
//! Hits consume the predicted item; misses consume nothing. Ties go to the
//! lowest predicted index. Extra predicted items are never penalized.

use thiserror::Error;

use crate::annotate::{extract_frames, AnnotationFailure, Annotator, FramingOptions};
use crate::embedding::{cosine, EmbeddingError, SentenceEmbedder, Vector, WordEmbedder};
use crate::plan::validate_plan;
use crate::plan::{ActionFrame, ActionMatch, Plan, PlanError, SentenceMatch, SimilarityReport};

/// When does a best-candidate action frame count as a match?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionMatchRule {
    /// Verb similarity and mean noun similarity must each exceed the
    /// threshold. Frames whose noun lists are both empty gate on the verb
    /// alone.
    #[default]
    BothAboveTau,
    /// The product of the two similarities must exceed the squared threshold.
    ProductAboveTauSq,
}

/// Which component the `alpha` weight applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaOn {
    /// `pg2s = (1 - alpha) * s_plan + alpha * s_goal`
    #[default]
    Goal,
    /// `pg2s = alpha * s_plan + (1 - alpha) * s_goal`
    Plan,
}

#[derive(Debug, Clone, Copy)]
pub struct Pg2sConfig {
    pub alpha: f64,
    pub alpha_on: AlphaOn,
    /// Overrides the sentence embedder's own threshold when set.
    pub sentence_threshold: Option<f64>,
    /// Overrides the word embedder's own threshold when set.
    pub word_threshold: Option<f64>,
    pub action_match_rule: ActionMatchRule,
    pub framing: FramingOptions,
}

impl Default for Pg2sConfig {
    fn default() -> Self {
        Pg2sConfig {
            alpha: 0.5,
            alpha_on: AlphaOn::default(),
            sentence_threshold: None,
            word_threshold: None,
            action_match_rule: ActionMatchRule::default(),
            framing: FramingOptions::default(),
        }
    }
}

/// The weight effectively applied to `s_goal` under this configuration.
pub fn effective_goal_weight(config: &Pg2sConfig) -> f64 {
    match config.alpha_on {
        AlphaOn::Goal => config.alpha,
        AlphaOn::Plan => 1.0 - config.alpha,
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("ground-truth plan yields no action frames")]
    EmptyFrameSet,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Annotation(#[from] AnnotationFailure),
}

/// Sentence-level score: the fraction of ground-truth steps whose best
/// remaining predicted step clears the threshold. Returns the score and one
/// trace row per ground-truth step.
pub fn sentence_wise(
    gt: &Plan,
    pred: &Plan,
    embedder: &dyn SentenceEmbedder,
    config: &Pg2sConfig,
) -> Result<(f64, Vec<SentenceMatch>), MetricError> {
    if gt.steps.is_empty() || pred.steps.is_empty() {
        return Err(MetricError::Plan(PlanError::EmptyPlan));
    }
    let tau = config
        .sentence_threshold
        .unwrap_or_else(|| embedder.match_threshold());
    let gt_vectors = embed_all(&gt.steps, embedder)?;
    let pred_vectors = embed_all(&pred.steps, embedder)?;

    let mut pool: Vec<usize> = (0..pred_vectors.len()).collect();
    let mut matches = Vec::with_capacity(gt_vectors.len());
    let mut hits = 0usize;
    for (gt_index, gt_vector) in gt_vectors.iter().enumerate() {
        let mut best: Option<(usize, usize, f64)> = None;
        for (slot, &pred_index) in pool.iter().enumerate() {
            let similarity = cosine(gt_vector, &pred_vectors[pred_index])?;
            if best.map_or(true, |(_, _, value)| similarity > value) {
                best = Some((slot, pred_index, similarity));
            }
        }
        match best {
            Some((slot, pred_index, similarity)) if similarity > tau => {
                hits += 1;
                pool.remove(slot);
                matches.push(SentenceMatch {
                    gt_index,
                    pred_index: Some(pred_index),
                    cosine: similarity,
                });
            }
            Some((_, _, similarity)) => matches.push(SentenceMatch {
                gt_index,
                pred_index: None,
                cosine: similarity,
            }),
            None => matches.push(SentenceMatch {
                gt_index,
                pred_index: None,
                cosine: 0.0,
            }),
        }
    }
    Ok((hits as f64 / gt.steps.len() as f64, matches))
}

fn embed_all(
    steps: &[String],
    embedder: &dyn SentenceEmbedder,
) -> Result<Vec<Vector>, MetricError> {
    steps
        .iter()
        .map(|step| embedder.embed(step).map_err(MetricError::from))
        .collect()
}

/// Similarity of two action frames: verb similarity times the mean of the
/// greedily paired noun similarities.
#[derive(Debug, Clone, Copy)]
struct FrameSimilarity {
    verb: f64,
    mean_noun: f64,
    nouns_both_empty: bool,
}

impl FrameSimilarity {
    fn product(&self) -> f64 {
        self.verb * self.mean_noun
    }

    fn is_match(&self, rule: ActionMatchRule, tau: f64) -> bool {
        match rule {
            ActionMatchRule::BothAboveTau => {
                self.verb > tau && (self.nouns_both_empty || self.mean_noun > tau)
            }
            ActionMatchRule::ProductAboveTauSq => self.product() > tau * tau,
        }
    }
}

fn frame_similarity(
    gt: &ActionFrame,
    pred: &ActionFrame,
    embedder: &dyn WordEmbedder,
) -> Result<FrameSimilarity, MetricError> {
    let verb = embedder.similarity(&gt.verb, &pred.verb)?.unwrap_or(0.0);
    if gt.nouns.is_empty() && pred.nouns.is_empty() {
        return Ok(FrameSimilarity {
            verb,
            mean_noun: 1.0,
            nouns_both_empty: true,
        });
    }
    // Greedy pairing: each gt noun takes the most similar unused pred noun;
    // nouns left unpaired on either side contribute 0.
    let mut used = vec![false; pred.nouns.len()];
    let mut paired_total = 0.0;
    for gt_noun in &gt.nouns {
        let mut best: Option<(usize, f64)> = None;
        for (j, pred_noun) in pred.nouns.iter().enumerate() {
            if used[j] {
                continue;
            }
            let similarity = embedder.similarity(gt_noun, pred_noun)?.unwrap_or(0.0);
            if best.map_or(true, |(_, value)| similarity > value) {
                best = Some((j, similarity));
            }
        }
        if let Some((j, similarity)) = best {
            used[j] = true;
            paired_total += similarity;
        }
    }
    let denominator = gt.nouns.len().max(pred.nouns.len()) as f64;
    Ok(FrameSimilarity {
        verb,
        mean_noun: paired_total / denominator,
        nouns_both_empty: false,
    })
}

/// Action-level score: the fraction of ground-truth frames whose most
/// similar remaining predicted frame passes the match rule. Returns the
/// score and one trace row per ground-truth frame; trace indices are
/// positions within the two frame lists.
pub fn goal_wise(
    gt_frames: &[ActionFrame],
    pred_frames: &[ActionFrame],
    embedder: &dyn WordEmbedder,
    config: &Pg2sConfig,
) -> Result<(f64, Vec<ActionMatch>), MetricError> {
    if gt_frames.is_empty() {
        return Err(MetricError::EmptyFrameSet);
    }
    let tau = config
        .word_threshold
        .unwrap_or_else(|| embedder.match_threshold());

    let mut pool: Vec<usize> = (0..pred_frames.len()).collect();
    let mut matches = Vec::with_capacity(gt_frames.len());
    let mut hits = 0usize;
    for (gt_index, gt_frame) in gt_frames.iter().enumerate() {
        let mut best: Option<(usize, usize, FrameSimilarity)> = None;
        for (slot, &pred_index) in pool.iter().enumerate() {
            let similarity = frame_similarity(gt_frame, &pred_frames[pred_index], embedder)?;
            if best.map_or(true, |(_, _, value)| similarity.product() > value.product()) {
                best = Some((slot, pred_index, similarity));
            }
        }
        match best {
            Some((slot, pred_index, similarity))
                if similarity.is_match(config.action_match_rule, tau) =>
            {
                hits += 1;
                pool.remove(slot);
                matches.push(ActionMatch {
                    gt_index,
                    pred_index: Some(pred_index),
                    verb_similarity: similarity.verb,
                    mean_noun_similarity: similarity.mean_noun,
                });
            }
            Some((_, _, similarity)) => matches.push(ActionMatch {
                gt_index,
                pred_index: None,
                verb_similarity: similarity.verb,
                mean_noun_similarity: similarity.mean_noun,
            }),
            None => matches.push(ActionMatch {
                gt_index,
                pred_index: None,
                verb_similarity: 0.0,
                mean_noun_similarity: 0.0,
            }),
        }
    }
    Ok((hits as f64 / gt_frames.len() as f64, matches))
}

/// Full PG2S evaluation of a predicted plan against a ground-truth plan.
pub fn pg2s_score(
    gt: &Plan,
    pred: &Plan,
    annotator: &dyn Annotator,
    sentence_embedder: &dyn SentenceEmbedder,
    word_embedder: &dyn WordEmbedder,
    config: &Pg2sConfig,
) -> Result<SimilarityReport, MetricError> {
    let gt = validate_plan(gt.clone())?;
    let pred = validate_plan(pred.clone())?;
    let (s_plan, sentence_matches) = sentence_wise(&gt, &pred, sentence_embedder, config)?;
    let gt_frames = extract_frames(&gt, annotator, &config.framing)?;
    let pred_frames = extract_frames(&pred, annotator, &config.framing)?;
    let (s_goal, action_matches) = goal_wise(&gt_frames, &pred_frames, word_embedder, config)?;
    Ok(SimilarityReport::new(
        s_plan,
        s_goal,
        effective_goal_weight(config),
        sentence_matches,
        action_matches,
    ))
}
