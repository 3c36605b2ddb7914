//! KAS: token-precision overlap between aligned plan steps.
//!
//! Each step is reduced to its key-action phrase (lemmas with determiners
//! dropped, order preserved). The per-step score is multiset precision of
//! the predicted phrase against the ground-truth phrase, and the plan score
//! is the mean over steps. The metric compares steps positionally, so it is
//! undefined when the two plans differ in step count.

use std::collections::HashMap;

use crate::annotate::lexicon::is_determiner;
use crate::annotate::Annotator;
use crate::pg2s::MetricError;
use crate::plan::{KasReport, Plan, StepPrecision};

/// Lowercased lemmas of a step with determiners removed, in step order.
pub fn key_action_phrase(
    step: &str,
    annotator: &dyn Annotator,
) -> Result<Vec<String>, crate::annotate::AnnotatorError> {
    let tokens = annotator.annotate(step)?;
    Ok(tokens
        .into_iter()
        .filter(|token| !is_determiner(&token.lemma))
        .map(|token| token.lemma)
        .collect())
}

/// Fraction of predicted-phrase tokens present in the ground-truth phrase,
/// counted as multisets. An empty predicted phrase scores 0.
fn phrase_precision(gt_phrase: &[String], pred_phrase: &[String]) -> f64 {
    if pred_phrase.is_empty() {
        return 0.0;
    }
    let mut remaining: HashMap<&str, usize> = HashMap::new();
    for token in gt_phrase {
        *remaining.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut matched = 0usize;
    for token in pred_phrase {
        if let Some(count) = remaining.get_mut(token.as_str()) {
            if *count > 0 {
                *count -= 1;
                matched += 1;
            }
        }
    }
    matched as f64 / pred_phrase.len() as f64
}

/// Mean per-step phrase precision, or an undefined report when the plans
/// have different step counts.
pub fn kas_score(
    gt: &Plan,
    pred: &Plan,
    annotator: &dyn Annotator,
) -> Result<KasReport, MetricError> {
    if gt.steps.len() != pred.steps.len() {
        return Ok(KasReport::undefined());
    }
    let mut per_step = Vec::with_capacity(gt.steps.len());
    for (index, (gt_step, pred_step)) in gt.steps.iter().zip(&pred.steps).enumerate() {
        let gt_phrase = key_action_phrase(gt_step, annotator).map_err(|source| {
            crate::annotate::AnnotationFailure {
                step_index: index,
                source,
            }
        })?;
        let pred_phrase = key_action_phrase(pred_step, annotator).map_err(|source| {
            crate::annotate::AnnotationFailure {
                step_index: index,
                source,
            }
        })?;
        per_step.push(StepPrecision {
            step_index: index,
            precision: phrase_precision(&gt_phrase, &pred_phrase),
        });
    }
    Ok(KasReport::defined(per_step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::rule_based::RuleBasedAnnotator;

    #[test]
    fn phrase_drops_determiners_and_lemmatizes() {
        let annotator = RuleBasedAnnotator::bundled();
        let phrase = key_action_phrase("Walk to the desk.", &annotator).unwrap();
        assert_eq!(phrase, vec!["walk", "to", "desk"]);
        let phrase = key_action_phrase("Grabbing those tomatoes.", &annotator).unwrap();
        assert_eq!(phrase, vec!["grab", "tomato"]);
    }

    #[test]
    fn single_token_swap_scores_two_thirds() {
        let annotator = RuleBasedAnnotator::bundled();
        let gt = Plan::new("g", vec!["Walk to the desk.".into()]);
        let pred = Plan::new("g", vec!["Walk to the moon.".into()]);
        let report = kas_score(&gt, &pred, &annotator).unwrap();
        let score = report.score.unwrap();
        assert!((score - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(format!("{score:.2}"), "0.67");
    }

    #[test]
    fn identical_plans_with_content_words_score_one() {
        let annotator = RuleBasedAnnotator::bundled();
        let plan = Plan::new(
            "g",
            vec!["Walk to the desk.".into(), "Grab the pen.".into()],
        );
        let report = kas_score(&plan, &plan, &annotator).unwrap();
        assert_eq!(report.score, Some(1.0));
        assert_eq!(report.per_step.len(), 2);
    }

    #[test]
    fn step_count_mismatch_is_undefined() {
        let annotator = RuleBasedAnnotator::bundled();
        let gt = Plan::new("g", vec!["Walk to the desk.".into()]);
        let pred = Plan::new(
            "g",
            vec!["Walk to the desk.".into(), "Grab the pen.".into()],
        );
        let report = kas_score(&gt, &pred, &annotator).unwrap();
        assert!(!report.defined);
        assert_eq!(report.score, None);
        assert!(report.per_step.is_empty());
    }

    #[test]
    fn determiner_only_steps_score_zero_even_against_themselves() {
        let annotator = RuleBasedAnnotator::bundled();
        let plan = Plan::new("g", vec!["The the the.".into()]);
        let report = kas_score(&plan, &plan, &annotator).unwrap();
        assert_eq!(report.score, Some(0.0));
    }

    #[test]
    fn repeated_tokens_match_as_a_multiset() {
        // gt has one "tomato" and two "basket"; pred has two "tomato" and
        // one "basket". Only one of the predicted "tomato" tokens can match.
        let gt_phrase: Vec<String> = ["tomato", "basket", "basket"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let pred_phrase: Vec<String> = ["tomato", "tomato", "basket"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let precision = phrase_precision(&gt_phrase, &pred_phrase);
        assert!((precision - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn per_step_scores_average_into_the_plan_score() {
        let annotator = RuleBasedAnnotator::bundled();
        let gt = Plan::new(
            "g",
            vec!["Walk to the desk.".into(), "Grab the pen.".into()],
        );
        let pred = Plan::new(
            "g",
            vec!["Walk to the desk.".into(), "Grab the knife.".into()],
        );
        let report = kas_score(&gt, &pred, &annotator).unwrap();
        assert_eq!(report.per_step[0].precision, 1.0);
        assert_eq!(report.per_step[1].precision, 0.5);
        assert_eq!(report.score, Some(0.75));
    }

    #[test]
    fn reordering_steps_changes_the_score() {
        let annotator = RuleBasedAnnotator::bundled();
        let gt = Plan::new(
            "g",
            vec!["Walk to the desk.".into(), "Grab the pen.".into()],
        );
        let swapped = Plan::new(
            "g",
            vec!["Grab the pen.".into(), "Walk to the desk.".into()],
        );
        let aligned = kas_score(&gt, &gt, &annotator).unwrap();
        let misaligned = kas_score(&gt, &swapped, &annotator).unwrap();
        assert_eq!(aligned.score, Some(1.0));
        assert_eq!(misaligned.score, Some(0.0));
    }
}
