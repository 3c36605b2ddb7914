//! Plan data model: the plan itself, action frames, and metric reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A task plan: an identifier, a goal statement, and ordered natural-language steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub trial_id: String,
    pub goal: String,
    pub steps: Vec<String>,
}

impl Plan {
    /// Builds a plan with an empty trial id.
    pub fn new(goal: impl Into<String>, steps: Vec<String>) -> Self {
        Plan {
            trial_id: String::new(),
            goal: goal.into(),
            steps,
        }
    }

    pub fn with_trial_id(
        trial_id: impl Into<String>,
        goal: impl Into<String>,
        steps: Vec<String>,
    ) -> Self {
        Plan {
            trial_id: trial_id.into(),
            goal: goal.into(),
            steps,
        }
    }

    /// Parses a plan from its JSON form: `{"trial_id", "goal", "steps"}`.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Serializes to the canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization cannot fail")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("plan has no steps")]
    EmptyPlan,
    #[error("step {0} is blank")]
    BlankStep(usize),
}

/// Checks that a plan has at least one step and no blank steps.
///
/// Returns the plan with surrounding whitespace trimmed from each step;
/// step text is otherwise kept verbatim.
pub fn validate_plan(mut plan: Plan) -> Result<Plan, PlanError> {
    if plan.steps.is_empty() {
        return Err(PlanError::EmptyPlan);
    }
    for (index, step) in plan.steps.iter_mut().enumerate() {
        let trimmed = step.trim();
        if trimmed.is_empty() {
            return Err(PlanError::BlankStep(index));
        }
        if trimmed.len() != step.len() {
            *step = trimmed.to_string();
        }
    }
    Ok(plan)
}

/// The action skeleton of one plan step: a root verb and its object nouns.
///
/// `step_index` is the position of the originating step in its plan.
/// Lemmas are lowercase; `nouns` keeps sentence order and may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionFrame {
    pub step_index: usize,
    pub verb: String,
    pub nouns: Vec<String>,
}

impl ActionFrame {
    pub fn new(step_index: usize, verb: impl Into<String>, nouns: Vec<String>) -> Self {
        ActionFrame {
            step_index,
            verb: verb.into(),
            nouns,
        }
    }
}

/// One row of the sentence-level match trace: which predicted step (if any)
/// a ground-truth step was matched to, and the cosine of the best candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMatch {
    pub gt_index: usize,
    pub pred_index: Option<usize>,
    pub cosine: f64,
}

/// One row of the action-level match trace. Indices are frame step indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionMatch {
    pub gt_index: usize,
    pub pred_index: Option<usize>,
    pub verb_similarity: f64,
    pub mean_noun_similarity: f64,
}

/// Full result of a plan-to-plan similarity evaluation.
///
/// `alpha` is the weight applied to `s_goal`; the combined score always
/// satisfies `pg2s = (1 - alpha) * s_plan + alpha * s_goal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub s_plan: f64,
    pub s_goal: f64,
    pub pg2s: f64,
    pub alpha: f64,
    pub sentence_matches: Vec<SentenceMatch>,
    pub action_matches: Vec<ActionMatch>,
}

impl SimilarityReport {
    /// Combines component scores; `alpha` weights `s_goal`.
    pub fn new(
        s_plan: f64,
        s_goal: f64,
        alpha: f64,
        sentence_matches: Vec<SentenceMatch>,
        action_matches: Vec<ActionMatch>,
    ) -> Self {
        SimilarityReport {
            s_plan,
            s_goal,
            pg2s: (1.0 - alpha) * s_plan + alpha * s_goal,
            alpha,
            sentence_matches,
            action_matches,
        }
    }
}

/// Per-step precision of one predicted step against its same-index ground-truth step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPrecision {
    pub step_index: usize,
    pub precision: f64,
}

/// Result of a key-action-set comparison.
///
/// The score is undefined (`None`) when the two plans have different step
/// counts; `defined` always mirrors `score.is_some()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KasReport {
    pub score: Option<f64>,
    pub per_step: Vec<StepPrecision>,
    pub defined: bool,
}

impl KasReport {
    pub fn defined(per_step: Vec<StepPrecision>) -> Self {
        let score = if per_step.is_empty() {
            0.0
        } else {
            per_step.iter().map(|s| s.precision).sum::<f64>() / per_step.len() as f64
        };
        KasReport {
            score: Some(score),
            per_step,
            defined: true,
        }
    }

    pub fn undefined() -> Self {
        KasReport {
            score: None,
            per_step: Vec::new(),
            defined: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_empty_plan() {
        let plan = Plan::new("make tea", vec![]);
        assert_eq!(validate_plan(plan), Err(PlanError::EmptyPlan));
    }

    #[test]
    fn validate_rejects_blank_step_with_index() {
        let plan = Plan::new(
            "make tea",
            vec!["Boil water.".into(), "   ".into(), "Pour.".into()],
        );
        assert_eq!(validate_plan(plan), Err(PlanError::BlankStep(1)));
    }

    #[test]
    fn validate_trims_steps_but_keeps_text_verbatim() {
        let plan = Plan::new("goal", vec!["  Walk to the Desk.  ".into()]);
        let validated = validate_plan(plan).unwrap();
        assert_eq!(validated.steps, vec!["Walk to the Desk."]);
    }

    #[test]
    fn json_round_trip_preserves_plan() {
        let plan = Plan::with_trial_id(
            "trial_T1",
            "slice a tomato",
            vec!["Walk to the counter.".into(), "Grab the knife.".into()],
        );
        let parsed = Plan::from_json(&plan.to_json()).unwrap();
        assert_eq!(parsed, plan);
    }

    #[test]
    fn json_field_names_match_wire_format() {
        let plan = Plan::with_trial_id("t", "g", vec!["s".into()]);
        let value: serde_json::Value = serde_json::from_str(&plan.to_json()).unwrap();
        assert_eq!(value["trial_id"], "t");
        assert_eq!(value["goal"], "g");
        assert_eq!(value["steps"][0], "s");
    }

    #[test]
    fn report_recombines_components() {
        let report = SimilarityReport::new(0.5, 1.0, 0.5, vec![], vec![]);
        assert!((report.pg2s - 0.75).abs() < 1e-12);
        let report = SimilarityReport::new(1.0, 0.0, 0.25, vec![], vec![]);
        assert!((report.pg2s - 0.75).abs() < 1e-12);
    }

    #[test]
    fn kas_report_mirrors_defined_flag() {
        let report = KasReport::undefined();
        assert!(!report.defined);
        assert_eq!(report.score, None);

        let report = KasReport::defined(vec![
            StepPrecision {
                step_index: 0,
                precision: 1.0,
            },
            StepPrecision {
                step_index: 1,
                precision: 0.5,
            },
        ]);
        assert!(report.defined);
        assert!((report.score.unwrap() - 0.75).abs() < 1e-12);
    }
}
