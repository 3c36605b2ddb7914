//! Controlled plan corruption: whole-word substitutions applied to plan
//! steps, used to degrade plans by a known amount. The goal sentence is
//! never touched.

use regex::{Captures, Regex};
use serde::Deserialize;
use thiserror::Error;

use crate::plan::Plan;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorruptionError {
    #[error("substitution source word is empty")]
    EmptySourceWord,
    #[error("duplicate substitution source word {0:?}")]
    DuplicateSourceWord(String),
    #[error("invalid substitution file: {0}")]
    Format(String),
}

/// An ordered list of whole-word, case-insensitive substitutions.
///
/// Pairs apply sequentially in list order, so a later pair can rewrite the
/// output of an earlier one. Matching is bounded at word edges whenever the
/// source word starts or ends with a word character.
#[derive(Debug, Clone)]
pub struct SubstitutionMap {
    pairs: Vec<(String, String)>,
    patterns: Vec<Regex>,
}

#[derive(Deserialize)]
struct SubstitutionFile {
    pairs: Vec<(String, String)>,
}

impl SubstitutionMap {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self, CorruptionError> {
        let mut seen = std::collections::HashSet::new();
        let mut patterns = Vec::with_capacity(pairs.len());
        for (from, _) in &pairs {
            if from.is_empty() {
                return Err(CorruptionError::EmptySourceWord);
            }
            if !seen.insert(from.to_lowercase()) {
                return Err(CorruptionError::DuplicateSourceWord(from.clone()));
            }
            patterns.push(word_pattern(from));
        }
        Ok(SubstitutionMap { pairs, patterns })
    }

    /// Parses `{"pairs": [["from", "to"], ...]}`.
    pub fn from_json(text: &str) -> Result<Self, CorruptionError> {
        let file: SubstitutionFile =
            serde_json::from_str(text).map_err(|e| CorruptionError::Format(e.to_string()))?;
        SubstitutionMap::new(file.pairs)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The inverse map (targets become sources). Fails if the targets are
    /// not pairwise distinct.
    pub fn inverted(&self) -> Result<SubstitutionMap, CorruptionError> {
        SubstitutionMap::new(
            self.pairs
                .iter()
                .map(|(from, to)| (to.clone(), from.clone()))
                .collect(),
        )
    }
}

fn word_pattern(from: &str) -> Regex {
    let mut pattern = String::from("(?i)");
    if from.chars().next().is_some_and(|c| c.is_alphanumeric()) {
        pattern.push_str(r"\b");
    }
    pattern.push_str(&regex::escape(from));
    if from.chars().last().is_some_and(|c| c.is_alphanumeric()) {
        pattern.push_str(r"\b");
    }
    Regex::new(&pattern).expect("escaped word pattern is always valid")
}

/// Copies the replacement, carrying over the case of the matched text's
/// first letter.
fn cased_replacement(matched: &str, replacement: &str) -> String {
    let mut chars = replacement.chars();
    match (matched.chars().next(), chars.next()) {
        (Some(m), Some(r)) if m.is_uppercase() => r.to_uppercase().chain(chars).collect(),
        (Some(m), Some(r)) if m.is_lowercase() => r.to_lowercase().chain(chars).collect(),
        _ => replacement.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct CorruptionOutcome {
    pub plan: Plan,
    /// Substitutions that actually changed text; identity rewrites and
    /// non-matches count zero.
    pub replacements: usize,
}

/// Applies the map to every step of the plan, leaving the goal and trial id
/// unchanged. A zero-replacement outcome is reported (and logged) rather
/// than treated as an error.
pub fn corrupt_plan(plan: &Plan, map: &SubstitutionMap) -> CorruptionOutcome {
    let mut replacements = 0usize;
    let mut steps = plan.steps.clone();
    for (pattern, (_, to)) in map.patterns.iter().zip(&map.pairs) {
        for step in &mut steps {
            let rewritten = pattern.replace_all(step, |caps: &Captures| {
                let matched = caps.get(0).expect("capture 0 always exists").as_str();
                let replacement = cased_replacement(matched, to);
                if replacement != matched {
                    replacements += 1;
                }
                replacement
            });
            if let std::borrow::Cow::Owned(text) = rewritten {
                *step = text;
            }
        }
    }
    if replacements == 0 {
        log::warn!("substitution map left plan {:?} unchanged", plan.trial_id);
    }
    CorruptionOutcome {
        plan: Plan {
            trial_id: plan.trial_id.clone(),
            goal: plan.goal.clone(),
            steps,
        },
        replacements,
    }
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn word() -> impl Strategy<Value = String> {
        "[a-z]{3,8}"
    }

    proptest! {
        /// A map whose sources and targets never appear in the text leaves
        /// the plan unchanged with zero replacements.
        #[test]
        fn disjoint_vocabulary_is_a_no_op(
            words in proptest::collection::vec(word(), 1..6),
        ) {
            let step = words.join(" ") + "x"; // suffix keeps words distinct from map sources
            let plan = Plan::new("g", vec![step.clone()]);
            let map = SubstitutionMap::new(vec![("qqq".into(), "zzz".into())]).unwrap();
            let outcome = corrupt_plan(&plan, &map);
            prop_assert_eq!(outcome.replacements, 0);
            prop_assert_eq!(outcome.plan.steps[0].clone(), step);
        }

        /// Swapping a word out and back in restores the original text when
        /// source and target are distinct and the target is fresh.
        #[test]
        fn corruption_is_reversible(
            prefix in proptest::collection::vec(word(), 0..4),
            suffix in proptest::collection::vec(word(), 0..4),
        ) {
            let mut words = prefix;
            words.push("desk".to_string());
            words.extend(suffix);
            let step = words.join(" ");
            let plan = Plan::new("g", vec![step.clone()]);
            let forward = SubstitutionMap::new(vec![("desk".into(), "qq".into())]).unwrap();
            let corrupted = corrupt_plan(&plan, &forward);
            prop_assert!(corrupted.replacements >= 1);
            let back = corrupt_plan(&corrupted.plan, &forward.inverted().unwrap());
            prop_assert_eq!(back.plan.steps[0].clone(), step);
        }

        /// Replacement count equals the number of occurrences for a single
        /// fresh-target pair.
        #[test]
        fn count_matches_occurrences(n in 1usize..5, filler in word()) {
            prop_assume!(filler != "desk");
            let step = std::iter::repeat("desk")
                .take(n)
                .collect::<Vec<_>>()
                .join(&format!(" {filler} "));
            let plan = Plan::new("g", vec![step]);
            let map = SubstitutionMap::new(vec![("desk".into(), "moonbeam".into())]).unwrap();
            let outcome = corrupt_plan(&plan, &map);
            prop_assert_eq!(outcome.replacements, n);
        }
    }
}
