//! Deterministic lexicon-driven annotator for imperative household-plan
//! sentences. Runs with zero external models.
//!
//! Tagging rules:
//! - the first verb-lexicon hit in a clause is that clause's verb; the
//!   sentence's first clause verb is the root
//! - nouns after the clause verb with no preposition in between are DOBJ
//! - nouns before any verb are NSUBJ
//! - nouns after a preposition are plain NOUN tokens headed by the
//!   preposition; the preposition attaches to the nearest preceding object
//!   noun, or to the clause verb when no object precedes it
//! - particle words directly after the verb ("put on", "turn on") do not
//!   start a prepositional phrase
//! - consecutive nouns form a compound; only the last noun of the run keeps
//!   the grammatical role

use std::collections::BTreeSet;
use std::path::Path;

use super::lexicon;
use super::{AnnotatedToken, Annotator, AnnotatorError, Dep, Pos};

pub struct RuleBasedAnnotator {
    verbs: BTreeSet<String>,
    nouns: BTreeSet<String>,
    prepositions: BTreeSet<String>,
    particles: BTreeSet<String>,
    determiners: BTreeSet<String>,
    conjunctions: BTreeSet<String>,
}

impl RuleBasedAnnotator {
    /// Annotator over the lexicons bundled into the library.
    pub fn bundled() -> Self {
        RuleBasedAnnotator {
            verbs: lexicon::bundled_verbs().clone(),
            nouns: lexicon::bundled_nouns().clone(),
            prepositions: lexicon::bundled_prepositions().clone(),
            particles: lexicon::bundled_particles().clone(),
            determiners: lexicon::bundled_determiners().clone(),
            conjunctions: lexicon::bundled_conjunctions().clone(),
        }
    }

    /// Annotator with `verbs.txt` and `nouns.txt` read from a directory;
    /// the closed-class lists stay bundled. Files use the one-lemma-per-line
    /// lexicon format.
    pub fn from_lexicon_dir(dir: impl AsRef<Path>) -> Result<Self, AnnotatorError> {
        let dir = dir.as_ref();
        Ok(RuleBasedAnnotator {
            verbs: lexicon::load_lexicon(dir.join("verbs.txt"))?,
            nouns: lexicon::load_lexicon(dir.join("nouns.txt"))?,
            ..RuleBasedAnnotator::bundled()
        })
    }

    fn verb_lemma(&self, lower: &str) -> Option<String> {
        lemma_against(lower, &self.verbs)
    }

    fn noun_lemma(&self, lower: &str) -> Option<String> {
        if let Some(irregular) = irregular_noun(lower) {
            if self.nouns.contains(irregular) {
                return Some(irregular.to_string());
            }
        }
        lemma_against(lower, &self.nouns)
    }

    /// True when a clause starting at `at` opens with a verb, looking past
    /// determiners and coordinators.
    fn verb_leads_clause(&self, words: &[RawToken], at: usize) -> bool {
        for word in words.iter().skip(at).take(3) {
            let lower = &word.lower;
            if self.determiners.contains(lower) || self.conjunctions.contains(lower) {
                continue;
            }
            return self.verb_lemma(lower).is_some();
        }
        false
    }
}

/// Inflection stripping guarded by lexicon membership.
fn lemma_against(lower: &str, lexicon: &BTreeSet<String>) -> Option<String> {
    if lexicon.contains(lower) {
        return Some(lower.to_string());
    }
    let candidates = |stem: &str| -> Vec<String> {
        let mut forms = vec![stem.to_string(), format!("{stem}e")];
        let bytes = stem.as_bytes();
        if bytes.len() >= 2 && bytes[bytes.len() - 1] == bytes[bytes.len() - 2] {
            forms.push(stem[..stem.len() - 1].to_string());
        }
        forms
    };
    for suffix in ["ing", "ed", "es", "s"] {
        if let Some(stem) = lower.strip_suffix(suffix) {
            if stem.len() < 2 {
                continue;
            }
            for form in candidates(stem) {
                if lexicon.contains(&form) {
                    return Some(form);
                }
            }
        }
    }
    if let Some(stem) = lower.strip_suffix("ies") {
        let form = format!("{stem}y");
        if lexicon.contains(&form) {
            return Some(form);
        }
    }
    None
}

fn irregular_noun(lower: &str) -> Option<&'static str> {
    Some(match lower {
        "knives" => "knife",
        "shelves" => "shelf",
        "loaves" => "loaf",
        "leaves" => "leaf",
        "mice" => "mouse",
        "feet" => "foot",
        _ => return None,
    })
}

struct RawToken {
    text: String,
    lower: String,
    break_before: bool,
}

fn tokenize(sentence: &str) -> Vec<RawToken> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut pending_break = false;
    let flush = |current: &mut String, pending_break: &mut bool, tokens: &mut Vec<RawToken>| {
        let mut word = current.trim_matches(|c| c == '\'' || c == '-').to_string();
        current.clear();
        if let Some(stripped) = word.strip_suffix("'s").or_else(|| word.strip_suffix("'S")) {
            word = stripped.to_string();
        }
        if word.is_empty() {
            return;
        }
        let lower = word.to_lowercase();
        tokens.push(RawToken {
            text: word,
            lower,
            break_before: std::mem::take(pending_break),
        });
    };
    for ch in sentence.chars() {
        if ch.is_alphanumeric() || ch == '\'' || ch == '-' {
            current.push(ch);
        } else {
            flush(&mut current, &mut pending_break, &mut tokens);
            if matches!(ch, ',' | ';' | ':') {
                pending_break = true;
            }
        }
    }
    flush(&mut current, &mut pending_break, &mut tokens);
    tokens
}

impl Annotator for RuleBasedAnnotator {
    fn annotate(&self, sentence: &str) -> Result<Vec<AnnotatedToken>, AnnotatorError> {
        let words = tokenize(sentence);
        let count = words.len();
        let mut out: Vec<AnnotatedToken> = Vec::with_capacity(count);

        const UNRESOLVED: usize = usize::MAX;
        let mut first_root: Option<usize> = None;
        let mut clause_verb: Option<usize> = None;
        let mut pending_prep: Option<usize> = None;
        let mut last_object: Option<usize> = None;
        let mut break_next = false;

        for i in 0..count {
            let lower = words[i].lower.clone();
            if words[i].break_before && self.verb_leads_clause(&words, i) {
                break_next = true;
            }
            if std::mem::take(&mut break_next) {
                clause_verb = None;
                pending_prep = None;
                last_object = None;
            }

            let fallback_head = clause_verb.unwrap_or(UNRESOLVED);
            let (pos, dep, head);

            if self.determiners.contains(&lower) {
                (pos, dep) = (Pos::Other, Dep::Other);
                head = UNRESOLVED; // resolved to the next noun below
            } else if self.conjunctions.contains(&lower) {
                if self.verb_leads_clause(&words, i + 1) {
                    break_next = true;
                }
                (pos, dep, head) = (Pos::Other, Dep::Other, fallback_head);
            } else if self.particles.contains(&lower)
                && clause_verb.is_some()
                && clause_verb == i.checked_sub(1)
            {
                (pos, dep, head) = (Pos::Other, Dep::Other, fallback_head);
            } else if self.prepositions.contains(&lower) {
                pending_prep = Some(i);
                (pos, dep, head) = (
                    Pos::Other,
                    Dep::Other,
                    last_object.or(clause_verb).unwrap_or(UNRESOLVED),
                );
            } else {
                let verb = self.verb_lemma(&lower);
                let noun = self.noun_lemma(&lower);
                match (verb, noun, clause_verb) {
                    (Some(lemma), _, None) | (Some(lemma), None, Some(_)) => {
                        let is_root = clause_verb.is_none();
                        clause_verb = Some(i);
                        if is_root {
                            first_root.get_or_insert(i);
                            pending_prep = None;
                            last_object = None;
                        }
                        out.push(AnnotatedToken {
                            text: words[i].text.clone(),
                            lemma: lemma.clone(),
                            pos: Pos::Verb,
                            dep: if is_root { Dep::Root } else { Dep::Other },
                            head_index: if is_root { i } else { fallback_head },
                        });
                        continue;
                    }
                    (_, Some(lemma), _) => {
                        let continues_run = i > 0 && out.last().map(|t| t.pos) == Some(Pos::Noun);
                        let (noun_dep, noun_head) = if continues_run {
                            // Compound: take over the run's role, demote the
                            // previous noun to a modifier headed by this one.
                            let prev = out.last_mut().unwrap();
                            let inherited = (prev.dep, prev.head_index);
                            prev.dep = Dep::Other;
                            prev.head_index = i;
                            inherited
                        } else if clause_verb.is_none() && first_root.is_none() {
                            (Dep::Nsubj, UNRESOLVED)
                        } else if let Some(prep) = pending_prep.take() {
                            (Dep::Other, prep)
                        } else {
                            (Dep::Dobj, fallback_head)
                        };
                        if clause_verb.is_some() || noun_dep == Dep::Other {
                            last_object = Some(i);
                        }
                        out.push(AnnotatedToken {
                            text: words[i].text.clone(),
                            lemma,
                            pos: Pos::Noun,
                            dep: noun_dep,
                            head_index: noun_head,
                        });
                        continue;
                    }
                    _ => {
                        (pos, dep, head) = (Pos::Other, Dep::Other, fallback_head);
                    }
                }
            }
            out.push(AnnotatedToken {
                text: words[i].text.clone(),
                lemma: lower,
                pos,
                dep,
                head_index: head,
            });
        }

        // Resolve deferred heads: determiners lean on the next noun;
        // everything else lands on the sentence root, or itself if none.
        for i in 0..out.len() {
            if out[i].head_index != UNRESOLVED {
                continue;
            }
            let next_noun = (i + 1..out.len()).find(|&j| out[j].pos == Pos::Noun);
            out[i].head_index = match (out[i].pos, next_noun, first_root) {
                (Pos::Other, Some(j), _) if self.determiners.contains(&out[i].lemma) => j,
                (_, _, Some(root)) => root,
                _ => i,
            };
        }
        Ok(out)
    }
}
