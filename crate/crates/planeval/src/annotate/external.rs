//! Annotator backed by an HTTP tagging service.
//!
//! Wire protocol: `POST <endpoint>` with `{"sentence": "..."}`; the service
//! replies `{"tokens": [{"text", "lemma", "pos", "dep", "head"}]}`. Tags are
//! mapped down to the small alphabet exposed by this module: pos `VERB` and
//! `NOUN`/`PROPN` survive, dependency `ROOT`, `DOBJ`/`OBJ`, `NSUBJ` survive,
//! and a verb conjoined to the root is promoted to a root itself; everything
//! else becomes `OTHER`.

use std::time::Duration;

use serde::Deserialize;

use super::{validate_heads, AnnotatedToken, Annotator, AnnotatorError, Dep, Pos};

#[derive(Debug, Deserialize)]
struct WireReply {
    tokens: Vec<WireToken>,
}

#[derive(Debug, Deserialize)]
struct WireToken {
    text: String,
    lemma: String,
    pos: String,
    dep: String,
    head: usize,
}

pub struct ExternalAnnotator {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl ExternalAnnotator {
    pub fn new(endpoint: &str) -> Result<Self, AnnotatorError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| AnnotatorError(e.to_string()))?;
        Ok(ExternalAnnotator {
            endpoint: endpoint.to_string(),
            client,
        })
    }
}

impl Annotator for ExternalAnnotator {
    fn annotate(&self, sentence: &str) -> Result<Vec<AnnotatedToken>, AnnotatorError> {
        let reply: WireReply = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "sentence": sentence }))
            .send()
            .map_err(|e| AnnotatorError(format!("tagging service: {e}")))?
            .error_for_status()
            .map_err(|e| AnnotatorError(format!("tagging service: {e}")))?
            .json()
            .map_err(|e| AnnotatorError(format!("malformed tagging reply: {e}")))?;

        let conj_verbs: Vec<bool> = reply
            .tokens
            .iter()
            .map(|t| t.pos.eq_ignore_ascii_case("VERB") && t.dep.eq_ignore_ascii_case("CONJ"))
            .collect();
        let mut tokens: Vec<AnnotatedToken> = reply
            .tokens
            .into_iter()
            .map(|t| AnnotatedToken {
                pos: match t.pos.to_ascii_uppercase().as_str() {
                    "VERB" => Pos::Verb,
                    "NOUN" | "PROPN" => Pos::Noun,
                    _ => Pos::Other,
                },
                dep: match t.dep.to_ascii_uppercase().as_str() {
                    "ROOT" => Dep::Root,
                    "DOBJ" | "OBJ" => Dep::Dobj,
                    "NSUBJ" => Dep::Nsubj,
                    _ => Dep::Other,
                },
                text: t.text,
                lemma: t.lemma.to_lowercase(),
                head_index: t.head,
            })
            .collect();
        validate_heads(&tokens)?;

        // Promote verbs conjoined to a root: "turn around and walk" has two
        // clause verbs even though the wire tags the second as CONJ.
        loop {
            let mut changed = false;
            for i in 0..tokens.len() {
                if conj_verbs[i]
                    && tokens[i].dep == Dep::Other
                    && tokens[tokens[i].head_index].dep == Dep::Root
                {
                    tokens[i].dep = Dep::Root;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(tokens)
    }

    /// One request in flight at a time; local tagging sidecars are
    /// typically single-threaded.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_http::{serve_requests, serve_responses};

    #[test]
    fn maps_wire_tags_down_to_the_small_alphabet() {
        let reply = r#"{"tokens": [
            {"text": "Grab", "lemma": "grab", "pos": "VERB", "dep": "ROOT", "head": 0},
            {"text": "the", "lemma": "the", "pos": "DET", "dep": "det", "head": 2},
            {"text": "tomato", "lemma": "tomato", "pos": "NOUN", "dep": "dobj", "head": 0}
        ]}"#;
        let server = serve_requests(vec![reply.to_string()]);
        let annotator = ExternalAnnotator::new(&server.url).unwrap();
        let tokens = annotator.annotate("Grab the tomato").unwrap();
        assert_eq!(tokens[0].pos, Pos::Verb);
        assert_eq!(tokens[0].dep, Dep::Root);
        assert_eq!(tokens[1].pos, Pos::Other);
        assert_eq!(tokens[1].dep, Dep::Other);
        assert_eq!(tokens[2].pos, Pos::Noun);
        assert_eq!(tokens[2].dep, Dep::Dobj);
        let requests = server.finish();
        assert!(requests[0].contains(r#""sentence""#));

        assert!(!annotator.concurrent_safe());
    }

    #[test]
    fn promotes_verbs_conjoined_to_the_root() {
        let reply = r#"{"tokens": [
            {"text": "turn", "lemma": "turn", "pos": "VERB", "dep": "ROOT", "head": 0},
            {"text": "and", "lemma": "and", "pos": "CCONJ", "dep": "cc", "head": 0},
            {"text": "walk", "lemma": "walk", "pos": "VERB", "dep": "conj", "head": 0}
        ]}"#;
        let server = serve_requests(vec![reply.to_string()]);
        let annotator = ExternalAnnotator::new(&server.url).unwrap();
        let tokens = annotator.annotate("turn and walk").unwrap();
        assert_eq!(tokens[2].dep, Dep::Root);
        server.finish();
    }

    #[test]
    fn out_of_range_head_is_an_error() {
        let reply = r#"{"tokens": [
            {"text": "walk", "lemma": "walk", "pos": "VERB", "dep": "ROOT", "head": 9}
        ]}"#;
        let server = serve_requests(vec![reply.to_string()]);
        let annotator = ExternalAnnotator::new(&server.url).unwrap();
        assert!(annotator.annotate("walk").is_err());
        server.finish();
    }

    #[test]
    fn http_error_status_is_an_annotator_error() {
        let server = serve_responses(vec![(500, r#"{"error": "down"}"#.to_string())]);
        let annotator = ExternalAnnotator::new(&server.url).unwrap();
        let err = annotator.annotate("walk").unwrap_err();
        assert!(err.0.contains("tagging service"));
        server.finish();
    }
}
