//! Parsers for agent replies.
//!
//! Every parser first looks for a fenced JSON block (or a reply that is
//! bare JSON), then falls back to line-oriented bullet parsing. Replies
//! that fit neither grammar fail with the raw text preserved.

use serde::Deserialize;
use serde_json::Value;

use crate::agent::{KnowledgeGraph, ResponseParseError, SceneDescription};

/// Extracts the payload of the first fenced code block, or the whole reply
/// when it is itself a JSON document.
fn json_payload(text: &str) -> Option<String> {
    if let Some(open) = text.find("```") {
        let after_fence = &text[open + 3..];
        let body_start = after_fence.find('\n')?; // skip the info string ("json")
        let body = &after_fence[body_start + 1..];
        let close = body.find("```")?;
        return Some(body[..close].trim().to_string());
    }
    let trimmed = text.trim();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Some(trimmed.to_string());
    }
    None
}

fn bullet_body(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    for marker in ["- ", "* ", "• "] {
        if let Some(rest) = trimmed.strip_prefix(marker) {
            return Some(rest.trim());
        }
    }
    None
}

#[derive(Deserialize)]
struct GraphReply {
    #[serde(default)]
    nodes: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String, String)>,
}

/// Parses a knowledge-graph reply. Bullet grammar: `- node` declares a
/// node, `- subject | relation | object` declares an edge.
pub fn parse_graph(text: &str) -> Result<KnowledgeGraph, ResponseParseError> {
    if let Some(payload) = json_payload(text) {
        if let Ok(reply) = serde_json::from_str::<GraphReply>(&payload) {
            return Ok(KnowledgeGraph::new(reply.nodes, reply.edges));
        }
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for line in text.lines() {
        let Some(body) = bullet_body(line) else {
            continue;
        };
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split('|').map(str::trim).collect();
        match parts.as_slice() {
            [subject, relation, object]
                if !subject.is_empty() && !relation.is_empty() && !object.is_empty() =>
            {
                edges.push((
                    subject.to_string(),
                    relation.to_string(),
                    object.to_string(),
                ));
            }
            [node] => nodes.push(node.to_string()),
            _ => continue,
        }
    }
    if nodes.is_empty() && edges.is_empty() {
        return Err(ResponseParseError::new("knowledge graph", text));
    }
    Ok(KnowledgeGraph::new(nodes, edges))
}

#[derive(Deserialize)]
struct SceneEntryReply {
    object: String,
    description: String,
}

#[derive(Deserialize)]
struct SceneReply {
    entries: Vec<SceneEntryReply>,
}

/// Parses a scene-description reply. Bullet grammar: `- object: description`.
pub fn parse_scene(text: &str) -> Result<SceneDescription, ResponseParseError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    if let Some(payload) = json_payload(text) {
        if let Ok(reply) = serde_json::from_str::<SceneReply>(&payload) {
            entries = reply
                .entries
                .into_iter()
                .map(|e| (e.object, e.description))
                .collect();
        } else if let Ok(reply) = serde_json::from_str::<Vec<SceneEntryReply>>(&payload) {
            entries = reply
                .into_iter()
                .map(|e| (e.object, e.description))
                .collect();
        } else if let Ok(reply) = serde_json::from_str::<Vec<(String, String)>>(&payload) {
            entries = reply;
        }
    }
    if entries.is_empty() {
        for line in text.lines() {
            let Some(body) = bullet_body(line) else {
                continue;
            };
            if let Some((object, description)) = body.split_once(':') {
                entries.push((object.trim().to_string(), description.trim().to_string()));
            }
        }
    }
    entries.retain(|(object, description)| !object.is_empty() && !description.is_empty());
    if entries.is_empty() {
        return Err(ResponseParseError::new("scene description", text));
    }
    Ok(SceneDescription { entries })
}

/// Parses a plan reply into its steps. Accepts `{"steps": [...]}`, a bare
/// JSON string list, or enumerated lines (`1.`, `1)`, `Step 1:`, `-`, `*`).
/// Bare unmarked lines are not steps.
pub fn parse_plan_steps(text: &str) -> Result<Vec<String>, ResponseParseError> {
    if let Some(payload) = json_payload(text) {
        if let Ok(value) = serde_json::from_str::<Value>(&payload) {
            let list = match &value {
                Value::Object(map) => map.get("steps").and_then(Value::as_array),
                Value::Array(_) => value.as_array(),
                _ => None,
            };
            if let Some(list) = list {
                let steps: Vec<String> = list
                    .iter()
                    .filter_map(Value::as_str)
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if steps.len() == list.len() && !steps.is_empty() {
                    return Ok(steps);
                }
            }
        }
    }
    let mut steps = Vec::new();
    for line in text.lines() {
        if let Some(step) = enumerated_body(line) {
            if !step.is_empty() {
                steps.push(step.to_string());
            }
        }
    }
    if steps.is_empty() {
        return Err(ResponseParseError::new("plan steps", text));
    }
    Ok(steps)
}

/// Strips a step marker: `3.`, `3)`, `Step 3:`, or a bullet.
fn enumerated_body(line: &str) -> Option<&str> {
    let trimmed = line.trim();
    if let Some(body) = bullet_body(trimmed) {
        return Some(body);
    }
    let unprefixed = trimmed
        .strip_prefix("Step ")
        .or_else(|| trimmed.strip_prefix("step "))
        .unwrap_or(trimmed);
    let digits = unprefixed.chars().take_while(char::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &unprefixed[digits..];
    rest.strip_prefix('.')
        .or_else(|| rest.strip_prefix(')'))
        .or_else(|| rest.strip_prefix(':'))
        .map(str::trim)
}
