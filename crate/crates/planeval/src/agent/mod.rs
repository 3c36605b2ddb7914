//! Plan generation over pluggable model backends.
//!
//! The multi-agent pipeline runs three stages in order — a semantic
//! knowledge miner (SKM) that builds the scene's object ontology, a
//! grounded knowledge miner (GKM) that describes each object in place, and
//! a planner that turns both into a step-by-step plan. The single-agent
//! baseline issues one combined prompt. Either mode takes its scene as an
//! image or as an environment table serialized into the prompts.

pub mod backend;
pub mod cassette;
pub mod parse;
pub mod prompts;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::corpus::EnvironmentTable;
use crate::plan::{validate_plan, Plan, PlanError};
use backend::{BackendError, ModelBackend};
use prompts::{render, PromptSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub data: Vec<u8>,
    /// MIME type, e.g. `image/png`.
    pub media_type: String,
}

impl ImagePayload {
    /// Reads a PNG or JPEG file, deriving the media type from the extension.
    pub fn from_path(path: &std::path::Path) -> Result<ImagePayload, AgentError> {
        let media_type = match path.extension().and_then(|e| e.to_str()) {
            Some("png") => "image/png",
            Some("jpg") | Some("jpeg") => "image/jpeg",
            other => {
                return Err(AgentError::InvalidInput(format!(
                    "unsupported image extension {other:?} for {}",
                    path.display()
                )))
            }
        };
        let data = std::fs::read(path)
            .map_err(|e| AgentError::InvalidInput(format!("image {}: {e}", path.display())))?;
        Ok(ImagePayload {
            data,
            media_type: media_type.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub image: Option<ImagePayload>,
    /// Decoding knobs (e.g. `temperature`), opaque to the pipeline and
    /// excluded from cassette hashes.
    pub params: BTreeMap<String, String>,
}

impl ModelRequest {
    pub fn text(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> ModelRequest {
        ModelRequest {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            image: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_image(mut self, image: ImagePayload) -> ModelRequest {
        self.image = Some(image);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelResponse {
    pub text: String,
}

/// Scene ontology: object classes and relations between them. Every edge
/// endpoint is guaranteed to appear in `nodes`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, String)>,
}

impl KnowledgeGraph {
    /// Builds a graph, de-duplicating nodes and declaring any edge endpoint
    /// that is missing from the node list (with a warning).
    pub fn new(nodes: Vec<String>, edges: Vec<(String, String, String)>) -> KnowledgeGraph {
        let mut seen = std::collections::HashSet::new();
        let mut all_nodes = Vec::new();
        for node in nodes {
            if seen.insert(node.clone()) {
                all_nodes.push(node);
            }
        }
        for (subject, _, object) in &edges {
            for endpoint in [subject, object] {
                if seen.insert(endpoint.clone()) {
                    log::warn!("edge endpoint {endpoint:?} was not declared as a node; adding it");
                    all_nodes.push(endpoint.clone());
                }
            }
        }
        KnowledgeGraph {
            nodes: all_nodes,
            edges,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    /// Text form used in prompts; every node name appears verbatim.
    pub fn to_prompt_text(&self) -> String {
        let mut out = format!("Objects: {}\n", self.nodes.join(", "));
        if self.edges.is_empty() {
            out.push_str("Relations: (none)\n");
        } else {
            out.push_str("Relations:\n");
            for (subject, relation, object) in &self.edges {
                out.push_str(&format!("{subject} | {relation} | {object}\n"));
            }
        }
        out
    }
}

/// Grounded per-object descriptions, including relations to surrounding
/// objects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SceneDescription {
    pub entries: Vec<(String, String)>,
}

impl SceneDescription {
    /// Text form used in prompts.
    pub fn to_prompt_text(&self) -> String {
        self.entries
            .iter()
            .map(|(object, description)| format!("- {object}: {description}\n"))
            .collect()
    }
}

/// The scene handed to the pipeline: exactly one of an image or a table.
#[derive(Debug, Clone)]
pub enum SceneInput {
    Image(ImagePayload),
    Table(EnvironmentTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    MultiAgent,
    SingleAgent,
}

/// One completed model exchange.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub agent: String,
    pub request: ModelRequest,
    pub response: ModelResponse,
    pub wall_time: Duration,
}

/// All stages of one pipeline run plus the validated final plan.
#[derive(Debug, Clone)]
pub struct AgentTranscript {
    pub stages: Vec<StageRecord>,
    pub final_plan: Plan,
}

/// JSON form of a transcript. Image payloads are represented by their
/// SHA-256 digest rather than inlined.
pub fn transcript_to_json(transcript: &AgentTranscript) -> String {
    use sha2::{Digest, Sha256};
    let stages: Vec<serde_json::Value> = transcript
        .stages
        .iter()
        .map(|stage| {
            let image = stage.request.image.as_ref().map(|image| {
                serde_json::json!({
                    "sha256": format!("{:x}", Sha256::digest(&image.data)),
                    "media_type": image.media_type,
                })
            });
            serde_json::json!({
                "agent": stage.agent,
                "system_prompt": stage.request.system_prompt,
                "user_prompt": stage.request.user_prompt,
                "image": image,
                "response_text": stage.response.text,
                "wall_time_ms": stage.wall_time.as_millis() as u64,
            })
        })
        .collect();
    let value = serde_json::json!({
        "stages": stages,
        "final_plan": transcript.final_plan,
    });
    serde_json::to_string_pretty(&value).expect("transcript serialization cannot fail")
}

/// A model reply that fit none of the accepted grammars. Keeps the raw
/// text for inspection.
#[derive(Debug, Error)]
#[error("could not parse {what} from model reply: {raw_text:.200}")]
pub struct ResponseParseError {
    pub what: &'static str,
    pub raw_text: String,
}

impl ResponseParseError {
    pub fn new(what: &'static str, raw_text: impl Into<String>) -> ResponseParseError {
        ResponseParseError {
            what,
            raw_text: raw_text.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Parse(#[from] ResponseParseError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{0}")]
    InvalidInput(String),
}

/// A failed pipeline run: the error plus every stage completed before it.
#[derive(Debug, Error)]
#[error("pipeline failed: {error}")]
pub struct PipelineFailure {
    #[source]
    pub error: AgentError,
    pub stages: Vec<StageRecord>,
}

fn checked_complete(
    backend: &dyn ModelBackend,
    agent: &str,
    request: &ModelRequest,
) -> Result<(ModelResponse, Duration), BackendError> {
    if request.image.is_some() && !backend.supports_images() {
        return Err(BackendError::UnsupportedModality);
    }
    let start = Instant::now();
    let response = backend.complete(agent, request)?;
    let wall_time = start.elapsed();
    if response.text.trim().is_empty() {
        return Err(BackendError::EmptyResponse(agent.to_string()));
    }
    Ok((response, wall_time))
}

fn stage_record(
    agent: &str,
    request: ModelRequest,
    response: ModelResponse,
    wall_time: Duration,
) -> StageRecord {
    StageRecord {
        agent: agent.to_string(),
        request,
        response,
        wall_time,
    }
}

/// Builds the scene ontology from the scene input.
pub fn run_skm(
    scene: &SceneInput,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
) -> Result<(KnowledgeGraph, StageRecord), AgentError> {
    let request = match scene {
        SceneInput::Image(image) => {
            ModelRequest::text(&prompts.skm_system, &prompts.skm_user_image)
                .with_image(image.clone())
        }
        SceneInput::Table(table) => ModelRequest::text(
            &prompts.skm_system,
            render(&prompts.skm_user_table, &[("table", &table.render_text())]),
        ),
    };
    let (response, wall_time) = checked_complete(backend, "skm", &request)?;
    let graph = parse::parse_graph(&response.text)?;
    Ok((graph, stage_record("skm", request, response, wall_time)))
}

/// Grounds every object of the graph in the scene.
pub fn run_gkm(
    scene: &SceneInput,
    graph: &KnowledgeGraph,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
) -> Result<(SceneDescription, StageRecord), AgentError> {
    if graph.is_empty() {
        log::warn!("knowledge graph is empty; grounding runs on the scene alone");
    }
    let graph_text = graph.to_prompt_text();
    let request = match scene {
        SceneInput::Image(image) => ModelRequest::text(
            &prompts.gkm_system,
            render(&prompts.gkm_user_image, &[("graph", graph_text.as_str())]),
        )
        .with_image(image.clone()),
        SceneInput::Table(table) => ModelRequest::text(
            &prompts.gkm_system,
            render(
                &prompts.gkm_user_table,
                &[
                    ("graph", graph_text.as_str()),
                    ("table", &table.render_text()),
                ],
            ),
        ),
    };
    let (response, wall_time) = checked_complete(backend, "gkm", &request)?;
    let scene_description = parse::parse_scene(&response.text)?;
    Ok((
        scene_description,
        stage_record("gkm", request, response, wall_time),
    ))
}

/// Generates the plan from the task and the two mined knowledge sources.
pub fn run_planner(
    task: &str,
    graph: &KnowledgeGraph,
    scene: &SceneDescription,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
) -> Result<(Plan, StageRecord), AgentError> {
    if task.trim().is_empty() {
        return Err(AgentError::InvalidInput("task is empty".to_string()));
    }
    let request = ModelRequest::text(
        &prompts.planner_system,
        render(
            &prompts.planner_user,
            &[
                ("task", task),
                ("graph", &graph.to_prompt_text()),
                ("scene", &scene.to_prompt_text()),
            ],
        ),
    );
    let (response, wall_time) = checked_complete(backend, "planner", &request)?;
    let steps = parse::parse_plan_steps(&response.text)?;
    let plan = validate_plan(Plan::new(task, steps))?;
    Ok((plan, stage_record("planner", request, response, wall_time)))
}

fn run_single(
    task: &str,
    scene: &SceneInput,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
) -> Result<(Plan, StageRecord), AgentError> {
    let request = match scene {
        SceneInput::Image(image) => ModelRequest::text(
            &prompts.single_system,
            render(&prompts.single_user_image, &[("task", task)]),
        )
        .with_image(image.clone()),
        SceneInput::Table(table) => ModelRequest::text(
            &prompts.single_system,
            render(
                &prompts.single_user_table,
                &[("task", task), ("table", &table.render_text())],
            ),
        ),
    };
    let (response, wall_time) = checked_complete(backend, "single", &request)?;
    let steps = parse::parse_plan_steps(&response.text)?;
    let plan = validate_plan(Plan::new(task, steps))?;
    Ok((plan, stage_record("single", request, response, wall_time)))
}

fn pipeline_stages(
    task: &str,
    scene: &SceneInput,
    mode: PipelineMode,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
    stages: &mut Vec<StageRecord>,
) -> Result<Plan, AgentError> {
    if task.trim().is_empty() {
        return Err(AgentError::InvalidInput("task is empty".to_string()));
    }
    match mode {
        PipelineMode::MultiAgent => {
            let (graph, record) = run_skm(scene, backend, prompts)?;
            stages.push(record);
            let (scene_description, record) = run_gkm(scene, &graph, backend, prompts)?;
            stages.push(record);
            let (plan, record) = run_planner(task, &graph, &scene_description, backend, prompts)?;
            stages.push(record);
            Ok(plan)
        }
        PipelineMode::SingleAgent => {
            let (plan, record) = run_single(task, scene, backend, prompts)?;
            stages.push(record);
            Ok(plan)
        }
    }
}

/// Runs the full pipeline. On failure the transcript of completed stages
/// rides along with the error.
pub fn run_pipeline(
    task: &str,
    scene: &SceneInput,
    mode: PipelineMode,
    backend: &dyn ModelBackend,
    prompts: &PromptSet,
) -> Result<AgentTranscript, PipelineFailure> {
    let mut stages = Vec::new();
    match pipeline_stages(task, scene, mode, backend, prompts, &mut stages) {
        Ok(final_plan) => Ok(AgentTranscript { stages, final_plan }),
        Err(error) => Err(PipelineFailure { error, stages }),
    }
}
