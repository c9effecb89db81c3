//! Program-generator abstraction: a remote chat-completion client plus two
//! deterministic offline mocks (scripted and mutation-based), all behind one
//! interface. Search code never knows which one it is talking to.

mod mocks;
mod prompts;
mod remote;
mod retry;

pub use mocks::{mutate_parents, MutationGateway, ScriptedGateway};
pub use prompts::{format_demo_pairs, format_grids, render, PromptSet};
pub use remote::RemoteGateway;
pub use retry::{RetryPolicy, Sleeper, ThreadSleeper};

use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum GatewayError {
    /// Transport-level failure surviving the retry policy.
    #[error("gateway transport failed after retries: {0}")]
    Transport(String),
    /// Credentials rejected; never retried.
    #[error("gateway rejected credentials: {0}")]
    Auth(String),
    /// The generator returned no usable text after retries.
    #[error("gateway returned empty text")]
    EmptyResponse,
    /// Gateway selected but not configured (missing URL, script, ...).
    #[error("gateway misconfigured: {0}")]
    MissingConfig(String),
    /// Response body did not match the wire contract.
    #[error("gateway response unreadable: {0}")]
    BadResponse(String),
}

impl GatewayError {
    /// Transient errors are worth retrying with backoff.
    pub fn is_transient(&self) -> bool {
        matches!(self, GatewayError::Transport(_) | GatewayError::BadResponse(_))
    }
}

/// What a generation call is for. Mocks branch on this; the remote gateway
/// sends the prompt regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    ProgramGeneration,
    Describe,
    GoalHypothesis,
}

/// Call metadata: where in the run the request originates, plus structured
/// context the offline mocks need (parent sources for mutation, the subject
/// program for descriptions).
#[derive(Debug, Clone)]
pub struct RequestMeta {
    pub task_id: String,
    pub island: Option<usize>,
    pub step: Option<usize>,
    pub purpose: Purpose,
    pub parent_sources: Vec<String>,
    pub subject: Option<String>,
}

impl RequestMeta {
    pub fn new(task_id: impl Into<String>, purpose: Purpose) -> Self {
        RequestMeta {
            task_id: task_id.into(),
            island: None,
            step: None,
            purpose,
            parent_sources: Vec::new(),
            subject: None,
        }
    }
}

/// A single generation call.
#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub prompt: String,
    /// Sampling temperature; defaults to 1.0 so iterations stay creative.
    pub temperature: f64,
    /// Programs requested per call.
    pub candidates: usize,
    pub meta: RequestMeta,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, meta: RequestMeta) -> Self {
        GenerationRequest { prompt: prompt.into(), temperature: 1.0, candidates: 5, meta }
    }
}

/// Raw generator text plus the DSL sources extracted from its fenced blocks,
/// in order of appearance.
#[derive(Debug, Clone)]
pub struct GenerationResponse {
    pub raw: String,
    pub extracted: Vec<String>,
}

impl GenerationResponse {
    pub fn from_raw(raw: impl Into<String>, max_candidates: usize) -> Self {
        let raw = raw.into();
        let extracted = extract_programs(&raw, max_candidates);
        GenerationResponse { raw, extracted }
    }
}

/// The generator interface. Implementations must be deterministic given
/// their own seed/script so whole runs can be replayed.
pub trait Gateway: Send {
    fn generate(&mut self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError>;
}

/// Contents of fenced code blocks, trimmed, at most `max` of them. Blocks
/// that fail to parse as DSL are still returned: the parser, not the
/// extractor, judges validity. Unterminated fences are ignored.
pub fn extract_programs(raw: &str, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut block: Option<Vec<&str>> = None;
    for line in raw.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            match block.take() {
                None => block = Some(Vec::new()),
                Some(lines) => {
                    if out.len() < max {
                        out.push(lines.join("\n").trim().to_string());
                    }
                }
            }
        } else if let Some(lines) = block.as_mut() {
            lines.push(line);
        }
        if out.len() >= max && block.is_none() {
            break;
        }
    }
    out
}
