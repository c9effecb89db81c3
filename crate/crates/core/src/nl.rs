//! Natural-language scoring path: program descriptions, per-island goal
//! hypotheses with top-10 in-context examples, text embeddings, and the
//! distance between goal and description embeddings.
//!
//! The embedding provider is an opaque service: a remote HTTP endpoint or a
//! deterministic local mock, both behind one trait so the whole path is
//! testable offline.

use crate::dsl::{execute, registry_docs, Budget, Program};
use crate::gateway::{
    format_demo_pairs, render, Gateway, GatewayError, GenerationRequest, PromptSet, Purpose,
    RequestMeta, RetryPolicy, Sleeper, ThreadSleeper,
};
use crate::grid::Task;
use crate::scoring::{ScoreError, ScoringFunction};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisSource {
    HumanSeed,
    Generated,
}

/// A natural-language transformation description together with its text
/// embedding.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub text: String,
    pub embedding: Vec<f64>,
    pub source: HypothesisSource,
}

/// Maps text to a fixed-dimension real vector, deterministically within a
/// run.
pub trait EmbeddingProvider: Send {
    /// Vector dimension; `None` until the provider has served a request
    /// (remote services reveal their dimension in the first response).
    fn dimension(&self) -> Option<usize>;
    fn embed(&mut self, text: &str) -> Result<Vec<f64>, GatewayError>;
}

/// Deterministic local embedder: each token of the lowercased text hashes to
/// a seeded 64-dimensional vector, and the text embeds as the sum over its
/// token multiset. Similar token multisets land near each other.
pub struct MockEmbedder {
    seed: u64,
}

pub const MOCK_EMBED_DIM: usize = 64;

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        MockEmbedder { seed }
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn dimension(&self) -> Option<usize> {
        Some(MOCK_EMBED_DIM)
    }

    fn embed(&mut self, text: &str) -> Result<Vec<f64>, GatewayError> {
        use rand::{Rng, SeedableRng};
        let mut v = vec![0.0f64; MOCK_EMBED_DIM];
        let lower = text.to_lowercase();
        for token in lower.split(|c: char| !c.is_ascii_alphanumeric()).filter(|t| !t.is_empty()) {
            let h = crate::dsl::fnv1a64(token.as_bytes()) ^ self.seed;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(h);
            for slot in v.iter_mut() {
                *slot += rng.random_range(-1.0..1.0);
            }
        }
        Ok(v)
    }
}

/// Remote embedding service. Wire contract: request `{"texts": [string]}`,
/// response `{"vectors": [[float]]}`; the dimension is constant per service.
pub struct HttpEmbedder {
    url: String,
    agent: ureq::Agent,
    policy: RetryPolicy,
    sleeper: Box<dyn Sleeper>,
    dimension: Option<usize>,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build();
        HttpEmbedder {
            url: url.into(),
            agent: config.into(),
            policy: RetryPolicy::default(),
            sleeper: Box::new(ThreadSleeper),
            dimension: None,
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn call_once(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let body = serde_json::json!({ "texts": [text] });
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..=299).contains(&status) {
            return Err(GatewayError::Transport(format!("http status {status}")));
        }
        let value: serde_json::Value =
            resp.body_mut().read_json().map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        let vector = value
            .pointer("/vectors/0")
            .and_then(|v| v.as_array())
            .ok_or_else(|| GatewayError::BadResponse("missing vectors[0]".to_string()))?;
        vector
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| GatewayError::BadResponse("non-numeric vector".to_string())))
            .collect()
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    fn embed(&mut self, text: &str) -> Result<Vec<f64>, GatewayError> {
        let policy = self.policy.clone();
        let mut sleeper = std::mem::replace(&mut self.sleeper, Box::new(ThreadSleeper));
        let result = policy.run(sleeper.as_mut(), |_| self.call_once(text));
        self.sleeper = sleeper;
        let v = result?;
        match self.dimension {
            None => self.dimension = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(GatewayError::BadResponse(format!(
                    "embedding dimension changed from {d} to {}",
                    v.len()
                )))
            }
            _ => {}
        }
        Ok(v)
    }
}

/// Euclidean distance between two hypotheses' embeddings.
pub fn nl_score(a: &Hypothesis, b: &Hypothesis) -> Result<f64, ScoreError> {
    if a.embedding.len() != b.embedding.len() {
        return Err(ScoreError::DimensionMismatch {
            expected: a.embedding.len(),
            got: b.embedding.len(),
        });
    }
    Ok(a.embedding.iter().zip(&b.embedding).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

const DESCRIBE_RETRIES: u32 = 3;

/// Ask the generator for a short description of `program`, with existing
/// (program, description) pairs as in-context examples, and embed the
/// result. Empty generator text is retried, then surfaces as
/// `EmptyResponse`.
pub fn describe_program(
    program: &Program,
    exemplars: &[(&Program, &Hypothesis)],
    gateway: &mut dyn Gateway,
    provider: &mut dyn EmbeddingProvider,
    templates: &PromptSet,
    task_id: &str,
) -> Result<Hypothesis, GatewayError> {
    let mut blocks = String::new();
    for (p, h) in exemplars {
        blocks.push_str(&format!("Program:\n```\n{}\n```\nDescription: {}\n\n", p.canonical, h.text));
    }
    let docs = registry_docs();
    let prompt = render(
        &templates.describe,
        &[("dsl_docs", docs.as_str()), ("exemplars", blocks.as_str()), ("program", program.canonical.as_str())],
    );
    let mut meta = RequestMeta::new(task_id, Purpose::Describe);
    meta.subject = Some(program.canonical.clone());
    let req = GenerationRequest::new(prompt, meta);

    let mut text = String::new();
    for _ in 0..DESCRIBE_RETRIES {
        let resp = gateway.generate(&req)?;
        let trimmed = resp.raw.trim();
        if !trimmed.is_empty() {
            text = trimmed.to_string();
            break;
        }
    }
    if text.is_empty() {
        return Err(GatewayError::EmptyResponse);
    }
    let embedding = provider.embed(&text)?;
    Ok(Hypothesis { text, embedding, source: HypothesisSource::Generated })
}

/// Generate the island's goal hypothesis: rank the database with `ranker`
/// (the transformation-embedding scorer), take the top `min(10, n)` programs,
/// show their realized demonstration pairs and descriptions as in-context
/// examples, and complete a description for the task's own pairs.
#[allow(clippy::too_many_arguments)]
pub fn goal_hypothesis(
    task: &Task,
    db: &[(&Program, &Hypothesis)],
    ranker: &mut dyn ScoringFunction,
    gateway: &mut dyn Gateway,
    provider: &mut dyn EmbeddingProvider,
    templates: &PromptSet,
    island: usize,
    budget: &Budget,
) -> Result<Hypothesis, ScoreError> {
    assert!(!db.is_empty(), "goal hypothesis needs a non-empty database");
    let demos = task.demos();
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(db.len());
    for (i, (program, _)) in db.iter().enumerate() {
        ranked.push((ranker.score(&demos, program)?, i));
    }
    ranked.sort_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap().then(db[a.1].0.canonical.cmp(&db[b.1].0.canonical))
    });
    ranked.truncate(10);

    let mut examples = String::new();
    for &(_, i) in &ranked {
        let (program, hypothesis) = db[i];
        examples.push_str("Transformation:\n");
        for (input, _) in &demos {
            examples.push_str(&format!("Input:\n{input}\n"));
            match execute(&program.ast, input, budget) {
                Ok(out) => examples.push_str(&format!("Output:\n{out}\n")),
                Err(e) => examples.push_str(&format!("Output: error: {e}\n")),
            }
        }
        examples.push_str(&format!("Description: {}\n\n", hypothesis.text));
    }

    let prompt = render(
        &templates.goal_hypothesis,
        &[("examples", examples.as_str()), ("task_demos", format_demo_pairs(&demos).as_str())],
    );
    let mut meta = RequestMeta::new(task.id.clone(), Purpose::GoalHypothesis);
    meta.island = Some(island);
    let req = GenerationRequest::new(prompt, meta);

    let mut text = String::new();
    for _ in 0..DESCRIBE_RETRIES {
        let resp = gateway.generate(&req).map_err(ScoreError::Gateway)?;
        let trimmed = resp.raw.trim();
        if !trimmed.is_empty() {
            text = trimmed.to_string();
            break;
        }
    }
    if text.is_empty() {
        return Err(ScoreError::Gateway(GatewayError::EmptyResponse));
    }
    let embedding = provider.embed(&text).map_err(ScoreError::Gateway)?;
    Ok(Hypothesis { text, embedding, source: HypothesisSource::Generated })
}

#[derive(Debug, Error)]
pub enum SeedFileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: expected `program_id<TAB>description`")]
    Malformed(usize),
    #[error("line {line}: duplicate program id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("embedding seed description failed: {0}")]
    Embed(#[from] GatewayError),
}

/// Load human-written seed descriptions: line-delimited
/// `program_id<TAB>description` records. Duplicate ids are rejected; an
/// empty file yields an empty association.
pub fn load_seed_descriptions(
    path: &Path,
    provider: &mut dyn EmbeddingProvider,
) -> Result<BTreeMap<String, Hypothesis>, SeedFileError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, desc) = line.split_once('\t').ok_or(SeedFileError::Malformed(i + 1))?;
        let id = id.trim();
        let desc = desc.trim();
        if id.is_empty() || desc.is_empty() {
            return Err(SeedFileError::Malformed(i + 1));
        }
        if out.contains_key(id) {
            return Err(SeedFileError::DuplicateId { line: i + 1, id: id.to_string() });
        }
        let embedding = provider.embed(desc)?;
        out.insert(
            id.to_string(),
            Hypothesis { text: desc.to_string(), embedding, source: HypothesisSource::HumanSeed },
        );
    }
    Ok(out)
}

/// Scoring function measuring the distance between the island's goal
/// hypothesis and each program's description embedding. Descriptions are
/// cached by canonical source; a fresh goal hypothesis is generated every
/// time an island is (re)initialized. Owns its own gateway: description
/// traffic is separate from program generation and does not consume the
/// run's generation-call budget.
pub struct NlScorer {
    gateway: Box<dyn Gateway>,
    provider: Box<dyn EmbeddingProvider>,
    ranker: Box<dyn ScoringFunction>,
    templates: PromptSet,
    budget: Budget,
    cache: BTreeMap<String, Hypothesis>,
    goals: BTreeMap<usize, Hypothesis>,
    current_island: usize,
    task_id: String,
}

impl NlScorer {
    pub fn new(
        gateway: Box<dyn Gateway>,
        provider: Box<dyn EmbeddingProvider>,
        ranker: Box<dyn ScoringFunction>,
        templates: PromptSet,
    ) -> Self {
        NlScorer {
            gateway,
            provider,
            ranker,
            templates,
            budget: Budget::default(),
            cache: BTreeMap::new(),
            goals: BTreeMap::new(),
            current_island: 0,
            task_id: String::new(),
        }
    }

    /// Attach human seed descriptions (keyed by program id) to the programs
    /// they describe. Programs without entries are described on demand.
    pub fn attach_seed_descriptions(&mut self, assoc: &BTreeMap<String, Hypothesis>, programs: &[Program]) {
        for program in programs {
            if let Some(h) = assoc.get(&program.id) {
                self.cache.insert(program.canonical.clone(), h.clone());
            }
        }
    }

    /// Cached descriptions, keyed by canonical source.
    pub fn descriptions(&self) -> &BTreeMap<String, Hypothesis> {
        &self.cache
    }

    fn ensure_description(&mut self, program: &Program) -> Result<(), ScoreError> {
        if self.cache.contains_key(&program.canonical) {
            return Ok(());
        }
        // Up to 10 already-described programs serve as in-context examples.
        let exemplar_sources: Vec<(String, Hypothesis)> =
            self.cache.iter().take(10).map(|(k, v)| (k.clone(), v.clone())).collect();
        let exemplar_programs: Vec<Program> = exemplar_sources
            .iter()
            .filter_map(|(src, _)| Program::parse_new(src, crate::dsl::Origin::Seed, vec![]).ok())
            .collect();
        let exemplars: Vec<(&Program, &Hypothesis)> =
            exemplar_programs.iter().zip(exemplar_sources.iter().map(|(_, h)| h)).collect();
        let hyp = describe_program(
            program,
            &exemplars,
            self.gateway.as_mut(),
            self.provider.as_mut(),
            &self.templates,
            &self.task_id,
        )
        .map_err(ScoreError::Gateway)?;
        self.cache.insert(program.canonical.clone(), hyp);
        Ok(())
    }
}

impl ScoringFunction for NlScorer {
    fn id(&self) -> &str {
        "nl"
    }

    fn on_island_start(
        &mut self,
        island: usize,
        task: &Task,
        programs: &[&Program],
    ) -> Result<(), ScoreError> {
        self.task_id = task.id.clone();
        self.current_island = island;
        for program in programs {
            self.ensure_description(program)?;
        }
        let db: Vec<(&Program, &Hypothesis)> =
            programs.iter().map(|p| (*p, &self.cache[&p.canonical])).collect();
        let goal = goal_hypothesis(
            task,
            &db,
            self.ranker.as_mut(),
            self.gateway.as_mut(),
            self.provider.as_mut(),
            &self.templates,
            island,
            &self.budget,
        )?;
        self.goals.insert(island, goal);
        Ok(())
    }

    fn score(&mut self, _demos: &[crate::grid::GridPair], program: &Program) -> Result<f64, ScoreError> {
        self.ensure_description(program)?;
        let goal = self
            .goals
            .get(&self.current_island)
            .expect("score called before on_island_start")
            .clone();
        nl_score(&goal, &self.cache[&program.canonical])
    }
}
