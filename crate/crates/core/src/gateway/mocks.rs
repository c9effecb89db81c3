//! Deterministic offline generators. The scripted mock replays canned
//! responses; the mutation mock synthesizes children from the sampled parent
//! programs with seeded AST edits. Both record the requests they served so
//! tests can inspect the prompts.

use super::{Gateway, GatewayError, GenerationRequest, GenerationResponse, Purpose};
use crate::dsl::{self, parse, ArgKind, Pipeline, Stage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Replays a fixed list of raw responses in order; once exhausted it repeats
/// the last one (an empty script yields empty responses).
pub struct ScriptedGateway {
    responses: Vec<String>,
    cursor: usize,
    /// Every request served, in order. Tests assert on prompt contents.
    pub calls: Vec<GenerationRequest>,
}

impl ScriptedGateway {
    pub fn new(responses: Vec<String>) -> Self {
        ScriptedGateway { responses, cursor: 0, calls: Vec::new() }
    }

    /// Convenience: one fenced block per program, all in one response.
    pub fn single_response_with_programs(programs: &[&str]) -> Self {
        let raw = programs.iter().map(|p| format!("```\n{p}\n```")).collect::<Vec<_>>().join("\n");
        Self::new(vec![raw])
    }
}

impl Gateway for ScriptedGateway {
    fn generate(&mut self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        self.calls.push(req.clone());
        let raw = if self.responses.is_empty() {
            String::new()
        } else {
            let idx = self.cursor.min(self.responses.len() - 1);
            self.cursor += 1;
            self.responses[idx].clone()
        };
        Ok(GenerationResponse::from_raw(raw, req.candidates))
    }
}

fn sample_arg<R: Rng>(kind: ArgKind, rng: &mut R) -> i64 {
    let range = kind.range();
    rng.random_range(*range.start()..=*range.end())
}

fn random_stage<R: Rng>(rng: &mut R) -> Stage {
    let prim = &dsl::PRIMITIVES[rng.random_range(0..dsl::PRIMITIVES.len())];
    let args = prim.args.iter().map(|&k| sample_arg(k, rng)).collect();
    Stage { name: prim.name.to_string(), args, offset: 0 }
}

fn clamp_stages(mut stages: Vec<Stage>) -> Vec<Stage> {
    stages.truncate(16);
    stages
}

/// Produce `count` child sources from two parents by seeded AST edits:
/// primitive replacement, ±1 literal perturbation, stage insertion, stage
/// deletion, and prefix/suffix crossover. Every child is syntactically
/// valid by construction.
pub fn mutate_parents<R: Rng>(parents: (&Pipeline, &Pipeline), rng: &mut R, count: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (a, b) = parents;
        let base = if rng.random_bool(0.5) { a } else { b };
        let mut stages = base.stages.clone();
        let op = rng.random_range(0..5u32);
        match op {
            // Replace one stage with a fresh random primitive.
            0 => {
                let i = rng.random_range(0..stages.len());
                stages[i] = random_stage(rng);
            }
            // Perturb one literal argument by +-1.
            1 => {
                let candidates: Vec<usize> =
                    (0..stages.len()).filter(|&i| !stages[i].args.is_empty()).collect();
                if candidates.is_empty() {
                    let i = rng.random_range(0..stages.len());
                    stages[i] = random_stage(rng);
                } else {
                    let i = candidates[rng.random_range(0..candidates.len())];
                    let j = rng.random_range(0..stages[i].args.len());
                    stages[i].args[j] += if rng.random_bool(0.5) { 1 } else { -1 };
                }
            }
            // Insert a random stage.
            2 => {
                let i = rng.random_range(0..=stages.len());
                stages.insert(i, random_stage(rng));
            }
            // Delete a stage (insert instead when only one remains).
            3 => {
                if stages.len() >= 2 {
                    let i = rng.random_range(0..stages.len());
                    stages.remove(i);
                } else {
                    let i = rng.random_range(0..=stages.len());
                    stages.insert(i, random_stage(rng));
                }
            }
            // Crossover: prefix of one parent, suffix of the other.
            _ => {
                let i = rng.random_range(0..=a.stages.len());
                let j = rng.random_range(0..=b.stages.len());
                let mut child: Vec<Stage> = a.stages[..i].to_vec();
                child.extend_from_slice(&b.stages[j..]);
                stages = if child.is_empty() { a.stages.clone() } else { child };
            }
        }
        let pipeline = Pipeline { stages: clamp_stages(stages) };
        out.push(pipeline.print());
    }
    out
}

/// Offline stand-in for the generator: mutates the parent programs carried in
/// the request metadata. Description and goal-hypothesis requests get
/// deterministic template text so the natural-language path works offline.
pub struct MutationGateway {
    rng: ChaCha8Rng,
    hypothesis_counter: u64,
    pub calls: Vec<GenerationRequest>,
}

impl MutationGateway {
    pub fn new(seed: u64) -> Self {
        MutationGateway { rng: ChaCha8Rng::seed_from_u64(seed), hypothesis_counter: 0, calls: Vec::new() }
    }

    fn describe_pipeline(source: &str) -> String {
        match parse(source) {
            Ok(p) => {
                let parts: Vec<String> = p
                    .stages
                    .iter()
                    .map(|s| {
                        let doc = dsl::lookup(&s.name).map(|p| p.doc).unwrap_or("unknown step");
                        if s.args.is_empty() {
                            doc.to_string()
                        } else {
                            let args =
                                s.args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
                            format!("{doc} [{args}]")
                        }
                    })
                    .collect();
                parts.join("; then ")
            }
            Err(_) => format!("unparseable program: {source}"),
        }
    }
}

impl Gateway for MutationGateway {
    fn generate(&mut self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        self.calls.push(req.clone());
        let raw = match req.meta.purpose {
            Purpose::ProgramGeneration => {
                let identity = Pipeline {
                    stages: vec![Stage { name: "identity".to_string(), args: vec![], offset: 0 }],
                };
                let parsed: Vec<Pipeline> = req
                    .meta
                    .parent_sources
                    .iter()
                    .filter_map(|s| parse(s).ok())
                    .collect();
                let a = parsed.first().unwrap_or(&identity);
                let b = parsed.get(1).unwrap_or(a);
                let children = mutate_parents((a, b), &mut self.rng, req.candidates);
                children.iter().map(|c| format!("```\n{c}\n```")).collect::<Vec<_>>().join("\n")
            }
            Purpose::Describe => {
                let subject = req.meta.subject.as_deref().unwrap_or("identity");
                Self::describe_pipeline(subject)
            }
            Purpose::GoalHypothesis => {
                self.hypothesis_counter += 1;
                format!(
                    "transformation hypothesis {} for task {}",
                    self.hypothesis_counter, req.meta.task_id
                )
            }
        };
        Ok(GenerationResponse::from_raw(raw, req.candidates))
    }
}
