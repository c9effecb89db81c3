//! The search engine: program database, island lifecycle, the
//! generation-evaluation loop with syntax-error feedback, call budgets, and
//! the 3-attempt test submission rule.
//!
//! Islands run sequentially in id order with per-island randomness streams
//! derived as `seed ^ island_id`, so results are independent of scheduling.
//! All islands of one island-iteration seed from the same snapshot of the
//! global database; discoveries merge back in island order afterwards.

mod report;

pub use report::{
    CandidateRecord, Outcome, ReportError, RunReport, StepRecord, SubmitOutcome, Summary,
};

use crate::dsl::{execute, Budget, ExecError, Origin, Program};
use crate::gateway::{
    format_grids, render, Gateway, GenerationRequest, PromptSet, Purpose, RequestMeta,
};
use crate::grid::{grids_equal, Grid, GridPair, Task};
use crate::scoring::{sample_two, ScoreError, ScoredProgram, ScoringFunction};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("need at least 2 distinct seed programs, got {0}")]
    InsufficientSeeds(usize),
}

/// Deduplicated set of scored programs keyed by canonical source text.
/// Insert-only: merging never removes knowledge.
#[derive(Debug, Clone, Default)]
pub struct ProgramDatabase {
    entries: Vec<ScoredProgram>,
    index: HashMap<String, usize>,
    /// Completed island-iterations merged into this database.
    pub generation: u64,
}

impl ProgramDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert unless an entry with the same canonical source exists. The
    /// first entry wins, keeping provenance stable.
    pub fn insert(&mut self, sp: ScoredProgram) -> bool {
        if self.index.contains_key(&sp.program.canonical) {
            return false;
        }
        self.index.insert(sp.program.canonical.clone(), self.entries.len());
        self.entries.push(sp);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.index.contains_key(canonical)
    }

    pub fn get(&self, canonical: &str) -> Option<&ScoredProgram> {
        self.index.get(canonical).map(|&i| &self.entries[i])
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &ScoredProgram> {
        self.entries.iter()
    }

    pub fn programs(&self) -> Vec<&Program> {
        self.entries.iter().map(|sp| &sp.program).collect()
    }

    /// Persist as a directory of DSL text files plus a metadata index.
    pub fn save_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut index = Vec::new();
        for sp in &self.entries {
            let file = format!("{}.dsl", sp.program.id);
            std::fs::write(dir.join(&file), format!("{}\n", sp.program.canonical))?;
            index.push(DbIndexEntry {
                id: sp.program.id.clone(),
                file,
                origin: sp.program.origin,
                parents: sp.program.parent_ids.clone(),
                score: sp.score,
                scorer_id: sp.scorer_id.clone(),
            });
        }
        let meta = serde_json::to_string_pretty(&DbIndex { generation: self.generation, programs: index })
            .expect("index serializes");
        std::fs::write(dir.join("index.json"), meta)
    }

    /// Load a database directory. Without `index.json` the `.dsl` files load
    /// as seed programs named after their file stems.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut db = ProgramDatabase::new();
        let index_path = dir.join("index.json");
        if index_path.exists() {
            let meta: DbIndex = serde_json::from_str(&std::fs::read_to_string(&index_path)?)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            db.generation = meta.generation;
            for entry in meta.programs {
                let source = std::fs::read_to_string(dir.join(&entry.file))?;
                let mut program = Program::parse_with_id(&entry.id, source.trim(), entry.origin)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                program.parent_ids = entry.parents;
                db.insert(ScoredProgram::new(program, entry.score, entry.scorer_id));
            }
        } else {
            let mut paths: Vec<_> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "dsl"))
                .collect();
            paths.sort();
            for path in paths {
                let id = path.file_stem().unwrap().to_string_lossy().into_owned();
                let source = std::fs::read_to_string(&path)?;
                let program = Program::parse_with_id(&id, source.trim(), Origin::Seed)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                db.insert(ScoredProgram::new(program, 0.0, "seed"));
            }
        }
        Ok(db)
    }
}

#[derive(Serialize, Deserialize)]
struct DbIndex {
    generation: u64,
    programs: Vec<DbIndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct DbIndexEntry {
    id: String,
    file: String,
    origin: Origin,
    parents: Vec<String>,
    score: f64,
    scorer_id: String,
}

/// Build the initial database from seed programs: deduplicated by canonical
/// source; fewer than 2 distinct programs cannot seed the islands.
pub fn seed_database(programs: Vec<Program>) -> Result<ProgramDatabase, EngineError> {
    let mut db = ProgramDatabase::new();
    for program in programs {
        db.insert(ScoredProgram::new(program, 0.0, "seed"));
    }
    if db.len() < 2 {
        return Err(EngineError::InsufficientSeeds(db.len()));
    }
    Ok(db)
}

/// Search budgets. Total generation calls are bounded by
/// `islands * steps * island_iterations`; candidates by that times
/// `candidates_per_call`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunBudget {
    pub islands: usize,
    pub steps: usize,
    pub island_iterations: usize,
    pub candidates_per_call: usize,
    pub max_attempts: u32,
}

impl Default for RunBudget {
    fn default() -> Self {
        RunBudget { islands: 5, steps: 10, island_iterations: 2, candidates_per_call: 5, max_attempts: 3 }
    }
}

impl RunBudget {
    pub fn max_calls(&self) -> u32 {
        (self.islands * self.steps * self.island_iterations) as u32
    }

    pub fn max_candidates(&self) -> u32 {
        self.max_calls() * self.candidates_per_call as u32
    }
}

/// Evaluate a train-solving candidate against the test pairs. `Solved` only
/// if every test output matches exactly; a miss either consumes one of the
/// `max_attempts` attempts or exhausts them.
pub fn submit(
    candidate: &Program,
    task: &Task,
    attempts_so_far: u32,
    max_attempts: u32,
    budget: &Budget,
) -> SubmitOutcome {
    let solved = task.test.iter().all(|pair| {
        execute(&candidate.ast, &pair.input, budget).map(|g| grids_equal(&g, &pair.output)).unwrap_or(false)
    });
    if solved {
        SubmitOutcome::Solved
    } else if attempts_so_far + 1 >= max_attempts {
        SubmitOutcome::AttemptsExhausted
    } else {
        SubmitOutcome::Failed
    }
}

/// Everything a solve run needs besides the task: scorer, generator, budgets
/// and prompt templates.
pub struct Engine<'a> {
    pub scorer: &'a mut dyn ScoringFunction,
    pub gateway: &'a mut dyn Gateway,
    pub budget: RunBudget,
    pub exec_budget: Budget,
    pub templates: PromptSet,
    pub temperature: f64,
    /// Echoed into every report for provenance.
    pub config_echo: BTreeMap<String, String>,
}

/// Outcome of a run: the report plus the final merged database.
pub struct SolveResult {
    pub report: RunReport,
    pub database: ProgramDatabase,
}

struct RunState {
    calls: u32,
    candidates: u32,
    attempts: u32,
    failed_submissions: HashSet<String>,
    steps: Vec<StepRecord>,
}

impl<'a> Engine<'a> {
    pub fn new(scorer: &'a mut dyn ScoringFunction, gateway: &'a mut dyn Gateway) -> Self {
        Engine {
            scorer,
            gateway,
            budget: RunBudget::default(),
            exec_budget: Budget::default(),
            templates: PromptSet::bundled(),
            temperature: 1.0,
            config_echo: BTreeMap::new(),
        }
    }

    /// Run the island search on one task. Gateway failures abort with a
    /// partial report (`summary.aborted` set) rather than an error; only a
    /// bad seed database is unrecoverable.
    pub fn solve(&mut self, task: &Task, seeds: &ProgramDatabase, seed: u64) -> Result<SolveResult, EngineError> {
        if seeds.len() < 2 {
            return Err(EngineError::InsufficientSeeds(seeds.len()));
        }
        let mut global = seeds.clone();
        let demos = task.demos();
        let max_calls = self.budget.max_calls();
        let mut rngs: Vec<rand_chacha::ChaCha8Rng> = (0..self.budget.islands)
            .map(|i| {
                use rand::SeedableRng;
                rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ i as u64)
            })
            .collect();

        let mut state = RunState {
            calls: 0,
            candidates: 0,
            attempts: 0,
            failed_submissions: HashSet::new(),
            steps: Vec::new(),
        };

        for iteration in 0..self.budget.island_iterations {
            // All islands of this iteration seed from the same snapshot.
            let snapshot: Vec<Program> = global.iter().map(|sp| sp.program.clone()).collect();
            let mut iteration_pools: Vec<Vec<ScoredProgram>> = Vec::new();

            for island in 0..self.budget.islands {
                if state.calls >= max_calls {
                    break;
                }
                let refs: Vec<&Program> = snapshot.iter().collect();
                if let Err(e) = self.scorer.on_island_start(island, task, &refs) {
                    return Ok(self.finalize_aborted(task, state, global, iteration_pools, e.to_string()));
                }
                let mut pool = Vec::with_capacity(snapshot.len());
                for program in &snapshot {
                    match self.scorer.score(&demos, program) {
                        Ok(score) => {
                            pool.push(ScoredProgram::new(program.clone(), score, self.scorer.id()))
                        }
                        Err(e) => {
                            return Ok(self.finalize_aborted(
                                task,
                                state,
                                global,
                                iteration_pools,
                                e.to_string(),
                            ))
                        }
                    }
                }
                // Top-2 island seeding, ties broken by canonical source.
                pool.sort_by(|a, b| {
                    a.score
                        .partial_cmp(&b.score)
                        .unwrap()
                        .then_with(|| a.program.canonical.cmp(&b.program.canonical))
                });
                pool.truncate(2);
                let mut pool_index: HashSet<String> =
                    pool.iter().map(|sp| sp.program.canonical.clone()).collect();

                let mut pending_feedback: Vec<String> = Vec::new();
                for step in 0..self.budget.steps {
                    if state.calls >= max_calls {
                        break;
                    }
                    match self.run_step(
                        task,
                        &demos,
                        island,
                        iteration,
                        step,
                        &mut pool,
                        &mut pool_index,
                        &mut pending_feedback,
                        &mut rngs[island],
                        &mut state,
                    ) {
                        Ok(None) => {}
                        Ok(Some(solution)) => {
                            iteration_pools.push(pool);
                            return Ok(self.finalize(
                                task,
                                state,
                                global,
                                iteration_pools,
                                Outcome::FoundSolution,
                                Some(solution),
                                None,
                            ));
                        }
                        Err(StepAbort::Gateway(message)) => {
                            iteration_pools.push(pool);
                            return Ok(self.finalize_aborted(task, state, global, iteration_pools, message));
                        }
                        Err(StepAbort::AttemptsExhausted) => {
                            iteration_pools.push(pool);
                            return Ok(self.finalize(
                                task,
                                state,
                                global,
                                iteration_pools,
                                Outcome::SolutionNotFound,
                                None,
                                None,
                            ));
                        }
                    }
                }
                iteration_pools.push(pool);
            }

            // Merge discoveries back into the global database, island order.
            for pool in iteration_pools {
                for sp in pool {
                    global.insert(sp);
                }
            }
            global.generation += 1;
        }

        Ok(self.finalize(task, state, global, Vec::new(), Outcome::SolutionNotFound, None, None))
    }

    #[allow(clippy::too_many_arguments)]
    fn run_step(
        &mut self,
        task: &Task,
        demos: &[GridPair],
        island: usize,
        iteration: usize,
        step: usize,
        pool: &mut Vec<ScoredProgram>,
        pool_index: &mut HashSet<String>,
        pending_feedback: &mut Vec<String>,
        rng: &mut rand_chacha::ChaCha8Rng,
        state: &mut RunState,
    ) -> Result<Option<String>, StepAbort> {
        let max_calls = self.budget.max_calls();
        let (worst, best) = sample_two(pool, rng).expect("island pool holds at least 2 programs");
        let (worst, best) = (worst.clone(), best.clone());

        let feedback_text = if pending_feedback.is_empty() {
            String::new()
        } else {
            format!(
                "\nYour previous response contained invalid programs:\n{}\nFix these problems in the new programs.\n",
                pending_feedback.join("\n")
            )
        };
        let prompt = self.build_prompt(demos, &worst, &best, &feedback_text);
        let mut meta = RequestMeta::new(task.id.clone(), Purpose::ProgramGeneration);
        meta.island = Some(island);
        meta.step = Some(step);
        meta.parent_sources = vec![worst.program.canonical.clone(), best.program.canonical.clone()];
        let mut req = GenerationRequest::new(prompt, meta);
        req.temperature = self.temperature;
        req.candidates = self.budget.candidates_per_call;

        // Re-issue the same prompt until at least one program is extracted,
        // within the remaining call budget.
        let mut reprompts = 0u32;
        let response = loop {
            let resp = self.gateway.generate(&req).map_err(|e| StepAbort::Gateway(e.to_string()))?;
            state.calls += 1;
            if !resp.extracted.is_empty() || state.calls >= max_calls {
                break resp;
            }
            reprompts += 1;
        };

        let feedback_for_record =
            if feedback_text.is_empty() { None } else { Some(pending_feedback.join("\n")) };
        pending_feedback.clear();

        let mut records = Vec::with_capacity(response.extracted.len());
        let mut solution: Option<String> = None;
        for source in &response.extracted {
            state.candidates += 1;
            let record = self.evaluate_candidate(
                task,
                demos,
                source,
                &worst,
                &best,
                pool,
                pool_index,
                pending_feedback,
                state,
            )?;
            let solved = record.submission == Some(SubmitOutcome::Solved);
            let exhausted = record.submission == Some(SubmitOutcome::AttemptsExhausted);
            if solved {
                solution = record.canonical.clone();
            }
            records.push(record);
            if solved || exhausted {
                state.steps.push(StepRecord {
                    island,
                    iteration,
                    step,
                    parent_ids: vec![worst.program.id.clone(), best.program.id.clone()],
                    parent_scores: vec![worst.score, best.score],
                    reprompts,
                    feedback: feedback_for_record,
                    candidates: records,
                    calls_used_after: state.calls,
                });
                return if let Some(s) = solution { Ok(Some(s)) } else { Err(StepAbort::AttemptsExhausted) };
            }
        }

        state.steps.push(StepRecord {
            island,
            iteration,
            step,
            parent_ids: vec![worst.program.id.clone(), best.program.id.clone()],
            parent_scores: vec![worst.score, best.score],
            reprompts,
            feedback: feedback_for_record,
            candidates: records,
            calls_used_after: state.calls,
        });
        Ok(None)
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate_candidate(
        &mut self,
        task: &Task,
        demos: &[GridPair],
        source: &str,
        worst: &ScoredProgram,
        best: &ScoredProgram,
        pool: &mut Vec<ScoredProgram>,
        pool_index: &mut HashSet<String>,
        pending_feedback: &mut Vec<String>,
        state: &mut RunState,
    ) -> Result<CandidateRecord, StepAbort> {
        let parents = vec![worst.program.id.clone(), best.program.id.clone()];
        let program = match Program::parse_new(source, Origin::Generated, parents) {
            Err(e) => {
                pending_feedback.push(e.to_string());
                return Ok(CandidateRecord {
                    source: source.to_string(),
                    canonical: None,
                    score: None,
                    error: Some(ExecError {
                        kind: crate::dsl::ErrorKind::Syntax,
                        message: e.message,
                        offset: e.offset,
                    }),
                    train_solved: false,
                    submission: None,
                });
            }
            Ok(p) => p,
        };

        let outcomes: Vec<Result<Grid, ExecError>> =
            demos.iter().map(|(input, _)| execute(&program.ast, input, &self.exec_budget)).collect();

        // Static errors (unknown primitive, wrong arity) mean the program is
        // not usable: it never joins the island, and the error feeds back.
        if let Some(e) = outcomes.iter().find_map(|r| r.as_ref().err().filter(|e| e.is_static())) {
            pending_feedback.push(e.to_string());
            return Ok(CandidateRecord {
                source: source.to_string(),
                canonical: Some(program.canonical.clone()),
                score: None,
                error: Some(e.clone()),
                train_solved: false,
                submission: None,
            });
        }

        let score = self
            .scorer
            .score(demos, &program)
            .map_err(|e: ScoreError| StepAbort::Gateway(e.to_string()))?;
        let first_error = outcomes.iter().find_map(|r| r.as_ref().err().cloned());
        let train_solved = outcomes
            .iter()
            .zip(demos)
            .all(|(r, (_, want))| r.as_ref().map(|g| grids_equal(g, want)).unwrap_or(false));

        if pool_index.insert(program.canonical.clone()) {
            pool.push(ScoredProgram::new(program.clone(), score, self.scorer.id()));
        }

        let mut submission = None;
        if train_solved {
            if state.failed_submissions.contains(&program.canonical) {
                submission = Some(SubmitOutcome::SkippedDuplicate);
            } else {
                let outcome =
                    submit(&program, task, state.attempts, self.budget.max_attempts, &self.exec_budget);
                state.attempts += 1;
                if outcome != SubmitOutcome::Solved {
                    state.failed_submissions.insert(program.canonical.clone());
                }
                submission = Some(outcome);
            }
        }

        Ok(CandidateRecord {
            source: source.to_string(),
            canonical: Some(program.canonical),
            score: Some(score),
            error: first_error,
            train_solved,
            submission,
        })
    }

    fn build_prompt(
        &self,
        demos: &[GridPair],
        worst: &ScoredProgram,
        best: &ScoredProgram,
        feedback: &str,
    ) -> String {
        let inputs: Vec<Grid> = demos.iter().map(|(i, _)| i.clone()).collect();
        let outputs: Vec<Grid> = demos.iter().map(|(_, o)| o.clone()).collect();
        let docs = crate::dsl::registry_docs();
        let render_outputs = |p: &Program| -> String {
            let mut out = String::new();
            for (i, (input, _)) in demos.iter().enumerate() {
                match execute(&p.ast, input, &self.exec_budget) {
                    Ok(g) => out.push_str(&format!("Output {}:\n{}\n", i + 1, g.to_digit_lines())),
                    Err(e) => out.push_str(&format!("Output {}: error: {e}\n", i + 1)),
                }
            }
            out
        };
        render(
            &self.templates.program_gen,
            &[
                ("dsl_docs", docs.as_str()),
                ("demo_inputs", format_grids("Input", &inputs).as_str()),
                ("demo_outputs", format_grids("Output", &outputs).as_str()),
                ("parent1", worst.program.canonical.as_str()),
                ("score1", format!("{:.4}", worst.score).as_str()),
                ("parent1_outputs", render_outputs(&worst.program).as_str()),
                ("parent2", best.program.canonical.as_str()),
                ("score2", format!("{:.4}", best.score).as_str()),
                ("parent2_outputs", render_outputs(&best.program).as_str()),
                ("feedback", feedback),
                ("candidates", self.budget.candidates_per_call.to_string().as_str()),
            ],
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finalize(
        &self,
        task: &Task,
        state: RunState,
        mut global: ProgramDatabase,
        pending_pools: Vec<Vec<ScoredProgram>>,
        outcome: Outcome,
        solution: Option<String>,
        aborted: Option<String>,
    ) -> SolveResult {
        for pool in pending_pools {
            for sp in pool {
                global.insert(sp);
            }
        }
        let report = RunReport {
            summary: Summary {
                task_id: task.id.clone(),
                scorer_id: self.scorer.id().to_string(),
                outcome,
                iterations_to_solution: if outcome == Outcome::FoundSolution {
                    Some(state.calls)
                } else {
                    None
                },
                calls_used: state.calls,
                candidates_evaluated: state.candidates,
                attempts_used: state.attempts,
                solution,
                aborted,
                config: self.config_echo.clone(),
            },
            steps: state.steps,
        };
        SolveResult { report, database: global }
    }

    fn finalize_aborted(
        &self,
        task: &Task,
        state: RunState,
        global: ProgramDatabase,
        pending_pools: Vec<Vec<ScoredProgram>>,
        message: String,
    ) -> SolveResult {
        self.finalize(task, state, global, pending_pools, Outcome::SolutionNotFound, None, Some(message))
    }
}

enum StepAbort {
    Gateway(String),
    AttemptsExhausted,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ScriptedGateway;
    use crate::scoring::HammingScorer;

    fn mirror_task() -> Task {
        crate::grid::parse_task(
            "mirror",
            r#"{"train":[{"input":[[1,2],[3,4]],"output":[[2,1],[4,3]]},
                         {"input":[[5,6,7]],"output":[[7,6,5]]}],
                "test":[{"input":[[1,9]],"output":[[9,1]]}]}"#,
        )
        .unwrap()
    }

    fn seeds() -> ProgramDatabase {
        seed_database(vec![
            Program::parse_with_id("s1", "identity", Origin::Seed).unwrap(),
            Program::parse_with_id("s2", "rot180", Origin::Seed).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn seed_database_dedups_and_requires_two() {
        let db = seed_database(vec![
            Program::parse_with_id("a", "rot90", Origin::Seed).unwrap(),
            Program::parse_with_id("b", " rot90 ", Origin::Seed).unwrap(),
            Program::parse_with_id("c", "mirror_h", Origin::Seed).unwrap(),
        ])
        .unwrap();
        assert_eq!(db.len(), 2);

        let err = seed_database(vec![Program::parse_with_id("a", "rot90", Origin::Seed).unwrap()]);
        assert!(matches!(err, Err(EngineError::InsufficientSeeds(1))));
    }

    #[test]
    fn immediate_hit_uses_one_call() {
        let task = mirror_task();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        let mut gateway = ScriptedGateway::single_response_with_programs(&["mirror_h"]);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        let result = engine.solve(&task, &db, 1).unwrap();
        assert_eq!(result.report.summary.outcome, Outcome::FoundSolution);
        assert_eq!(result.report.summary.calls_used, 1);
        assert_eq!(result.report.summary.iterations_to_solution, Some(1));
        assert_eq!(result.report.summary.solution.as_deref(), Some("mirror_h"));
        assert!(result.database.contains("mirror_h"));
    }

    #[test]
    fn syntax_error_feedback_reaches_next_prompt() {
        let task = mirror_task();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        // Every response carries one broken program; budget 1 island x 3 steps.
        let mut gateway = ScriptedGateway::new(vec!["```\nreplace(3\n```".to_string()]);
        let result = {
            let mut engine = Engine::new(&mut scorer, &mut gateway);
            engine.budget =
                RunBudget { islands: 1, steps: 3, island_iterations: 1, ..RunBudget::default() };
            engine.solve(&task, &db, 1).unwrap()
        };
        assert_eq!(result.report.summary.outcome, Outcome::SolutionNotFound);
        assert_eq!(result.report.summary.calls_used, 3);
        assert!(!gateway.calls[0].prompt.contains("syntax error"));
        assert!(gateway.calls[1].prompt.contains("syntax error at offset 9: expected ',' or ')'"));
        assert!(gateway.calls[2].prompt.contains("syntax error at offset 9: expected ',' or ')'"));
    }

    #[test]
    fn budget_exhausts_at_max_calls() {
        let task = mirror_task();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        let mut gateway = ScriptedGateway::new(vec!["```\nreplace(3\n```".to_string()]);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        let result = engine.solve(&task, &db, 1).unwrap();
        assert_eq!(result.report.summary.calls_used, 100);
        assert_eq!(result.report.summary.outcome, Outcome::SolutionNotFound);
    }

    #[test]
    fn empty_responses_reprompt_within_budget() {
        let task = mirror_task();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        let mut gateway = ScriptedGateway::new(vec!["no code".to_string()]);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        engine.budget = RunBudget { islands: 2, steps: 2, island_iterations: 1, ..RunBudget::default() };
        let result = engine.solve(&task, &db, 1).unwrap();
        // All 4 calls consumed by re-prompting inside the first step.
        assert_eq!(result.report.summary.calls_used, 4);
        assert_eq!(result.report.steps.len(), 1);
        assert_eq!(result.report.steps[0].reprompts, 3);
    }

    #[test]
    fn failed_submissions_count_and_dedup() {
        // wrong_solution matches train but not test; emitted repeatedly.
        let task = crate::grid::parse_task(
            "tricky",
            r#"{"train":[{"input":[[1,2]],"output":[[1,2]]}],
                "test":[{"input":[[3,4]],"output":[[9,9]]}]}"#,
        )
        .unwrap();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        // identity solves train, fails test. Emitted in every response.
        let mut gateway = ScriptedGateway::new(vec![
            "```\nidentity\n```".to_string(),
            "```\nidentity\n```\n```\ntranspose\n```".to_string(),
            "```\nrot90 |> rot270\n```".to_string(),
        ]);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        engine.budget = RunBudget { islands: 1, steps: 5, island_iterations: 1, ..RunBudget::default() };
        let result = engine.solve(&task, &db, 3).unwrap();
        // identity fails once (attempt 1), duplicates skipped;
        // "rot90 |> rot270" is a distinct canonical source that also solves
        // train, so it burns another attempt.
        assert_eq!(result.report.summary.attempts_used, 2);
        let subs: Vec<_> = result
            .report
            .steps
            .iter()
            .flat_map(|s| s.candidates.iter().filter_map(|c| c.submission))
            .collect();
        assert!(subs.contains(&SubmitOutcome::Failed));
        assert!(subs.contains(&SubmitOutcome::SkippedDuplicate));
        assert_eq!(result.report.summary.outcome, Outcome::SolutionNotFound);
    }

    #[test]
    fn attempts_exhaust_after_three_distinct_failures() {
        let task = crate::grid::parse_task(
            "tricky",
            r#"{"train":[{"input":[[1,2]],"output":[[1,2]]}],
                "test":[{"input":[[3,4]],"output":[[9,9]]}]}"#,
        )
        .unwrap();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        // Three distinct train-solving, test-failing programs.
        let mut gateway = ScriptedGateway::new(vec![
            "```\nidentity\n```".to_string(),
            "```\nrot90 |> rot270\n```".to_string(),
            "```\nrot180 |> rot180\n```".to_string(),
            "```\nmirror_h\n```".to_string(),
        ]);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        engine.budget = RunBudget { islands: 1, steps: 10, island_iterations: 1, ..RunBudget::default() };
        let result = engine.solve(&task, &db, 3).unwrap();
        assert_eq!(result.report.summary.attempts_used, 3);
        assert_eq!(result.report.summary.outcome, Outcome::SolutionNotFound);
        assert_eq!(result.report.summary.calls_used, 3);
        let last = result.report.steps.last().unwrap();
        assert_eq!(last.candidates.last().unwrap().submission, Some(SubmitOutcome::AttemptsExhausted));
    }

    #[test]
    fn determinism_identical_reports() {
        let task = mirror_task();
        let db = seeds();
        let run = || {
            let mut scorer = HammingScorer::new();
            let mut gateway = crate::gateway::MutationGateway::new(99);
            let mut engine = Engine::new(&mut scorer, &mut gateway);
            engine.budget = RunBudget { islands: 2, steps: 4, island_iterations: 2, ..RunBudget::default() };
            engine.solve(&task, &db, 7).unwrap().report.to_jsonl()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn database_merge_is_monotonic() {
        let task = mirror_task();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        let mut gateway = crate::gateway::MutationGateway::new(5);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        engine.budget = RunBudget { islands: 2, steps: 3, island_iterations: 2, ..RunBudget::default() };
        let result = engine.solve(&task, &db, 11).unwrap();
        assert!(result.database.len() >= db.len());
        // Ancestry: every parent id resolves to some program in the database
        // or a seed (ancestors always inserted before descendants).
        let ids: std::collections::HashSet<&str> =
            result.database.iter().map(|sp| sp.program.id.as_str()).collect();
        for sp in result.database.iter() {
            for parent in &sp.program.parent_ids {
                assert!(ids.contains(parent.as_str()), "dangling parent {parent}");
            }
        }
    }

    #[test]
    fn database_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let task = mirror_task();
        let db = seeds();
        let mut scorer = HammingScorer::new();
        let mut gateway = crate::gateway::MutationGateway::new(5);
        let mut engine = Engine::new(&mut scorer, &mut gateway);
        engine.budget = RunBudget { islands: 1, steps: 3, island_iterations: 1, ..RunBudget::default() };
        let result = engine.solve(&task, &db, 11).unwrap();
        result.database.save_dir(dir.path()).unwrap();
        let loaded = ProgramDatabase::load_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), result.database.len());
        for (a, b) in loaded.iter().zip(result.database.iter()) {
            assert_eq!(a.program.canonical, b.program.canonical);
            assert_eq!(a.program.origin, b.program.origin);
            assert_eq!(a.score, b.score);
        }
    }

}
