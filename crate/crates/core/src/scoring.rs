//! Scoring-function interface, score-to-probability sampling, and the
//! Hamming baseline scorer.
//!
//! A scoring function maps (task demos, program) to a non-negative real;
//! lower means conceptually closer to the solution. Parent programs are
//! sampled with probability proportional to `exp(-score)`.

use crate::dsl::{execute, Budget, Program};
use crate::gateway::GatewayError;
use crate::grid::{hamming_distance, GridPair, Task};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("gateway: {0}")]
    Gateway(#[from] GatewayError),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PoolError {
    #[error("pool has {0} programs, need at least 2")]
    InsufficientPool(usize),
}

/// A program together with its score under some scoring function.
#[derive(Debug, Clone)]
pub struct ScoredProgram {
    pub program: Program,
    pub score: f64,
    pub scorer_id: String,
}

impl ScoredProgram {
    pub fn new(program: Program, score: f64, scorer_id: impl Into<String>) -> Self {
        assert!(score.is_finite() && score >= 0.0, "scores must be finite and non-negative");
        ScoredProgram { program, score, scorer_id: scorer_id.into() }
    }
}

/// Estimates how close a program is to the latent transformation. Lower is
/// closer; scores are non-negative and finite.
///
/// Implementations may keep per-island state (the natural-language scorer
/// regenerates a goal hypothesis per island); the engine calls
/// `on_island_start` before any `score` call for that island.
pub trait ScoringFunction: Send {
    /// Identifier recorded in reports and selectable from the CLI.
    fn id(&self) -> &str;

    /// Hook invoked when an island is (re)initialized.
    fn on_island_start(
        &mut self,
        _island: usize,
        _task: &Task,
        _programs: &[&Program],
    ) -> Result<(), ScoreError> {
        Ok(())
    }

    fn score(&mut self, demos: &[GridPair], program: &Program) -> Result<f64, ScoreError>;
}

/// Mean normalized Hamming distance between realized and desired outputs.
/// A pair whose execution fails contributes the maximum penalty 1.0, so
/// broken programs stay in the database but rank last.
pub struct HammingScorer {
    budget: Budget,
}

impl HammingScorer {
    pub fn new() -> Self {
        HammingScorer { budget: Budget::default() }
    }
}

impl Default for HammingScorer {
    fn default() -> Self {
        Self::new()
    }
}

impl ScoringFunction for HammingScorer {
    fn id(&self) -> &str {
        "hamming"
    }

    fn score(&mut self, demos: &[GridPair], program: &Program) -> Result<f64, ScoreError> {
        assert!(!demos.is_empty(), "demos must be non-empty");
        let total: f64 = demos
            .iter()
            .map(|(input, output)| match execute(&program.ast, input, &self.budget) {
                Ok(realized) => hamming_distance(&realized, output),
                Err(_) => 1.0,
            })
            .sum();
        Ok(total / demos.len() as f64)
    }
}

/// Probability of choosing each program: `exp(-s_i) / sum_j exp(-s_j)`,
/// computed with a max-shift so large scores cannot underflow the whole pool.
pub fn selection_probabilities(pool: &[ScoredProgram]) -> Vec<f64> {
    probabilities_from_scores(&pool.iter().map(|p| p.score).collect::<Vec<_>>())
}

/// Same computation on bare scores.
pub fn probabilities_from_scores(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "pool must be non-empty");
    assert!(scores.iter().all(|s| s.is_finite()), "scores must be finite");
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = scores.iter().map(|s| (-(s - min)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Draw two distinct programs: the first per the selection probabilities, the
/// second from the remainder with renormalized probabilities. Returned
/// worst-score first, best-score second, which is the order they are
/// presented to the generator.
pub fn sample_two<'a, R: Rng>(
    pool: &'a [ScoredProgram],
    rng: &mut R,
) -> Result<(&'a ScoredProgram, &'a ScoredProgram), PoolError> {
    if pool.len() < 2 {
        return Err(PoolError::InsufficientPool(pool.len()));
    }
    let probs = selection_probabilities(pool);
    let first = weighted_index(&probs, rng.random::<f64>());
    let mut rest_probs = Vec::with_capacity(pool.len() - 1);
    let mut rest_idx = Vec::with_capacity(pool.len() - 1);
    for (i, &p) in probs.iter().enumerate() {
        if i != first {
            rest_probs.push(p);
            rest_idx.push(i);
        }
    }
    let total: f64 = rest_probs.iter().sum();
    for p in &mut rest_probs {
        *p /= total;
    }
    let second = rest_idx[weighted_index(&rest_probs, rng.random::<f64>())];

    let (a, b) = (&pool[first], &pool[second]);
    // Worst (higher score) first; ties keep draw order.
    if b.score > a.score {
        Ok((b, a))
    } else {
        Ok((a, b))
    }
}

/// Inverse-CDF lookup; the final index absorbs floating-point remainder.
fn weighted_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
