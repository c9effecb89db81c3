//! Run reports: one record per generation step plus a summary record,
//! serialized as line-delimited JSON. Field order and container choices are
//! deterministic so identical runs produce byte-identical reports.

use crate::dsl::ExecError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    FoundSolution,
    SolutionNotFound,
}

/// Result of submitting a train-solving candidate against the test pairs.
/// `SkippedDuplicate` marks a candidate identical to an already-failed
/// submission; it consumes no attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitOutcome {
    Solved,
    Failed,
    AttemptsExhausted,
    SkippedDuplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub source: String,
    /// Canonical text, present when the source parsed.
    pub canonical: Option<String>,
    pub score: Option<f64>,
    /// Parse or static-validation failure, or the first per-demo execution
    /// error for programs that ran.
    pub error: Option<ExecError>,
    pub train_solved: bool,
    pub submission: Option<SubmitOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub island: usize,
    pub iteration: usize,
    pub step: usize,
    pub parent_ids: Vec<String>,
    pub parent_scores: Vec<f64>,
    /// Times the identical prompt was re-issued because no program could be
    /// extracted.
    pub reprompts: u32,
    /// Error feedback included in this step's prompt (from the previous
    /// step's invalid candidates).
    pub feedback: Option<String>,
    pub candidates: Vec<CandidateRecord>,
    pub calls_used_after: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task_id: String,
    pub scorer_id: String,
    pub outcome: Outcome,
    /// Generation calls consumed when the solution was found.
    pub iterations_to_solution: Option<u32>,
    pub calls_used: u32,
    pub candidates_evaluated: u32,
    pub attempts_used: u32,
    /// Canonical source of the solving program.
    pub solution: Option<String>,
    /// Set when the run ended early on a gateway failure.
    pub aborted: Option<String>,
    /// Effective configuration echo for provenance.
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub summary: Summary,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ReportLine {
    Step(StepRecord),
    Summary(Summary),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("report has no summary record")]
    MissingSummary,
}

impl RunReport {
    /// Line-delimited JSON: step records in order, then the summary.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(&ReportLine::Step(step.clone())).unwrap());
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&ReportLine::Summary(self.summary.clone())).unwrap());
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<RunReport, ReportError> {
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ReportLine =
                serde_json::from_str(line).map_err(|e| ReportError::Parse(i + 1, e.to_string()))?;
            match parsed {
                ReportLine::Step(s) => steps.push(s),
                ReportLine::Summary(s) => summary = Some(s),
            }
        }
        Ok(RunReport { summary: summary.ok_or(ReportError::MissingSummary)?, steps })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ReportError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<RunReport, ReportError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            summary: Summary {
                task_id: "t1".into(),
                scorer_id: "hamming".into(),
                outcome: Outcome::FoundSolution,
                iterations_to_solution: Some(3),
                calls_used: 3,
                candidates_evaluated: 15,
                attempts_used: 1,
                solution: Some("mirror_h".into()),
                aborted: None,
                config: BTreeMap::from([("seed".to_string(), "42".to_string())]),
            },
            steps: vec![StepRecord {
                island: 0,
                iteration: 0,
                step: 0,
                parent_ids: vec!["a".into(), "b".into()],
                parent_scores: vec![0.5, 0.25],
                reprompts: 0,
                feedback: None,
                candidates: vec![CandidateRecord {
                    source: "mirror_h".into(),
                    canonical: Some("mirror_h".into()),
                    score: Some(0.0),
                    error: None,
                    train_solved: true,
                    submission: Some(SubmitOutcome::Solved),
                }],
                calls_used_after: 1,
            }],
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let report = sample();
        let text = report.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        let back = RunReport::from_jsonl(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn serialization_is_stable() {
        assert_eq!(sample().to_jsonl(), sample().to_jsonl());
    }

    #[test]
    fn missing_summary_detected() {
        let report = sample();
        let text = report.to_jsonl();
        let steps_only: String =
            text.lines().filter(|l| l.contains("\"step\"")).collect::<Vec<_>>().join("\n");
        assert!(matches!(RunReport::from_jsonl(&steps_only), Err(ReportError::MissingSummary)));
    }
}
