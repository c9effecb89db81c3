//! Grid and task value types, ARC JSON ingestion, exact-match evaluation and
//! the normalized Hamming metric.
//!
//! Grids are immutable row-major rasters of colors 0..9, between 1×1 and
//! 30×30. A task bundles demonstration pairs with held-out test pairs.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Maximum grid side length.
pub const MAX_SIDE: usize = 30;
/// Number of distinct cell colors (0..=9).
pub const NUM_COLORS: usize = 10;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid is empty")]
    Empty,
    #[error("grid side {0} exceeds {MAX_SIDE}")]
    TooLarge(usize),
    #[error("row {row} has length {len}, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("cell value {0} out of range 0..9")]
    BadColor(i64),
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
    #[error("validation: {0}")]
    Validation(#[from] GridError),
    #[error("task has no {0} pairs")]
    NoPairs(&'static str),
}

/// A colored raster. Cells are stored row-major; `cells[r * width + c]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    height: usize,
    width: usize,
    cells: Vec<u8>,
}

impl Grid {
    /// Build a grid from rows, validating the size and color invariants.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self, GridError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(GridError::Empty);
        }
        let height = rows.len();
        let width = rows[0].len();
        if height > MAX_SIDE {
            return Err(GridError::TooLarge(height));
        }
        if width > MAX_SIDE {
            return Err(GridError::TooLarge(width));
        }
        let mut cells = Vec::with_capacity(height * width);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(GridError::RaggedRow { row: r, len: row.len(), expected: width });
            }
            for &v in row {
                if !(0..NUM_COLORS as i64).contains(&v) {
                    return Err(GridError::BadColor(v));
                }
                cells.push(v as u8);
            }
        }
        Ok(Grid { height, width, cells })
    }

    /// Build from pre-validated dimensions and row-major cells.
    pub fn from_cells(height: usize, width: usize, cells: Vec<u8>) -> Result<Self, GridError> {
        if height == 0 || width == 0 {
            return Err(GridError::Empty);
        }
        if height > MAX_SIDE || width > MAX_SIDE {
            return Err(GridError::TooLarge(height.max(width)));
        }
        assert_eq!(cells.len(), height * width, "cell count must be height * width");
        if let Some(&bad) = cells.iter().find(|&&c| c as usize >= NUM_COLORS) {
            return Err(GridError::BadColor(bad as i64));
        }
        Ok(Grid { height, width, cells })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        debug_assert!(r < self.height && c < self.width);
        self.cells[r * self.width + c]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.cells.chunks(self.width)
    }

    /// Rows of digits, one line per row, e.g. "12\n34". Used in prompts.
    pub fn to_digit_lines(&self) -> String {
        let mut out = String::with_capacity(self.area() + self.height);
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for &c in row {
                out.push((b'0' + c) as char);
            }
        }
        out
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_digit_lines())
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.rows())
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        Grid::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// One input/output example.
pub type GridPair = (Grid, Grid);

/// A puzzle: demonstration pairs exhibiting a latent transformation, plus
/// test pairs the solver must reproduce exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    #[serde(skip)]
    pub id: String,
    pub train: Vec<Pair>,
    pub test: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub input: Grid,
    pub output: Grid,
}

impl Task {
    pub fn new(id: impl Into<String>, train: Vec<GridPair>, test: Vec<GridPair>) -> Result<Self, TaskError> {
        let task = Task {
            id: id.into(),
            train: train.into_iter().map(|(input, output)| Pair { input, output }).collect(),
            test: test.into_iter().map(|(input, output)| Pair { input, output }).collect(),
        };
        task.check_nonempty()?;
        Ok(task)
    }

    fn check_nonempty(&self) -> Result<(), TaskError> {
        if self.train.is_empty() {
            return Err(TaskError::NoPairs("train"));
        }
        if self.test.is_empty() {
            return Err(TaskError::NoPairs("test"));
        }
        Ok(())
    }

    /// Demonstration pairs as (input, output) tuples.
    pub fn demos(&self) -> Vec<GridPair> {
        self.train.iter().map(|p| (p.input.clone(), p.output.clone())).collect()
    }
}

/// Load a task from ARC-format JSON. The task id is the file stem.
pub fn load_task(path: &Path) -> Result<Task, TaskError> {
    let text = std::fs::read_to_string(path)?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_task(&id, &text)
}

/// Parse ARC-format JSON: `{"train": [{"input": [[..]], "output": [[..]]}], "test": [..]}`.
pub fn parse_task(id: &str, json: &str) -> Result<Task, TaskError> {
    // Validation errors (bad colors, oversized grids) surface as such rather
    // than as generic parse failures.
    let raw: RawTask = serde_json::from_str(json).map_err(|e| TaskError::Parse(e.to_string()))?;
    let mut task = Task { id: id.to_string(), train: Vec::new(), test: Vec::new() };
    for (src, dst) in [(&raw.train, &mut task.train), (&raw.test, &mut task.test)] {
        for p in src {
            dst.push(Pair { input: Grid::from_rows(&p.input)?, output: Grid::from_rows(&p.output)? });
        }
    }
    task.check_nonempty()?;
    Ok(task)
}

#[derive(Deserialize)]
struct RawTask {
    train: Vec<RawPair>,
    test: Vec<RawPair>,
}

#[derive(Deserialize)]
struct RawPair {
    input: Vec<Vec<i64>>,
    output: Vec<Vec<i64>>,
}

/// Serialize a task back to ARC-format JSON (row-major, id omitted).
pub fn task_to_json(task: &Task) -> String {
    serde_json::to_string(task).expect("task serialization cannot fail")
}

/// Write a task as ARC JSON.
pub fn save_task(task: &Task, path: &Path) -> Result<(), TaskError> {
    std::fs::write(path, task_to_json(task))?;
    Ok(())
}

/// True iff dimensions match and all cells match.
pub fn grids_equal(a: &Grid, b: &Grid) -> bool {
    a == b
}

/// Fraction of mismatched cells, in [0, 1].
///
/// Equal shapes: mismatches / area. Unequal shapes: cells are compared on the
/// overlapping top-left region, every cell of either grid outside the overlap
/// counts as mismatched, and the count is normalized by the larger area
/// (clamped to 1; disjoint shapes can overshoot the larger area).
pub fn hamming_distance(predicted: &Grid, truth: &Grid) -> f64 {
    let oh = predicted.height().min(truth.height());
    let ow = predicted.width().min(truth.width());
    let mut mismatched = 0usize;
    for r in 0..oh {
        for c in 0..ow {
            if predicted.get(r, c) != truth.get(r, c) {
                mismatched += 1;
            }
        }
    }
    let overlap = oh * ow;
    mismatched += (predicted.area() - overlap) + (truth.area() - overlap);
    let denom = predicted.area().max(truth.area());
    (mismatched as f64 / denom as f64).min(1.0)
}
