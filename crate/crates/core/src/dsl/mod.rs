//! The grid-transformation DSL: grammar, parser, pretty-printer, primitive
//! library and a sandboxed interpreter.
//!
//! Programs are linear pipelines, e.g. `rot90 |> replace(3,4)`. The grammar:
//!
//! ```text
//! program := stage ("|>" stage)*
//! stage   := IDENT ("(" INT ("," INT)* ")")?
//! INT     := "-"? [0-9]+
//! ```
//!
//! Interpreter errors are deterministic strings: the search loop quotes them
//! back into generation prompts, so they must be stable across runs.

mod interp;
mod parser;

pub use interp::{execute, run_source, Budget};
pub use parser::{parse, SyntaxError};

use serde::{Deserialize, Serialize};
use std::fmt;

/// One step of a pipeline: a primitive name plus literal integer arguments.
///
/// `offset` records where the stage appeared in its source; it is carried for
/// error reporting only and takes no part in equality or hashing, so pipelines
/// parsed from differently-spaced sources compare equal.
#[derive(Debug, Clone)]
pub struct Stage {
    pub name: String,
    pub args: Vec<i64>,
    /// Byte offset of the stage in the source it was parsed from.
    pub offset: usize,
}

impl PartialEq for Stage {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.args == other.args
    }
}

impl Eq for Stage {}

impl std::hash::Hash for Stage {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.args.hash(state);
    }
}

/// A parsed program: a non-empty list of stages applied left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pipeline {
    pub stages: Vec<Stage>,
}

impl Pipeline {
    /// Canonical text: single spaces around `|>`, no space before `(`,
    /// comma-separated arguments. Reparsing yields an equal pipeline.
    pub fn print(&self) -> String {
        let mut out = String::new();
        for (i, stage) in self.stages.iter().enumerate() {
            if i > 0 {
                out.push_str(" |> ");
            }
            out.push_str(&stage.name);
            if !stage.args.is_empty() {
                out.push('(');
                for (j, a) in stage.args.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    out.push_str(&a.to_string());
                }
                out.push(')');
            }
        }
        out
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}

/// Classification of interpreter failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Unparseable source, or a stage naming no registered primitive.
    Syntax,
    /// A stage with the wrong number of arguments.
    Arity,
    /// A semantic failure (out-of-bounds crop, bad color argument, ...).
    Runtime,
    /// Sandbox bound exceeded (grid size, stage count, cell-op budget).
    Resource,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Syntax => "syntax",
            ErrorKind::Arity => "arity",
            ErrorKind::Runtime => "runtime",
            ErrorKind::Resource => "resource",
        };
        write!(f, "{s}")
    }
}

/// Failure report from the parser or interpreter. Never escapes the sandbox
/// as a panic; `Display` output is the exact text forwarded to the generator
/// by the feedback loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecError {
    pub kind: ErrorKind,
    pub message: String,
    /// Byte offset into the program source.
    pub offset: usize,
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error at offset {}: {}", self.kind, self.offset, self.message)
    }
}

impl std::error::Error for ExecError {}

impl ExecError {
    /// True for static errors that make a program unusable (it never joins a
    /// program database); runtime/resource failures are still valid programs
    /// that happen to fail on some inputs.
    pub fn is_static(&self) -> bool {
        matches!(self.kind, ErrorKind::Syntax | ErrorKind::Arity)
    }
}

/// Result of running a program in the sandbox: a valid grid, or an error.
pub type ExecOutcome = Result<crate::grid::Grid, ExecError>;

/// How a program entered the database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seed,
    Generated,
    Mutated,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Origin::Seed => "seed",
            Origin::Generated => "generated",
            Origin::Mutated => "mutated",
        };
        write!(f, "{s}")
    }
}

/// DSL source plus its parsed pipeline and provenance metadata: the unit of
/// evolution.
#[derive(Debug, Clone)]
pub struct Program {
    pub id: String,
    /// Source as received (may differ from canonical in whitespace).
    pub source: String,
    pub ast: Pipeline,
    /// Canonical text (`ast.print()`), the deduplication key.
    pub canonical: String,
    pub parent_ids: Vec<String>,
    pub origin: Origin,
}

impl Program {
    /// Parse source and derive the id from the canonical text.
    pub fn parse_new(source: &str, origin: Origin, parent_ids: Vec<String>) -> Result<Self, SyntaxError> {
        let ast = parse(source)?;
        let canonical = ast.print();
        let id = format!("p{:016x}", fnv1a64(canonical.as_bytes()));
        Ok(Program { id, source: source.to_string(), ast, canonical, parent_ids, origin })
    }

    /// Parse source under a caller-chosen id (used for seed programs named
    /// after their files).
    pub fn parse_with_id(id: &str, source: &str, origin: Origin) -> Result<Self, SyntaxError> {
        let ast = parse(source)?;
        let canonical = ast.print();
        Ok(Program {
            id: id.to_string(),
            source: source.to_string(),
            ast,
            canonical,
            parent_ids: Vec::new(),
            origin,
        })
    }
}

/// FNV-1a, used for stable content-derived identifiers.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Ranges primitive arguments are drawn from when synthesizing programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgKind {
    /// A cell color, 0..=9.
    Color,
    /// A 0-based row/column index, 0..=4.
    Index,
    /// A window extent, 1..=5.
    Span,
    /// A padding amount, 0..=2.
    Pad,
    /// A signed shift, -3..=3.
    Offset,
    /// A scale/repeat factor, 1..=3.
    Factor,
}

impl ArgKind {
    pub fn range(self) -> std::ops::RangeInclusive<i64> {
        match self {
            ArgKind::Color => 0..=9,
            ArgKind::Index => 0..=4,
            ArgKind::Span => 1..=5,
            ArgKind::Pad => 0..=2,
            ArgKind::Offset => -3..=3,
            ArgKind::Factor => 1..=3,
        }
    }
}

/// A primitive's registry entry. The doc line is quoted verbatim in
/// generation prompts.
#[derive(Debug, Clone, Copy)]
pub struct Primitive {
    pub name: &'static str,
    pub args: &'static [ArgKind],
    pub doc: &'static str,
}

impl Primitive {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Registry line, e.g. `mirror_h/0 — reflect left-right`.
    pub fn doc_line(&self) -> String {
        format!("{}/{} — {}", self.name, self.arity(), self.doc)
    }
}

use ArgKind::{Color, Factor, Index, Offset, Pad, Span};

/// The primitive library, sorted by name. The listing is stable: prompts
/// embed it verbatim.
pub const PRIMITIVES: &[Primitive] = &[
    Primitive { name: "border", args: &[Color], doc: "paint the outermost ring of cells with color c" },
    Primitive {
        name: "crop",
        args: &[Index, Index, Span, Span],
        doc: "keep the h-by-w window with top-left corner at row r, column c (0-indexed)",
    },
    Primitive {
        name: "downscale",
        args: &[Factor],
        doc: "shrink by factor k, each k-by-k block collapsing to its most frequent color; dimensions must divide by k",
    },
    Primitive { name: "fill", args: &[Color], doc: "set every cell to color c" },
    Primitive { name: "identity", args: &[], doc: "return the grid unchanged" },
    Primitive { name: "mirror_h", args: &[], doc: "reflect left-right" },
    Primitive { name: "mirror_v", args: &[], doc: "reflect top-bottom" },
    Primitive {
        name: "most_color_fill",
        args: &[],
        doc: "set every cell to the grid's most frequent color",
    },
    Primitive {
        name: "pad",
        args: &[Pad, Pad, Pad, Pad, Color],
        doc: "add t rows on top, b below, l columns left, r right, filled with color c",
    },
    Primitive { name: "palette_swap", args: &[Color, Color], doc: "exchange colors a and b everywhere" },
    Primitive { name: "replace", args: &[Color, Color], doc: "recolor every cell of color a to color b" },
    Primitive { name: "rot180", args: &[], doc: "rotate a half turn" },
    Primitive { name: "rot270", args: &[], doc: "rotate a quarter turn counterclockwise" },
    Primitive { name: "rot90", args: &[], doc: "rotate a quarter turn clockwise" },
    Primitive { name: "tile", args: &[Factor, Factor], doc: "repeat the grid in an m-by-n arrangement" },
    Primitive {
        name: "translate",
        args: &[Offset, Offset, Color],
        doc: "shift dr rows down and dc columns right; vacated cells become color c, cells shifted out are dropped",
    },
    Primitive { name: "transpose", args: &[], doc: "swap rows and columns" },
    Primitive {
        name: "upscale",
        args: &[Factor],
        doc: "enlarge by factor k, replicating each cell into a k-by-k block",
    },
];

/// Stable, sorted primitive listing.
pub fn registry() -> &'static [Primitive] {
    PRIMITIVES
}

/// Look up a primitive by name.
pub fn lookup(name: &str) -> Option<&'static Primitive> {
    PRIMITIVES.binary_search_by(|p| p.name.cmp(name)).ok().map(|i| &PRIMITIVES[i])
}

/// The registry rendered one line per primitive, as embedded in prompts.
pub fn registry_docs() -> String {
    let mut out = String::new();
    for p in PRIMITIVES {
        out.push_str(&p.doc_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_unique() {
        for w in PRIMITIVES.windows(2) {
            assert!(w[0].name < w[1].name, "{} !< {}", w[0].name, w[1].name);
        }
    }

    #[test]
    fn registry_content() {
        assert_eq!(lookup("replace").unwrap().arity(), 2);
        assert!(registry_docs().contains("mirror_h/0 — reflect left-right"));
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn program_id_is_canonical_hash() {
        let a = Program::parse_new(" rot90|>identity ", Origin::Generated, vec![]).unwrap();
        let b = Program::parse_new("rot90 |> identity", Origin::Generated, vec![]).unwrap();
        assert_eq!(a.canonical, "rot90 |> identity");
        assert_eq!(a.id, b.id);
    }
}
