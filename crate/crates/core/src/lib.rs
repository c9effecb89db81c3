//! LLM-guided evolutionary search over a grid-transformation DSL.
//!
//! The engine evolves small pipeline programs that map colored input grids to
//! output grids, in the style of ARC puzzles. Candidate programs are produced
//! by a pluggable generator (a remote chat-completion service or one of two
//! deterministic offline mocks), evaluated in a sandboxed interpreter, and
//! ranked by a scoring function that estimates how close each program is to
//! the latent transformation. Search runs on independent islands that
//! periodically merge discoveries into a global program database.

pub mod cnn;
pub mod dsl;
pub mod gateway;
pub mod grid;
pub mod nl;
pub mod scoring;
pub mod search;

pub use grid::{Grid, Task};
