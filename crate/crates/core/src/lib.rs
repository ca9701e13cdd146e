//! Prime path coverage toolkit.
//!
//! Given a control flow graph, this crate enumerates its prime paths (maximal
//! simple paths and simple cycles), derives the record/discard/initialize
//! bitset tables that an instrumented program would execute, replays execution
//! traces against those tables into a persistent per-function coverage bitset,
//! and renders human- and machine-readable coverage reports.
//!
//! The pipeline is split into one module per stage:
//!
//! * [`cfg`] — parse and validate the CFG text format, SCC diagnostics,
//!   canonical checksum.
//! * [`suffix_tree`] — generalized suffix tree over vertex IDs; prunes
//!   subsumed candidate paths and reconstructs the ordered prime path set.
//! * [`enumerate`] — candidate extension, threshold-guarded enumeration, and
//!   brute-force oracles for testing.
//! * [`instrument`] — path indexing, R/D/I sets, bitmask tables, bin
//!   partitioning, and the elided per-block instrumentation plan.
//! * [`coverage`] — trace replay, persistent coverage state, counts files.
//! * [`report`] — execution directions and coverage report formats.

pub mod bitset;
pub mod cfg;
pub mod coverage;
pub mod enumerate;
pub mod instrument;
pub mod report;
pub mod suffix_tree;

pub use bitset::Bitset;
pub use cfg::ControlFlowGraph;
pub use coverage::{CoverageState, Trace};
pub use enumerate::{PrimePathSet, DEFAULT_PATH_LIMIT};
pub use instrument::{InstrumentationPlan, InstrumentationTable, PathIndex, WordSize};
pub use suffix_tree::SuffixTree;
