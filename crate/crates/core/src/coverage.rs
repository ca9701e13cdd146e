//! Trace replay and persistent coverage state.
//!
//! Replay simulates exactly what an instrumented program would do: a
//! function-local candidate set `L` starts empty, each visited vertex
//! records `L & R[v]` into the persistent covered set, each taken edge
//! strips the diverged-from paths out of `L`, and each vertex adds the
//! paths that start there. The covered set only ever grows; a path's bit is
//! set iff its vertex sequence occurred contiguously in some replayed run.
//!
//! Coverage persists in a counts file that stores, per function, only the
//! checksum-bound bitset and run count — the paths themselves are
//! recomputed from the graph. Updates go through load, merge, and an
//! atomic write-then-rename; concurrent writers must merge distinct files
//! rather than overwrite.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::bitset::Bitset;
use crate::cfg::ControlFlowGraph;
use crate::enumerate::PrimePathSet;
use crate::instrument::{InstrumentationPlan, InstrumentationTable, StepOp};

const COUNTS_MAGIC: &str = "ppcov-counts 1";

/// Persistent per-function coverage: the covered-path bitset plus the
/// identity fields that bind it to one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageState {
    pub function: String,
    pub checksum: u64,
    pub path_count: usize,
    /// Set when enumeration hit the path limit; such a function carries no
    /// paths and cannot be replayed.
    pub aborted: bool,
    pub covered: Bitset,
    pub runs: u64,
}

/// One run of the instrumented function: the vertex sequence it visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub function: String,
    pub vertices: Vec<u32>,
}

/// A fresh all-zero state for `g`, aborted when the enumeration was.
pub fn new_state(g: &ControlFlowGraph, paths: &PrimePathSet) -> CoverageState {
    let count = if paths.limit_exceeded {
        0
    } else {
        paths.paths.len()
    };
    CoverageState {
        function: g.name().to_string(),
        checksum: g.canonical_checksum(),
        path_count: count,
        aborted: paths.limit_exceeded,
        covered: Bitset::new(count),
        runs: 0,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("cfg checksum mismatch")]
    ChecksumMismatch,
    #[error("trace function `{trace}` does not match graph `{graph}`")]
    FunctionMismatch { trace: String, graph: String },
    #[error("function was aborted at the path limit; nothing to replay")]
    Aborted,
    #[error("path count mismatch between state ({state}) and tables ({tables})")]
    PathCountMismatch { state: usize, tables: usize },
    #[error("trace starts at {found}, expected entry {entry}")]
    WrongEntry { found: u32, entry: u32 },
    #[error("trace visits unknown vertex {vertex}")]
    UnknownVertex { vertex: u32 },
    #[error("trace transition {src} -> {dst} is not an edge")]
    InvalidTransition { src: u32, dst: u32 },
}

fn check_trace(
    state: &CoverageState,
    g: &ControlFlowGraph,
    trace: &Trace,
    table_count: usize,
) -> Result<(), ReplayError> {
    if state.aborted {
        return Err(ReplayError::Aborted);
    }
    if state.checksum != g.canonical_checksum() {
        return Err(ReplayError::ChecksumMismatch);
    }
    if trace.function != g.name() {
        return Err(ReplayError::FunctionMismatch {
            trace: trace.function.clone(),
            graph: g.name().to_string(),
        });
    }
    if state.path_count != table_count {
        return Err(ReplayError::PathCountMismatch {
            state: state.path_count,
            tables: table_count,
        });
    }
    if let Some(&first) = trace.vertices.first() {
        if first != g.entry() {
            return Err(ReplayError::WrongEntry {
                found: first,
                entry: g.entry(),
            });
        }
    }
    for &v in &trace.vertices {
        if !g.contains_vertex(v) {
            return Err(ReplayError::UnknownVertex { vertex: v });
        }
    }
    for pair in trace.vertices.windows(2) {
        if !g.contains_edge(pair[0], pair[1]) {
            return Err(ReplayError::InvalidTransition {
                src: pair[0],
                dst: pair[1],
            });
        }
    }
    Ok(())
}

/// Replays one run against the full-width tables. An empty trace leaves the
/// state untouched.
pub fn replay_run(
    state: &mut CoverageState,
    table: &InstrumentationTable,
    g: &ControlFlowGraph,
    trace: &Trace,
) -> Result<(), ReplayError> {
    check_trace(state, g, trace, table.path_count())?;
    if trace.vertices.is_empty() {
        return Ok(());
    }
    let mut local = Bitset::new(state.path_count);
    let visit = |state: &mut CoverageState, local: &mut Bitset, v: u32| {
        // Record, then initialize; the discard for the incoming edge has
        // already run. Single-vertex paths complete on the visit itself.
        state.covered.or_assign(&local.and(table.record(v)));
        if let Some(unit) = table.immediate_record(v) {
            state.covered.or_assign(unit);
        }
        local.or_assign(table.init(v));
    };
    visit(state, &mut local, trace.vertices[0]);
    for pair in trace.vertices.windows(2) {
        local.and_not_assign(table.discard_edge(pair[0], pair[1]));
        visit(state, &mut local, pair[1]);
    }
    state.runs += 1;
    Ok(())
}

/// Replays one run by executing the elided, binned plan steps — the same
/// instructions an instrumented binary would run. Equivalent to
/// [`replay_run`] bit for bit.
pub fn replay_run_plan(
    state: &mut CoverageState,
    plan: &InstrumentationPlan,
    g: &ControlFlowGraph,
    trace: &Trace,
) -> Result<(), ReplayError> {
    check_trace(state, g, trace, plan.path_count)?;
    if trace.vertices.is_empty() {
        return Ok(());
    }
    let w = plan.word_size.bits();
    let mut local = Bitset::new(state.path_count);
    let visit = |state: &mut CoverageState, local: &mut Bitset, v: u32| {
        if let Some(bins) = plan.immediate_record.get(&v) {
            for &(j, mask) in bins {
                state.covered.or_bin(j, w, mask);
            }
        }
        for step in plan.vertex_steps.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            for &(j, mask) in &step.bins {
                match step.op {
                    StepOp::Record => {
                        let live = local.bin(j, w) & mask;
                        state.covered.or_bin(j, w, live);
                    }
                    StepOp::Discard => local.and_not_bin(j, w, mask),
                    StepOp::Initialize => local.or_bin(j, w, mask),
                }
            }
        }
    };
    visit(state, &mut local, trace.vertices[0]);
    for pair in trace.vertices.windows(2) {
        let steps = plan.edge_steps.get(&(pair[0], pair[1]));
        for step in steps.map(Vec::as_slice).unwrap_or(&[]) {
            for &(j, mask) in &step.bins {
                debug_assert_eq!(step.op, StepOp::Discard);
                local.and_not_bin(j, w, mask);
            }
        }
        visit(state, &mut local, pair[1]);
    }
    state.runs += 1;
    Ok(())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("function name mismatch: `{a}` vs `{b}`")]
    FunctionName { a: String, b: String },
    #[error("cfg checksum mismatch")]
    Checksum,
    #[error("path count mismatch: {a} vs {b}")]
    PathCount { a: usize, b: usize },
    #[error("aborted flag mismatch")]
    AbortedFlag,
}

/// Union of two states for the same function; run counts add up.
pub fn merge(a: &CoverageState, b: &CoverageState) -> Result<CoverageState, MergeError> {
    if a.function != b.function {
        return Err(MergeError::FunctionName {
            a: a.function.clone(),
            b: b.function.clone(),
        });
    }
    if a.checksum != b.checksum {
        return Err(MergeError::Checksum);
    }
    if a.path_count != b.path_count {
        return Err(MergeError::PathCount {
            a: a.path_count,
            b: b.path_count,
        });
    }
    if a.aborted != b.aborted {
        return Err(MergeError::AbortedFlag);
    }
    let mut merged = a.clone();
    merged.covered.or_assign(&b.covered);
    merged.runs += b.runs;
    Ok(merged)
}

/// Coverage summary of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Summary {
    Counts { covered: usize, total: usize },
    Aborted,
}

impl Summary {
    pub fn ratio(&self) -> Option<f64> {
        match *self {
            Summary::Counts { covered, total } => {
                Some(if total == 0 {
                    1.0
                } else {
                    covered as f64 / total as f64
                })
            }
            Summary::Aborted => None,
        }
    }
}

pub fn coverage_summary(state: &CoverageState) -> Summary {
    if state.aborted {
        Summary::Aborted
    } else {
        Summary::Counts {
            covered: state.covered.count_ones(),
            total: state.path_count,
        }
    }
}

#[derive(Debug, Error)]
pub enum CountsError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: bad magic, expected `{COUNTS_MAGIC}`")]
    BadMagic { line: usize },
    #[error("line {line}: malformed function header")]
    BadHeader { line: usize },
    #[error("line {line}: malformed counter word")]
    BadWord { line: usize },
    #[error("truncated record for function `{function}`")]
    Truncated { function: String },
    #[error("duplicate record for function `{function}`")]
    DuplicateFunction { function: String },
    #[error("line {line}: bits set beyond the path count")]
    StrayBits { line: usize },
    #[error("line {line}: aborted record must carry zero paths")]
    AbortedWithPaths { line: usize },
}

/// Serializes states into the counts text format: a magic line, then per
/// function a header and `ceil(count/64)` words of 16 hex digits,
/// least-significant word first (bit 0 of word 0 is path index 1).
pub fn render_counts(states: &[CoverageState]) -> String {
    let mut out = String::new();
    out.push_str(COUNTS_MAGIC);
    out.push('\n');
    for state in states {
        out.push_str(&format!(
            "function {} {:016x} {} {} {}\n",
            state.function,
            state.checksum,
            state.path_count,
            u8::from(state.aborted),
            state.runs,
        ));
        for word in state.covered.words() {
            out.push_str(&format!("{word:016x}\n"));
        }
    }
    out
}

/// Parses the counts text format, rejecting malformed or inconsistent
/// records.
pub fn parse_counts(input: &str) -> Result<Vec<CoverageState>, CountsError> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line == COUNTS_MAGIC => {}
        Some((i, _)) => return Err(CountsError::BadMagic { line: i + 1 }),
        None => return Err(CountsError::BadMagic { line: 1 }),
    }
    let mut states: Vec<CoverageState> = Vec::new();
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    while let Some((i, line)) = lines.next() {
        let header_line = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "function" {
            return Err(CountsError::BadHeader { line: header_line });
        }
        let function = fields[1].to_string();
        let checksum = u64::from_str_radix(fields[2], 16)
            .map_err(|_| CountsError::BadHeader { line: header_line })?;
        let path_count: usize = fields[3]
            .parse()
            .map_err(|_| CountsError::BadHeader { line: header_line })?;
        let aborted = match fields[4] {
            "0" => false,
            "1" => true,
            _ => return Err(CountsError::BadHeader { line: header_line }),
        };
        let runs: u64 = fields[5]
            .parse()
            .map_err(|_| CountsError::BadHeader { line: header_line })?;
        if aborted && path_count != 0 {
            return Err(CountsError::AbortedWithPaths { line: header_line });
        }
        if seen.insert(function.clone(), ()).is_some() {
            return Err(CountsError::DuplicateFunction { function });
        }
        let mut words = Vec::with_capacity(path_count.div_ceil(64));
        for _ in 0..path_count.div_ceil(64) {
            let (j, word_line) = lines.next().ok_or_else(|| CountsError::Truncated {
                function: function.clone(),
            })?;
            if word_line.len() != 16 {
                return Err(CountsError::BadWord { line: j + 1 });
            }
            let word = u64::from_str_radix(word_line, 16)
                .map_err(|_| CountsError::BadWord { line: j + 1 })?;
            words.push(word);
        }
        let covered = Bitset::from_words(path_count, words)
            .map_err(|_| CountsError::StrayBits { line: header_line })?;
        states.push(CoverageState {
            function,
            checksum,
            path_count,
            aborted,
            covered,
            runs,
        });
    }
    Ok(states)
}

/// Writes the counts file atomically: the rendered text goes to a temporary
/// file in the destination directory which then replaces the target.
pub fn save_counts(states: &[CoverageState], path: &Path) -> Result<(), CountsError> {
    for window in states.windows(2) {
        if window[0].function == window[1].function {
            return Err(CountsError::DuplicateFunction {
                function: window[0].function.clone(),
            });
        }
    }
    let text = render_counts(states);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| CountsError::Io(e.error))?;
    Ok(())
}

pub fn load_counts(path: &Path) -> Result<Vec<CoverageState>, CountsError> {
    parse_counts(&fs::read_to_string(path)?)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceParseError {
    #[error("line {line}: missing `:` after the function name")]
    MissingSeparator { line: usize },
    #[error("line {line}: empty function name")]
    EmptyFunction { line: usize },
    #[error("line {line}: invalid vertex id `{token}`")]
    BadVertex { line: usize, token: String },
}

/// Parses a trace file: one run per line as `<function>: v1 v2 ...`, blank
/// lines and `#` comments ignored. Returns each run with its 1-based line
/// number for diagnostics.
pub fn parse_trace_file(input: &str) -> Result<Vec<(usize, Trace)>, TraceParseError> {
    let mut traces = Vec::new();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let (function, rest) = text
            .split_once(':')
            .ok_or(TraceParseError::MissingSeparator { line })?;
        let function = function.trim();
        if function.is_empty() {
            return Err(TraceParseError::EmptyFunction { line });
        }
        let mut vertices = Vec::new();
        for token in rest.split_whitespace() {
            let v: u32 = token.parse().map_err(|_| TraceParseError::BadVertex {
                line,
                token: token.to_string(),
            })?;
            vertices.push(v);
        }
        traces.push((
            line,
            Trace {
                function: function.to_string(),
                vertices,
            },
        ));
    }
    Ok(traces)
}
