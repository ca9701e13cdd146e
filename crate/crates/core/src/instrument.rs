//! Instrumentation tables: the record/discard/initialize sets over the
//! ordered prime paths, their bitset encoding, and the elided per-block
//! plan an instrumented program would execute.
//!
//! Prime paths are numbered 1..=count in lexicographic order; bit `n`
//! (least significant first) of every mask corresponds to path `n`. The
//! runtime keeps a function-local candidate set `L` and the persistent
//! covered set `P`, and each vertex visit applies, in order:
//!
//! 1. record `P |= L & R[v]` — paths ending at `v`,
//! 2. discard `L &= ~D[v]` — paths the incoming transition diverged from,
//! 3. initialize `L |= I[v]` — paths starting at `v`.
//!
//! Discarding is per-edge ground truth: a path is discarded on edge
//! `(p, v)` when it contains `p` away from its end but never `p`
//! immediately followed by `v`. The vertex-level union is applied instead
//! only when that is provably exact (all incoming edges discard the same
//! set), which keeps one discard instruction per block in the common case.
//! Steps whose masks are all zero are elided, and masks are partitioned
//! into `w`-bit bins so only affected bins cost instructions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::bitset::{render_bin_value, Bitset};
use crate::cfg::ControlFlowGraph;
use crate::enumerate::PrimePathSet;

/// The lexicographically ordered prime paths with their 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathIndex {
    paths: Vec<Vec<u32>>,
}

impl PathIndex {
    pub fn count(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[Vec<u32>] {
        &self.paths
    }

    /// The path with 1-based index `n`. Panics when out of range.
    pub fn path(&self, n: usize) -> &[u32] {
        &self.paths[n - 1]
    }

    /// 1-based index of `path`, if it is a prime path of this set.
    pub fn index_of(&self, path: &[u32]) -> Option<usize> {
        self.paths
            .binary_search_by(|p| p.as_slice().cmp(path))
            .ok()
            .map(|i| i + 1)
    }

    /// Indexed iteration in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[u32])> {
        self.paths.iter().enumerate().map(|(i, p)| (i + 1, p.as_slice()))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("enumeration aborted at the path limit; no path index exists")]
pub struct AbortedEnumerationError;

/// Assigns 1-based indices to the prime paths in lexicographic order.
pub fn index_paths(set: &PrimePathSet) -> Result<PathIndex, AbortedEnumerationError> {
    if set.limit_exceeded {
        return Err(AbortedEnumerationError);
    }
    debug_assert!(set.paths.windows(2).all(|w| w[0] < w[1]));
    Ok(PathIndex {
        paths: set.paths.clone(),
    })
}

/// Per-vertex sets of path indices.
pub type VertexSets = BTreeMap<u32, BTreeSet<usize>>;

/// `R(v)`: the indices of the paths that end, and are recorded, at `v`.
pub fn record_sets(idx: &PathIndex) -> VertexSets {
    let mut sets = VertexSets::new();
    for (n, path) in idx.iter() {
        sets.entry(*path.last().unwrap()).or_default().insert(n);
    }
    sets
}

/// `I(v)`: the indices of the paths that start, and are initialized, at `v`.
pub fn init_sets(idx: &PathIndex) -> VertexSets {
    let mut sets = VertexSets::new();
    for (n, path) in idx.iter() {
        sets.entry(path[0]).or_default().insert(n);
    }
    sets
}

/// The discard sets, per edge (ground truth) and per vertex (union over
/// incoming edges), with the per-vertex hoisting decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscardSets {
    pub per_edge: BTreeMap<(u32, u32), BTreeSet<usize>>,
    pub per_vertex: VertexSets,
    /// True when the vertex-level union is exact for every incoming edge,
    /// so the discard may run at the vertex instead of on each edge.
    pub hoistable: BTreeMap<u32, bool>,
}

/// `D(p → v)`: path `n` is discarded on the edge when `p` occurs in it with
/// a successor (a non-terminal occurrence) and no occurrence of `p` is
/// immediately followed by `v`. Cycle endpoints count as two occurrences.
pub fn discard_sets(idx: &PathIndex, g: &ControlFlowGraph) -> DiscardSets {
    let mut per_edge = BTreeMap::new();
    for &(p, v) in g.edges() {
        let mut set = BTreeSet::new();
        for (n, path) in idx.iter() {
            let non_terminal = path[..path.len() - 1].contains(&p);
            let followed_by_v = path.windows(2).any(|w| w[0] == p && w[1] == v);
            if non_terminal && !followed_by_v {
                set.insert(n);
            }
        }
        per_edge.insert((p, v), set);
    }
    let mut per_vertex: VertexSets = g.vertices().iter().map(|&v| (v, BTreeSet::new())).collect();
    for (&(_, v), set) in &per_edge {
        per_vertex.get_mut(&v).unwrap().extend(set.iter().copied());
    }
    let hoistable = g
        .vertices()
        .iter()
        .map(|&v| {
            let mut incoming = g.predecessors(v).iter().map(|&p| &per_edge[&(p, v)]);
            let exact = match incoming.next() {
                None => true,
                Some(first) => incoming.all(|set| set == first),
            };
            (v, exact)
        })
        .collect();
    DiscardSets {
        per_edge,
        per_vertex,
        hoistable,
    }
}

/// Width of one instrumentation bin; the gcov-type analog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordSize(u32);

impl WordSize {
    pub const DEFAULT: WordSize = WordSize(64);

    pub fn new(bits: u32) -> Result<Self, UnsupportedWordSizeError> {
        match bits {
            8 | 16 | 32 | 64 => Ok(WordSize(bits)),
            _ => Err(UnsupportedWordSizeError { bits }),
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Bin count for a mask of `len` meaningful bits.
    pub fn bins_for(self, len: usize) -> usize {
        len.div_ceil(self.0 as usize)
    }
}

impl fmt::Display for WordSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unsupported word size {bits} (expected 8, 16, 32 or 64)")]
pub struct UnsupportedWordSizeError {
    pub bits: u32,
}

/// The bitset encoding of the R/D/I sets. Discard masks are stored
/// uninverted; applying them as and-with-complement is a plan concern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentationTable {
    word_size: WordSize,
    path_count: usize,
    record: BTreeMap<u32, Bitset>,
    init: BTreeMap<u32, Bitset>,
    discard_edge: BTreeMap<(u32, u32), Bitset>,
    discard_vertex: BTreeMap<u32, Bitset>,
    hoistable: BTreeMap<u32, bool>,
    /// Masks of single-vertex paths, recorded unconditionally on a visit.
    /// Non-empty only in the degenerate single-vertex graph, where the
    /// record-then-initialize order could never complete the path.
    immediate_record: BTreeMap<u32, Bitset>,
}

impl InstrumentationTable {
    /// Convenience constructor chaining the set computations.
    pub fn build(g: &ControlFlowGraph, idx: &PathIndex, w: WordSize) -> Self {
        let record = record_sets(idx);
        let init = init_sets(idx);
        let discard = discard_sets(idx, g);
        build_bitmasks(&record, &init, &discard, idx, w)
    }

    pub fn word_size(&self) -> WordSize {
        self.word_size
    }

    pub fn path_count(&self) -> usize {
        self.path_count
    }

    pub fn record(&self, v: u32) -> &Bitset {
        &self.record[&v]
    }

    pub fn init(&self, v: u32) -> &Bitset {
        &self.init[&v]
    }

    pub fn discard_edge(&self, src: u32, dst: u32) -> &Bitset {
        &self.discard_edge[&(src, dst)]
    }

    pub fn discard_vertex(&self, v: u32) -> &Bitset {
        &self.discard_vertex[&v]
    }

    pub fn hoistable(&self, v: u32) -> bool {
        self.hoistable[&v]
    }

    pub fn immediate_record(&self, v: u32) -> Option<&Bitset> {
        self.immediate_record.get(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.record.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.discard_edge.keys().copied()
    }
}

/// Encodes the set tables as bitmasks. Bit `n` (1-based from the least
/// significant) corresponds to path index `n`; textual renderings print the
/// most significant bit first.
pub fn build_bitmasks(
    record: &VertexSets,
    init: &VertexSets,
    discard: &DiscardSets,
    idx: &PathIndex,
    w: WordSize,
) -> InstrumentationTable {
    let count = idx.count();
    let to_mask = |set: Option<&BTreeSet<usize>>| {
        let mut mask = Bitset::new(count);
        if let Some(set) = set {
            for &n in set {
                mask.set(n);
            }
        }
        mask
    };
    // discard.per_vertex is dense over the graph's vertices; record/init
    // only mention vertices that end or start a path.
    let vertices: Vec<u32> = discard.per_vertex.keys().copied().collect();
    let record = vertices
        .iter()
        .map(|&v| (v, to_mask(record.get(&v))))
        .collect();
    let init = vertices
        .iter()
        .map(|&v| (v, to_mask(init.get(&v))))
        .collect();
    let discard_vertex = vertices
        .iter()
        .map(|&v| (v, to_mask(discard.per_vertex.get(&v))))
        .collect();
    let discard_edge = discard
        .per_edge
        .iter()
        .map(|(&e, set)| (e, to_mask(Some(set))))
        .collect();
    let mut immediate_record: BTreeMap<u32, Bitset> = BTreeMap::new();
    for (n, path) in idx.iter() {
        if path.len() == 1 {
            immediate_record
                .entry(path[0])
                .or_insert_with(|| Bitset::new(count))
                .set(n);
        }
    }
    InstrumentationTable {
        word_size: w,
        path_count: count,
        record,
        init,
        discard_edge,
        discard_vertex,
        hoistable: discard.hoistable.clone(),
        immediate_record,
    }
}

/// Splits a mask into `(bin index, bin value)` pairs, omitting zero bins.
/// Bin `j` covers path indices `j*w + 1 ..= (j+1)*w`.
pub fn partition_bins(mask: &Bitset, w_bits: u32) -> Vec<(usize, u64)> {
    let bins = mask.len().div_ceil(w_bits as usize);
    (0..bins)
        .filter_map(|j| {
            let value = mask.bin(j, w_bits);
            (value != 0).then_some((j, value))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOp {
    Record,
    Discard,
    Initialize,
}

/// One emitted operation, carrying only its affected bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub op: StepOp,
    pub bins: Vec<(usize, u64)>,
}

/// The elided instrumentation plan: per-vertex steps in execution order
/// (record, discard, initialize) with all-zero steps dropped, and per-edge
/// discard steps for the vertices where hoisting would over-discard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentationPlan {
    pub word_size: WordSize,
    pub path_count: usize,
    pub vertex_steps: BTreeMap<u32, Vec<PlanStep>>,
    pub edge_steps: BTreeMap<(u32, u32), Vec<PlanStep>>,
    pub immediate_record: BTreeMap<u32, Vec<(usize, u64)>>,
}

pub fn build_plan(g: &ControlFlowGraph, table: &InstrumentationTable) -> InstrumentationPlan {
    let w = table.word_size().bits();
    let mut vertex_steps = BTreeMap::new();
    for &v in g.vertices() {
        let mut steps = Vec::new();
        let record = partition_bins(table.record(v), w);
        if !record.is_empty() {
            steps.push(PlanStep {
                op: StepOp::Record,
                bins: record,
            });
        }
        if table.hoistable(v) {
            let discard = partition_bins(table.discard_vertex(v), w);
            if !discard.is_empty() {
                steps.push(PlanStep {
                    op: StepOp::Discard,
                    bins: discard,
                });
            }
        }
        let init = partition_bins(table.init(v), w);
        if !init.is_empty() {
            steps.push(PlanStep {
                op: StepOp::Initialize,
                bins: init,
            });
        }
        if !steps.is_empty() {
            vertex_steps.insert(v, steps);
        }
    }
    let mut edge_steps = BTreeMap::new();
    for &(src, dst) in g.edges() {
        if table.hoistable(dst) {
            continue;
        }
        let bins = partition_bins(table.discard_edge(src, dst), w);
        if !bins.is_empty() {
            edge_steps.insert(
                (src, dst),
                vec![PlanStep {
                    op: StepOp::Discard,
                    bins,
                }],
            );
        }
    }
    let immediate_record = table
        .immediate_record
        .iter()
        .map(|(&v, mask)| (v, partition_bins(mask, w)))
        .collect();
    InstrumentationPlan {
        word_size: table.word_size(),
        path_count: table.path_count(),
        vertex_steps,
        edge_steps,
        immediate_record,
    }
}

fn render_step(step: &PlanStep, path_count: usize, w: WordSize, out: &mut String) {
    let single_bin = w.bins_for(path_count) <= 1;
    for &(j, value) in &step.bins {
        let (lhs, mask) = if single_bin {
            // One bin: render at the mask's meaningful width, unsubscripted.
            (String::new(), render_bin_value(value, path_count as u32))
        } else {
            (format!("[{j}]"), render_bin_value(value, w.bits()))
        };
        let line = match step.op {
            StepOp::Record => format!("  P{lhs} |= L{lhs} & {mask}"),
            StepOp::Discard => format!("  L{lhs} &= ~{mask}"),
            StepOp::Initialize => format!("  L{lhs} |= {mask}"),
        };
        out.push_str(&line);
        out.push('\n');
    }
}

/// Deterministic pseudo-source listing of the plan: per block, the masked
/// operations in execution order, as if the function had been instrumented
/// by hand. Blocks and edges with no steps produce no lines.
pub fn render_pseudo_source(plan: &InstrumentationPlan, g: &ControlFlowGraph) -> String {
    let mut out = String::new();
    for &v in g.vertices() {
        if let Some(steps) = plan.vertex_steps.get(&v) {
            out.push_str(&format!("block {v}:\n"));
            for step in steps {
                render_step(step, plan.path_count, plan.word_size, &mut out);
            }
        }
    }
    for (&(src, dst), steps) in &plan.edge_steps {
        out.push_str(&format!("edge {src} -> {dst}:\n"));
        for step in steps {
            render_step(step, plan.path_count, plan.word_size, &mut out);
        }
    }
    out
}

fn render_set(set: Option<&BTreeSet<usize>>) -> String {
    match set {
        None => "-".to_string(),
        Some(s) if s.is_empty() => "-".to_string(),
        Some(s) => s
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// Deterministic dump of the path index, R/D/I sets, and bitmasks, one
/// vertex per row; per-edge discard rows appear for vertices where the
/// discard cannot be hoisted.
pub fn render_tables(g: &ControlFlowGraph, idx: &PathIndex, table: &InstrumentationTable) -> String {
    let record = record_sets(idx);
    let init = init_sets(idx);
    let discard = discard_sets(idx, g);
    let mut out = String::new();
    out.push_str(&format!("function {}\n", g.name()));
    out.push_str(&format!("checksum {:016x}\n", g.canonical_checksum()));
    out.push_str(&format!("paths {}\n", idx.count()));
    for (n, path) in idx.iter() {
        let rendered: Vec<String> = path.iter().map(u32::to_string).collect();
        out.push_str(&format!("  {n}: {}\n", rendered.join(" ")));
    }
    out.push_str("sets\n");
    for &v in g.vertices() {
        let hoist = if table.hoistable(v) { "" } else { " per-edge" };
        out.push_str(&format!(
            "  vertex {v}: R={} D={} I={}{hoist}\n",
            render_set(record.get(&v)),
            render_set(discard.per_vertex.get(&v)),
            render_set(init.get(&v)),
        ));
        if !table.hoistable(v) {
            for &p in g.predecessors(v) {
                out.push_str(&format!(
                    "  edge {p} -> {v}: D={}\n",
                    render_set(discard.per_edge.get(&(p, v))),
                ));
            }
        }
    }
    out.push_str(&format!("masks word-size {}\n", table.word_size()));
    for &v in g.vertices() {
        out.push_str(&format!(
            "  vertex {v}: R={} D={} I={}\n",
            table.record(v).render_binary(),
            table.discard_vertex(v).render_binary(),
            table.init(v).render_binary(),
        ));
        if !table.hoistable(v) {
            for &p in g.predecessors(v) {
                out.push_str(&format!(
                    "  edge {p} -> {v}: D={}\n",
                    table.discard_edge(p, v).render_binary(),
                ));
            }
        }
    }
    out
}
