//! Control flow graphs: text format parsing, well-formedness validation,
//! strongly connected component diagnostics, and the canonical checksum that
//! binds counts files to a specific graph.
//!
//! The text format is one directive per line with `#` comment lines:
//!
//! ```text
//! graph <name>          # first directive
//! vertex <id>
//! line <n> <source...>  # attaches a source line to the preceding vertex
//! edge <src> <dst> [true|false]
//! entry <id>
//! ```
//!
//! Vertices must be declared before edges reference them. Graphs are
//! immutable after construction; every operation here is a pure function of
//! the graph, so shared instances are safe to use concurrently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A control flow graph: vertices, directed edges, a designated entry, and
/// optional per-vertex source lines and per-edge decision labels.
///
/// Every vertex with no outgoing edges counts as an exit. Self-edges are
/// accepted; they surface as length-2 cycle prime paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlFlowGraph {
    name: String,
    vertices: Vec<u32>,
    edges: Vec<(u32, u32)>,
    entry: u32,
    lines: BTreeMap<u32, Vec<(u32, String)>>,
    edge_labels: BTreeMap<(u32, u32), bool>,
    succ: BTreeMap<u32, Vec<u32>>,
    pred: BTreeMap<u32, Vec<u32>>,
}

impl ControlFlowGraph {
    /// Builds a graph from parts, checking the structural rules the text
    /// parser would enforce (unique vertices and edges, declared endpoints).
    pub fn new(
        name: impl Into<String>,
        vertices: impl IntoIterator<Item = u32>,
        edges: impl IntoIterator<Item = (u32, u32)>,
        entry: u32,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let mut seen = BTreeSet::new();
        for v in vertices {
            if !seen.insert(v) {
                return Err(GraphError::DuplicateVertex(v));
            }
        }
        let vertices: Vec<u32> = seen.iter().copied().collect();
        let mut edge_set = BTreeSet::new();
        for (src, dst) in edges {
            if !seen.contains(&src) {
                return Err(GraphError::UnknownEdgeVertex(src));
            }
            if !seen.contains(&dst) {
                return Err(GraphError::UnknownEdgeVertex(dst));
            }
            if !edge_set.insert((src, dst)) {
                return Err(GraphError::DuplicateEdge(src, dst));
            }
        }
        if !seen.contains(&entry) {
            return Err(GraphError::UnknownEntry(entry));
        }
        let edges: Vec<(u32, u32)> = edge_set.into_iter().collect();
        let mut succ: BTreeMap<u32, Vec<u32>> = vertices.iter().map(|&v| (v, vec![])).collect();
        let mut pred: BTreeMap<u32, Vec<u32>> = vertices.iter().map(|&v| (v, vec![])).collect();
        for &(src, dst) in &edges {
            succ.get_mut(&src).unwrap().push(dst);
            pred.get_mut(&dst).unwrap().push(src);
        }
        // Edges are sorted, so successor lists come out ascending already;
        // predecessor lists need the sort.
        for list in pred.values_mut() {
            list.sort_unstable();
        }
        Ok(ControlFlowGraph {
            name,
            vertices,
            edges,
            entry,
            lines: BTreeMap::new(),
            edge_labels: BTreeMap::new(),
            succ,
            pred,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Vertex IDs in ascending order.
    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    /// Edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn entry(&self) -> u32 {
        self.entry
    }

    pub fn contains_vertex(&self, v: u32) -> bool {
        self.succ.contains_key(&v)
    }

    pub fn contains_edge(&self, src: u32, dst: u32) -> bool {
        self.edges.binary_search(&(src, dst)).is_ok()
    }

    /// Successors of `v` in ascending order.
    pub fn successors(&self, v: u32) -> &[u32] {
        self.succ.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Predecessors of `v` in ascending order.
    pub fn predecessors(&self, v: u32) -> &[u32] {
        self.pred.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Vertices with no outgoing edges, ascending.
    pub fn exits(&self) -> Vec<u32> {
        self.vertices
            .iter()
            .copied()
            .filter(|&v| self.successors(v).is_empty())
            .collect()
    }

    /// Source lines attached to `v`, in declaration order.
    pub fn lines(&self, v: u32) -> &[(u32, String)] {
        self.lines.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn set_lines(&mut self, v: u32, lines: Vec<(u32, String)>) {
        self.lines.insert(v, lines);
    }

    /// Decision label of the edge, when annotated.
    pub fn edge_label(&self, src: u32, dst: u32) -> Option<bool> {
        self.edge_labels.get(&(src, dst)).copied()
    }

    pub fn set_edge_label(&mut self, src: u32, dst: u32, label: bool) {
        self.edge_labels.insert((src, dst), label);
    }

    /// Checks the well-formedness conditions; an empty list means the graph
    /// is valid. Each violation names the offending vertex or edge.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for &src in self.predecessors(self.entry) {
            violations.push(Violation::EntryHasIncomingEdge {
                src,
                entry: self.entry,
            });
        }
        let exits = self.exits();
        if exits.is_empty() {
            violations.push(Violation::NoExitVertex);
        }
        let forward = self.reachable_from(self.entry);
        for &v in &self.vertices {
            if !forward.contains(&v) {
                violations.push(Violation::UnreachableFromEntry { vertex: v });
            }
        }
        let backward = self.co_reachable(&exits);
        for &v in &self.vertices {
            if !backward.contains(&v) {
                violations.push(Violation::NoPathToExit { vertex: v });
            }
        }
        violations
    }

    fn reachable_from(&self, start: u32) -> BTreeSet<u32> {
        let mut seen = BTreeSet::from([start]);
        let mut work = vec![start];
        while let Some(v) = work.pop() {
            for &s in self.successors(v) {
                if seen.insert(s) {
                    work.push(s);
                }
            }
        }
        seen
    }

    fn co_reachable(&self, targets: &[u32]) -> BTreeSet<u32> {
        let mut seen: BTreeSet<u32> = targets.iter().copied().collect();
        let mut work: Vec<u32> = targets.to_vec();
        while let Some(v) = work.pop() {
            for &p in self.predecessors(v) {
                if seen.insert(p) {
                    work.push(p);
                }
            }
        }
        seen
    }

    /// Maximal strongly connected components via Tarjan's algorithm,
    /// iterative so deep graphs cannot overflow the stack. Components are
    /// ordered by their smallest vertex ID.
    pub fn scc_partition(&self) -> SccPartition {
        let n = self.vertices.len();
        let index_of = |v: u32| self.vertices.binary_search(&v).unwrap();

        const UNSET: usize = usize::MAX;
        let mut order = vec![UNSET; n]; // discovery order
        let mut low = vec![UNSET; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_order = 0;
        let mut components: Vec<Vec<u32>> = Vec::new();
        let mut component_of_local = vec![UNSET; n];

        // Explicit DFS frames: (vertex index, next successor position).
        let mut frames: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if order[root] != UNSET {
                continue;
            }
            frames.push((root, 0));
            while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
                if *pos == 0 {
                    order[v] = next_order;
                    low[v] = next_order;
                    next_order += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                let succs = self.successors(self.vertices[v]);
                if *pos < succs.len() {
                    let w = index_of(succs[*pos]);
                    *pos += 1;
                    if order[w] == UNSET {
                        frames.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(order[w]);
                    }
                } else {
                    frames.pop();
                    if let Some(&(parent, _)) = frames.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == order[v] {
                        let mut component = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            component.push(self.vertices[w]);
                            if w == v {
                                break;
                            }
                        }
                        component.sort_unstable();
                        components.push(component);
                    }
                }
            }
        }

        components.sort_by_key(|c| c[0]);
        for (i, component) in components.iter().enumerate() {
            for &v in component {
                component_of_local[index_of(v)] = i;
            }
        }
        let component_of: BTreeMap<u32, usize> = self
            .vertices
            .iter()
            .map(|&v| (v, component_of_local[index_of(v)]))
            .collect();
        let mut condensation: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(src, dst) in &self.edges {
            let (a, b) = (component_of[&src], component_of[&dst]);
            if a != b {
                condensation.insert((a, b));
            }
        }
        SccPartition {
            components,
            component_of,
            condensation_edges: condensation.into_iter().collect(),
        }
    }

    /// Summary of the SCC structure: how much of the graph sits inside one
    /// component, and whether the condensation collapses anything at all.
    pub fn component_diagnostics(&self) -> ComponentDiagnostics {
        let partition = self.scc_partition();
        let largest = partition
            .components
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        let singletons = partition
            .components
            .iter()
            .filter(|c| c.len() == 1)
            .count();
        ComponentDiagnostics {
            largest_component: largest,
            singleton_components: singletons,
            condensation_isomorphic: largest <= 1,
        }
    }

    /// Canonical FNV-1a/64 checksum over the function name, sorted vertex
    /// IDs, and sorted edge pairs. Vertex metadata (source lines, edge
    /// labels) is deliberately excluded so cosmetic edits do not invalidate
    /// recorded coverage.
    pub fn canonical_checksum(&self) -> u64 {
        let mut text = String::new();
        text.push_str(&self.name);
        text.push('\n');
        for &v in &self.vertices {
            text.push_str(&v.to_string());
            text.push('\n');
        }
        for &(src, dst) in &self.edges {
            text.push_str(&format!("{src} {dst}\n"));
        }
        fnv1a64(text.as_bytes())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Partition of the vertex set into strongly connected components, plus the
/// deduplicated edges of the (acyclic) condensation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    pub components: Vec<Vec<u32>>,
    pub component_of: BTreeMap<u32, usize>,
    pub condensation_edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentDiagnostics {
    pub largest_component: usize,
    pub singleton_components: usize,
    /// True when every component is a singleton, i.e. the condensation does
    /// not collapse anything and compositional SCC methods gain nothing.
    pub condensation_isomorphic: bool,
}

/// A well-formedness violation found by [`ControlFlowGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EntryHasIncomingEdge { src: u32, entry: u32 },
    NoExitVertex,
    UnreachableFromEntry { vertex: u32 },
    NoPathToExit { vertex: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryHasIncomingEdge { src, entry } => {
                write!(f, "entry has incoming edge {src} -> {entry}")
            }
            Violation::NoExitVertex => write!(f, "no exit vertex (every vertex has successors)"),
            Violation::UnreachableFromEntry { vertex } => {
                write!(f, "vertex {vertex} is unreachable from the entry")
            }
            Violation::NoPathToExit { vertex } => {
                write!(f, "vertex {vertex} cannot reach any exit")
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph name must be non-empty")]
    EmptyName,
    #[error("duplicate vertex {0}")]
    DuplicateVertex(u32),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(u32, u32),
    #[error("edge references undeclared vertex {0}")]
    UnknownEdgeVertex(u32),
    #[error("entry references undeclared vertex {0}")]
    UnknownEntry(u32),
}

/// Errors from [`parse_cfg_text`]; each carries the 1-based input line.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("missing `graph` directive")]
    MissingGraph,
    #[error("line {line}: expected `graph <name>` as the first directive")]
    GraphNotFirst { line: usize },
    #[error("line {line}: duplicate `graph` directive")]
    DuplicateGraph { line: usize },
    #[error("line {line}: malformed directive `{found}`")]
    Syntax { line: usize, found: String },
    #[error("line {line}: duplicate vertex {vertex}")]
    DuplicateVertex { line: usize, vertex: u32 },
    #[error("line {line}: duplicate edge {src} -> {dst}")]
    DuplicateEdge { line: usize, src: u32, dst: u32 },
    #[error("line {line}: edge references undeclared vertex {vertex}")]
    UnknownVertex { line: usize, vertex: u32 },
    #[error("line {line}: `line` directive before any vertex")]
    OrphanLine { line: usize },
    #[error("missing `entry` directive")]
    MissingEntry,
    #[error("line {line}: `entry` references undeclared vertex {vertex}")]
    UnknownEntry { line: usize, vertex: u32 },
    #[error("line {line}: duplicate `entry` directive")]
    DuplicateEntry { line: usize },
}

/// Parses the CFG text format. Structural errors (duplicates, undeclared
/// vertices) are reported with their line number; semantic well-formedness
/// is left to [`ControlFlowGraph::validate`].
pub fn parse_cfg_text(input: &str) -> Result<ControlFlowGraph, ParseError> {
    let mut name: Option<String> = None;
    let mut vertices: Vec<u32> = Vec::new();
    let mut vertex_set: BTreeSet<u32> = BTreeSet::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut edge_set: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut edge_labels: BTreeMap<(u32, u32), bool> = BTreeMap::new();
    let mut lines: BTreeMap<u32, Vec<(u32, String)>> = BTreeMap::new();
    let mut entry: Option<u32> = None;
    let mut current_vertex: Option<u32> = None;

    for (number, raw) in input.lines().enumerate() {
        let line = number + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let syntax = || ParseError::Syntax {
            line,
            found: text.to_string(),
        };
        let mut tokens = text.split_whitespace();
        let directive = tokens.next().expect("non-empty line has a first token");
        if name.is_none() && directive != "graph" {
            return Err(ParseError::GraphNotFirst { line });
        }
        match directive {
            "graph" => {
                if name.is_some() {
                    return Err(ParseError::DuplicateGraph { line });
                }
                let g = tokens.next().ok_or_else(syntax)?;
                if tokens.next().is_some() {
                    return Err(syntax());
                }
                name = Some(g.to_string());
            }
            "vertex" => {
                let id: u32 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(syntax)?;
                if tokens.next().is_some() {
                    return Err(syntax());
                }
                if !vertex_set.insert(id) {
                    return Err(ParseError::DuplicateVertex { line, vertex: id });
                }
                vertices.push(id);
                current_vertex = Some(id);
            }
            "line" => {
                let vertex = current_vertex.ok_or(ParseError::OrphanLine { line })?;
                // Keep the source text verbatim after the line number.
                let mut parts = text.splitn(3, char::is_whitespace);
                parts.next(); // `line`
                let n: u32 = parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(syntax)?;
                let source = parts.next().map(|s| s.trim_start()).unwrap_or("");
                lines.entry(vertex).or_default().push((n, source.to_string()));
            }
            "edge" => {
                let src: u32 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(syntax)?;
                let dst: u32 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(syntax)?;
                let label = match tokens.next() {
                    None => None,
                    Some("true") => Some(true),
                    Some("false") => Some(false),
                    Some(_) => return Err(syntax()),
                };
                if tokens.next().is_some() {
                    return Err(syntax());
                }
                for v in [src, dst] {
                    if !vertex_set.contains(&v) {
                        return Err(ParseError::UnknownVertex { line, vertex: v });
                    }
                }
                if !edge_set.insert((src, dst)) {
                    return Err(ParseError::DuplicateEdge { line, src, dst });
                }
                edges.push((src, dst));
                if let Some(label) = label {
                    edge_labels.insert((src, dst), label);
                }
            }
            "entry" => {
                if entry.is_some() {
                    return Err(ParseError::DuplicateEntry { line });
                }
                let id: u32 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(syntax)?;
                if tokens.next().is_some() {
                    return Err(syntax());
                }
                if !vertex_set.contains(&id) {
                    return Err(ParseError::UnknownEntry { line, vertex: id });
                }
                entry = Some(id);
            }
            _ => return Err(syntax()),
        }
    }

    let name = name.ok_or(ParseError::MissingGraph)?;
    let entry = entry.ok_or(ParseError::MissingEntry)?;
    let mut graph = ControlFlowGraph::new(name, vertices, edges, entry)
        .expect("parser enforces the structural rules");
    graph.lines = lines;
    graph.edge_labels = edge_labels;
    Ok(graph)
}
