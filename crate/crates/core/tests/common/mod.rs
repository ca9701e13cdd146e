//! Shared fixtures and generators for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;

use ppcov::cfg::{parse_cfg_text, ControlFlowGraph};
use ppcov::instrument::PathIndex;

pub const GETCWD: &str = include_str!("../fixtures/getcwd.cfg");
pub const BSEARCH: &str = include_str!("../fixtures/bsearch.cfg");
pub const DIAMOND2: &str = include_str!("../fixtures/diamond2.cfg");
pub const LOOPED5: &str = include_str!("../fixtures/looped5.cfg");
pub const BDD4: &str = include_str!("../fixtures/bdd4.cfg");
pub const LOOPHEAVY: &str = include_str!("../fixtures/loopheavy.cfg");

pub fn fixture(text: &str) -> ControlFlowGraph {
    let g = parse_cfg_text(text).expect("fixture parses");
    assert!(g.validate().is_empty(), "fixture is a valid CFG");
    g
}

/// The expected prime paths of each fixture, in lexicographic order.
pub fn expected_diamond2() -> Vec<Vec<u32>> {
    vec![
        vec![1, 2, 3, 5, 6, 8],
        vec![1, 2, 3, 5, 7, 8],
        vec![1, 2, 4, 5, 6, 8],
        vec![1, 2, 4, 5, 7, 8],
    ]
}

pub fn expected_bsearch() -> Vec<Vec<u32>> {
    vec![
        vec![1, 2, 3, 5],
        vec![1, 2, 3, 6, 7],
        vec![1, 2, 3, 6, 8, 9],
        vec![1, 2, 4, 9],
        vec![2, 3, 5, 2],
        vec![2, 3, 6, 7, 2],
        vec![3, 5, 2, 3],
        vec![3, 5, 2, 4, 9],
        vec![3, 6, 7, 2, 3],
        vec![3, 6, 7, 2, 4, 9],
        vec![5, 2, 3, 5],
        vec![5, 2, 3, 6, 7],
        vec![5, 2, 3, 6, 8, 9],
        vec![6, 7, 2, 3, 5],
        vec![6, 7, 2, 3, 6],
        vec![7, 2, 3, 6, 7],
        vec![7, 2, 3, 6, 8, 9],
    ]
}

pub fn expected_getcwd() -> Vec<Vec<u32>> {
    vec![
        vec![1, 2, 3, 4, 6, 8],
        vec![1, 2, 3, 5, 7],
        vec![2, 3, 4, 6, 8, 2],
        vec![3, 4, 6, 8, 2, 3],
        vec![4, 6, 8, 2, 3, 4],
        vec![4, 6, 8, 2, 3, 5, 7],
        vec![6, 8, 2, 3, 4, 6],
        vec![8, 2, 3, 4, 6, 8],
    ]
}

pub fn expected_looped5() -> Vec<Vec<u32>> {
    vec![
        vec![1, 4, 2, 3],
        vec![1, 4, 5],
        vec![2, 3, 4, 2],
        vec![2, 3, 4, 5],
        vec![3, 4, 2, 3],
        vec![4, 2, 3, 4],
    ]
}

pub fn expected_bdd4() -> Vec<Vec<u32>> {
    vec![
        vec![1, 2, 3, 4, 5],
        vec![1, 2, 3, 4, 6],
        vec![1, 2, 3, 5],
        vec![1, 2, 4, 5],
        vec![1, 2, 4, 6],
        vec![1, 5],
    ]
}

/// The 41 simple paths of the two-decision graph, checkable by hand.
pub fn expected_diamond2_simple_paths() -> Vec<Vec<u32>> {
    let listed: &[&[u32]] = &[
        &[1, 2],
        &[1, 2, 3],
        &[1, 2, 3, 5],
        &[1, 2, 3, 5, 6],
        &[1, 2, 3, 5, 6, 8],
        &[1, 2, 3, 5, 7],
        &[1, 2, 3, 5, 7, 8],
        &[1, 2, 4],
        &[1, 2, 4, 5],
        &[1, 2, 4, 5, 6],
        &[1, 2, 4, 5, 6, 8],
        &[1, 2, 4, 5, 7],
        &[1, 2, 4, 5, 7, 8],
        &[2, 3],
        &[2, 3, 5],
        &[2, 3, 5, 6],
        &[2, 3, 5, 6, 8],
        &[2, 3, 5, 7],
        &[2, 3, 5, 7, 8],
        &[2, 4],
        &[2, 4, 5],
        &[2, 4, 5, 6],
        &[2, 4, 5, 6, 8],
        &[2, 4, 5, 7],
        &[2, 4, 5, 7, 8],
        &[3, 5],
        &[3, 5, 6],
        &[3, 5, 6, 8],
        &[3, 5, 7],
        &[3, 5, 7, 8],
        &[4, 5],
        &[4, 5, 6],
        &[4, 5, 6, 8],
        &[4, 5, 7],
        &[4, 5, 7, 8],
        &[5, 6],
        &[5, 6, 8],
        &[5, 7],
        &[5, 7, 8],
        &[6, 8],
        &[7, 8],
    ];
    let mut paths: Vec<Vec<u32>> = listed.iter().map(|p| p.to_vec()).collect();
    paths.sort();
    paths
}

/// A chain of `n` sequential if-then-else diamonds: vertex 1 is the entry,
/// diamond `i` branches at `3i+2` into arms `3i+3` and `3i+4` joining at
/// `3i+5`. For `n = 2` this is exactly the diamond2 fixture.
pub fn diamond_chain(n: u32) -> ControlFlowGraph {
    assert!(n >= 1);
    let vertices = 1..=(3 * n + 2);
    let mut edges = vec![(1u32, 2u32)];
    for i in 0..n {
        let branch = 3 * i + 2;
        let join = 3 * i + 5;
        edges.push((branch, branch + 1));
        edges.push((branch, branch + 2));
        edges.push((branch + 1, join));
        edges.push((branch + 2, join));
    }
    let g = ControlFlowGraph::new(format!("diamond{n}"), vertices, edges, 1).unwrap();
    assert!(g.validate().is_empty());
    g
}

/// Renders a graph in the CFG text format (for driving the CLI).
pub fn render_cfg_text(g: &ControlFlowGraph) -> String {
    let mut out = format!("graph {}\n", g.name());
    for &v in g.vertices() {
        out.push_str(&format!("vertex {v}\n"));
        for (number, text) in g.lines(v) {
            out.push_str(&format!("line {number} {text}\n"));
        }
    }
    for &(src, dst) in g.edges() {
        match g.edge_label(src, dst) {
            Some(true) => out.push_str(&format!("edge {src} {dst} true\n")),
            Some(false) => out.push_str(&format!("edge {src} {dst} false\n")),
            None => out.push_str(&format!("edge {src} {dst}\n")),
        }
    }
    out.push_str(&format!("entry {}\n", g.entry()));
    out
}

/// A random valid CFG on vertices `1..=n`. Each vertex past the entry gets
/// an incoming edge from an earlier vertex (reachability skeleton); extra
/// edges never target the entry and only leave vertices that already have a
/// successor, so every vertex keeps its skeleton route to a sink.
pub fn random_graph(rng: &mut impl Rng, max_vertices: u32, max_edges: usize) -> ControlFlowGraph {
    let n = rng.random_range(1..=max_vertices);
    let mut edges: BTreeSet<(u32, u32)> = BTreeSet::new();
    for v in 2..=n {
        edges.insert((rng.random_range(1..v), v));
    }
    if n >= 2 {
        let extras = rng.random_range(0..=max_edges.saturating_sub(edges.len()));
        for _ in 0..extras {
            let src = rng.random_range(1..=n);
            let dst = rng.random_range(2..=n);
            if edges.iter().any(|&(s, _)| s == src) {
                edges.insert((src, dst));
            }
        }
    }
    let g = ControlFlowGraph::new("random", 1..=n, edges, 1).unwrap();
    assert!(g.validate().is_empty(), "generator must produce valid CFGs");
    g
}

/// A random entry-rooted walk of at most `max_len` vertices.
pub fn random_walk(g: &ControlFlowGraph, rng: &mut impl Rng, max_len: usize) -> Vec<u32> {
    let mut walk = vec![g.entry()];
    while walk.len() < max_len {
        let succs = g.successors(*walk.last().unwrap());
        if succs.is_empty() {
            break;
        }
        walk.push(succs[rng.random_range(0..succs.len())]);
    }
    walk
}

/// Independent coverage oracle: path `n` is covered iff its vertex sequence
/// occurs contiguously in at least one trace.
pub fn substring_covered(idx: &PathIndex, traces: &[Vec<u32>]) -> BTreeSet<usize> {
    let mut covered = BTreeSet::new();
    for (n, path) in idx.iter() {
        if traces
            .iter()
            .any(|t| t.windows(path.len()).any(|w| w == path))
        {
            covered.insert(n);
        }
    }
    covered
}
