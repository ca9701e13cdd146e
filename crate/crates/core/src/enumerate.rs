//! Prime path enumeration by candidate extension with suffix-tree pruning.
//!
//! Candidates are grown from every single-vertex path by repeatedly
//! appending successors while the sequence stays a simple path, or closing a
//! simple cycle when a successor equals the first vertex. Forward-maximal
//! candidates and cycles feed the suffix tree, which prunes everything that
//! is a subpath of another candidate; the surviving final nodes are the
//! prime paths. A pessimistic running count of tree insertions guards
//! against path explosion: enumeration aborts once it exceeds the limit.
//!
//! The brute-force enumerators at the bottom exist for testing; they are
//! exponential and guarded to small graphs.

use thiserror::Error;

use crate::cfg::ControlFlowGraph;
use crate::suffix_tree::SuffixTree;

/// Default insertion threshold before enumeration aborts.
pub const DEFAULT_PATH_LIMIT: u64 = 250_000;

/// Vertex-count guard for the brute-force oracles.
pub const BRUTEFORCE_VERTEX_LIMIT: usize = 16;

/// The result of prime path enumeration.
///
/// When `limit_exceeded` is set the path list is empty and only the counter
/// fields are meaningful. Otherwise `paths` holds every prime path of the
/// graph in strictly lexicographic order of the vertex sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimePathSet {
    pub paths: Vec<Vec<u32>>,
    pub limit_exceeded: bool,
    /// The threshold the enumeration ran under.
    pub limit: u64,
    /// Tree insertions counted when enumeration stopped. Pessimistic: never
    /// corrected downwards when paths are later subsumed.
    pub insertions_counted: u64,
}

/// Operational counters from one enumeration run, used to check the
/// quadratic pruning bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationStats {
    /// Number of candidate paths fed to the suffix tree.
    pub candidates: u64,
    /// Length of the longest candidate.
    pub longest_candidate: usize,
    /// Suffix tree node visits and creations.
    pub tree_work: u64,
}

/// Streams every forward-maximal simple path and every simple cycle of the
/// graph: depth-first from each start vertex in ascending ID order,
/// extending by successors in ascending ID order. A path is yielded when it
/// closes a cycle (first vertex reached again) or when no extension is
/// possible.
pub fn extend_candidates(g: &ControlFlowGraph) -> Candidates<'_> {
    Candidates {
        g,
        next_start: 0,
        path: Vec::new(),
        frames: Vec::new(),
    }
}

pub struct Candidates<'a> {
    g: &'a ControlFlowGraph,
    next_start: usize,
    path: Vec<u32>,
    frames: Vec<Frame>,
}

struct Frame {
    /// Next successor position to try for the path's last vertex.
    succ_pos: usize,
    /// Whether this path continued somehow (extension or cycle closure); if
    /// it never did, the path itself is maximal and gets yielded.
    continued: bool,
}

impl Iterator for Candidates<'_> {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        loop {
            if self.frames.is_empty() {
                let starts = self.g.vertices();
                if self.next_start >= starts.len() {
                    return None;
                }
                let v = starts[self.next_start];
                self.next_start += 1;
                self.path.clear();
                self.path.push(v);
                self.frames.push(Frame {
                    succ_pos: 0,
                    continued: false,
                });
            }
            let last = *self.path.last().expect("frames imply a non-empty path");
            let succs = self.g.successors(last);
            let frame = self.frames.last_mut().expect("non-empty");
            if frame.succ_pos < succs.len() {
                let s = succs[frame.succ_pos];
                frame.succ_pos += 1;
                if s == self.path[0] {
                    // Simple cycle: yield, do not extend further.
                    frame.continued = true;
                    let mut cycle = self.path.clone();
                    cycle.push(s);
                    return Some(cycle);
                }
                if !self.path.contains(&s) {
                    frame.continued = true;
                    self.path.push(s);
                    self.frames.push(Frame {
                        succ_pos: 0,
                        continued: false,
                    });
                }
                // A successor already inside the path (other than the first
                // vertex) can neither extend nor close; skip it.
            } else {
                let maximal = !frame.continued;
                let yielded = maximal.then(|| self.path.clone());
                self.frames.pop();
                self.path.pop();
                if let Some(p) = yielded {
                    return Some(p);
                }
            }
        }
    }
}

/// Enumerates the prime paths of `g`, aborting once the pessimistic
/// insertion count exceeds `limit`.
pub fn prime_paths(g: &ControlFlowGraph, limit: u64) -> PrimePathSet {
    prime_paths_with_stats(g, limit).0
}

/// [`prime_paths`] plus the operational counters of the run.
pub fn prime_paths_with_stats(g: &ControlFlowGraph, limit: u64) -> (PrimePathSet, EnumerationStats) {
    assert!(limit >= 1, "path limit must be positive");
    let mut tree = SuffixTree::new();
    let mut stats = EnumerationStats {
        candidates: 0,
        longest_candidate: 0,
        tree_work: 0,
    };
    for candidate in extend_candidates(g) {
        stats.candidates += 1;
        stats.longest_candidate = stats.longest_candidate.max(candidate.len());
        tree.insert_with_suffixes(&candidate)
            .expect("candidates are never empty");
        if tree.insert_counter() > limit {
            stats.tree_work = tree.work_counter();
            return (
                PrimePathSet {
                    paths: Vec::new(),
                    limit_exceeded: true,
                    limit,
                    insertions_counted: tree.insert_counter(),
                },
                stats,
            );
        }
    }
    stats.tree_work = tree.work_counter();
    (
        PrimePathSet {
            paths: tree.enumerate_final(),
            limit_exceeded: false,
            limit,
            insertions_counted: tree.insert_counter(),
        },
        stats,
    )
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("graph has {vertices} vertices; the brute-force oracle is limited to {limit}")]
pub struct OracleSizeError {
    pub vertices: usize,
    pub limit: usize,
}

/// Test oracle: every simple path and simple cycle with at least two
/// vertices, by exhaustive search, sorted and deduplicated. An isolated
/// vertex (no edges at all, so only the trivial single-vertex graph in a
/// valid CFG) contributes its single-vertex path.
pub fn simple_paths_bruteforce(g: &ControlFlowGraph) -> Result<Vec<Vec<u32>>, OracleSizeError> {
    if g.vertices().len() > BRUTEFORCE_VERTEX_LIMIT {
        return Err(OracleSizeError {
            vertices: g.vertices().len(),
            limit: BRUTEFORCE_VERTEX_LIMIT,
        });
    }
    let mut out: Vec<Vec<u32>> = Vec::new();
    for &start in g.vertices() {
        if g.successors(start).is_empty() && g.predecessors(start).is_empty() {
            out.push(vec![start]);
            continue;
        }
        let mut path = vec![start];
        collect_simple(g, &mut path, &mut out);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn collect_simple(g: &ControlFlowGraph, path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let last = *path.last().unwrap();
    for &s in g.successors(last) {
        if s == path[0] {
            let mut cycle = path.clone();
            cycle.push(s);
            out.push(cycle);
        } else if !path.contains(&s) {
            path.push(s);
            out.push(path.clone());
            collect_simple(g, path, out);
            path.pop();
        }
    }
}

/// Test oracle: the maximal elements of [`simple_paths_bruteforce`] — every
/// sequence that is not a proper contiguous subsequence of another.
pub fn prime_paths_bruteforce(g: &ControlFlowGraph) -> Result<Vec<Vec<u32>>, OracleSizeError> {
    let all = simple_paths_bruteforce(g)?;
    let maximal: Vec<Vec<u32>> = all
        .iter()
        .filter(|p| {
            !all.iter()
                .any(|q| q.len() > p.len() && q.windows(p.len()).any(|w| w == p.as_slice()))
        })
        .cloned()
        .collect();
    Ok(maximal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::parse_cfg_text;

    const DIAMOND2: &str = include_str!("../tests/fixtures/diamond2.cfg");
    const LOOPED5: &str = include_str!("../tests/fixtures/looped5.cfg");
    const GETCWD: &str = include_str!("../tests/fixtures/getcwd.cfg");
    const BSEARCH: &str = include_str!("../tests/fixtures/bsearch.cfg");
    const BDD4: &str = include_str!("../tests/fixtures/bdd4.cfg");

    #[test]
    fn candidates_of_single_vertex_graph() {
        let g = ControlFlowGraph::new("t", [3], [], 3).unwrap();
        let c: Vec<_> = extend_candidates(&g).collect();
        assert_eq!(c, vec![vec![3]]);
    }

    #[test]
    fn candidates_of_self_edge_only() {
        let g = ControlFlowGraph::new("t", [4], [(4, 4)], 4).unwrap();
        let c: Vec<_> = extend_candidates(&g).collect();
        assert_eq!(c, vec![vec![4, 4]]);
    }

    #[test]
    fn self_edges_parse_and_yield_a_two_vertex_cycle() {
        let text = "graph t\nvertex 1\nvertex 2\nvertex 3\nedge 1 2\nedge 2 2\nedge 2 3\nentry 1\n";
        let g = parse_cfg_text(text).unwrap();
        assert!(g.validate().is_empty());
        let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
        assert_eq!(set.paths, vec![vec![1, 2, 3], vec![2, 2]]);
        assert_eq!(set.paths, prime_paths_bruteforce(&g).unwrap());
    }

    #[test]
    fn candidates_come_from_every_start_vertex() {
        let g = parse_cfg_text(DIAMOND2).unwrap();
        let c: Vec<_> = extend_candidates(&g).collect();
        assert!(c.contains(&vec![1, 2, 3, 5, 6, 8]));
        assert!(c.contains(&vec![6, 8]));
        // Forward-maximal only: nothing yielded is extendable.
        for path in &c {
            let first = path[0];
            let last = *path.last().unwrap();
            if last == first && path.len() > 1 {
                continue; // cycles are complete by definition
            }
            for &s in g.successors(last) {
                assert!(path.contains(&s) && s != first, "{path:?} extendable by {s}");
            }
        }
    }

    #[test]
    fn candidate_order_is_deterministic_depth_first() {
        let g = parse_cfg_text(LOOPED5).unwrap();
        let c: Vec<_> = extend_candidates(&g).collect();
        assert_eq!(
            c,
            vec![
                vec![1, 4, 2, 3],
                vec![1, 4, 5],
                vec![2, 3, 4, 2],
                vec![2, 3, 4, 5],
                vec![3, 4, 2, 3],
                vec![3, 4, 5],
                vec![4, 2, 3, 4],
                vec![4, 5],
                vec![5],
            ]
        );
    }

    #[test]
    fn prime_paths_diamond2() {
        let g = parse_cfg_text(DIAMOND2).unwrap();
        let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
        assert!(!set.limit_exceeded);
        assert_eq!(
            set.paths,
            vec![
                vec![1, 2, 3, 5, 6, 8],
                vec![1, 2, 3, 5, 7, 8],
                vec![1, 2, 4, 5, 6, 8],
                vec![1, 2, 4, 5, 7, 8],
            ]
        );
    }

    #[test]
    fn prime_paths_getcwd() {
        let g = parse_cfg_text(GETCWD).unwrap();
        let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
        assert_eq!(
            set.paths,
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
        );
    }

    #[test]
    fn prime_paths_bsearch_has_seventeen() {
        let g = parse_cfg_text(BSEARCH).unwrap();
        let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
        assert_eq!(set.paths.len(), 17);
        assert!(set.paths.contains(&vec![1, 2, 3, 5]));
        assert!(set.paths.contains(&vec![3, 5, 2, 4, 9]));
        assert!(set.paths.contains(&vec![7, 2, 3, 6, 8, 9]));
    }

    #[test]
    fn prime_paths_bdd4() {
        let g = parse_cfg_text(BDD4).unwrap();
        let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
        assert_eq!(
            set.paths,
            vec![
                vec![1, 2, 3, 4, 5],
                vec![1, 2, 3, 4, 6],
                vec![1, 2, 3, 5],
                vec![1, 2, 4, 5],
                vec![1, 2, 4, 6],
                vec![1, 5],
            ]
        );
    }

    #[test]
    fn low_limit_aborts_with_empty_paths() {
        let g = parse_cfg_text(DIAMOND2).unwrap();
        let set = prime_paths(&g, 3);
        assert!(set.limit_exceeded);
        assert!(set.paths.is_empty());
        assert!(set.insertions_counted > 3);
        assert_eq!(set.limit, 3);
        // The same graph fits under a limit of 4 inserts exactly.
        assert!(!prime_paths(&g, 4).limit_exceeded);
    }

    #[test]
    fn simple_paths_bruteforce_counts() {
        let g = parse_cfg_text(DIAMOND2).unwrap();
        let all = simple_paths_bruteforce(&g).unwrap();
        assert_eq!(all.len(), 41);
        assert!(all.contains(&vec![1, 2]));
        assert!(all.contains(&vec![7, 8]));

        let chain = ControlFlowGraph::new("t", [1, 2], [(1, 2)], 1).unwrap();
        assert_eq!(simple_paths_bruteforce(&chain).unwrap(), vec![vec![1, 2]]);

        let single = ControlFlowGraph::new("t", [9], [], 9).unwrap();
        assert_eq!(simple_paths_bruteforce(&single).unwrap(), vec![vec![9]]);
    }

    #[test]
    fn bruteforce_respects_size_guard() {
        let g = ControlFlowGraph::new("t", 0..=16, (0..16).map(|i| (i, i + 1)), 0).unwrap();
        assert_eq!(
            simple_paths_bruteforce(&g).unwrap_err(),
            OracleSizeError {
                vertices: 17,
                limit: 16
            }
        );
    }

    #[test]
    fn bruteforce_prime_paths_match_tree_enumeration_on_fixtures() {
        for text in [DIAMOND2, LOOPED5, GETCWD, BSEARCH, BDD4] {
            let g = parse_cfg_text(text).unwrap();
            let tree = prime_paths(&g, DEFAULT_PATH_LIMIT).paths;
            let brute = prime_paths_bruteforce(&g).unwrap();
            assert_eq!(tree, brute, "graph {}", g.name());
        }
    }

    #[test]
    fn every_simple_path_is_a_subpath_of_a_prime_path() {
        for text in [DIAMOND2, LOOPED5, GETCWD, BSEARCH] {
            let g = parse_cfg_text(text).unwrap();
            let primes = prime_paths(&g, DEFAULT_PATH_LIMIT).paths;
            for sp in simple_paths_bruteforce(&g).unwrap() {
                assert!(
                    primes
                        .iter()
                        .any(|p| p.windows(sp.len()).any(|w| w == sp.as_slice())),
                    "simple path {sp:?} not inside any prime path of {}",
                    g.name()
                );
            }
        }
    }

    #[test]
    fn loops_are_taken_retaken_and_skipped() {
        // Every cycle head must show up in a path through the loop body and,
        // where a bypass exists, in a path around it.
        for text in [GETCWD, BSEARCH] {
            let g = parse_cfg_text(text).unwrap();
            let primes = prime_paths(&g, DEFAULT_PATH_LIMIT).paths;
            let cycles: Vec<&Vec<u32>> = primes.iter().filter(|p| p[0] == p[p.len() - 1]).collect();
            assert!(!cycles.is_empty(), "fixture {} has loops", g.name());
            for cycle in cycles {
                let head = cycle[0];
                assert!(
                    primes
                        .iter()
                        .any(|p| p[0] != p[p.len() - 1] && p.contains(&head)),
                    "no acyclic prime path visits loop vertex {head}"
                );
            }
        }
    }

    #[test]
    fn prime_path_structure_invariants() {
        for text in [DIAMOND2, LOOPED5, GETCWD, BSEARCH, BDD4] {
            let g = parse_cfg_text(text).unwrap();
            let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
            for path in &set.paths {
                for pair in path.windows(2) {
                    assert!(g.contains_edge(pair[0], pair[1]));
                }
                let interior = if path[0] == path[path.len() - 1] && path.len() > 1 {
                    &path[..path.len() - 1]
                } else {
                    &path[..]
                };
                let mut dedup = interior.to_vec();
                dedup.sort_unstable();
                dedup.dedup();
                assert_eq!(dedup.len(), interior.len(), "repeated vertex in {path:?}");
            }
            let mut sorted = set.paths.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, set.paths, "output not sorted or not unique");
        }
    }
}
