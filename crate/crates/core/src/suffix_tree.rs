//! Generalized suffix tree over the integer alphabet of vertex IDs.
//!
//! The tree is an uncompressed trie of the suffixes of every inserted path,
//! one vertex ID per node, with no backing string. A node's *final* mark
//! means its root-path is a currently-maximal inserted path: no inserted
//! path strictly extends it and no later insertion has covered it as a
//! subpath. After feeding in all candidate paths of a graph, the final
//! nodes are exactly the prime paths, and an ordered depth-first traversal
//! reconstructs them in lexicographic order.
//!
//! Subpath detection falls out of insertion: a path that creates no new
//! node was already present, i.e. it is a subpath of something inserted
//! before. A tree instance is single-writer; distinct trees may be built
//! concurrently.

use std::collections::BTreeMap;

use thiserror::Error;

const ROOT: usize = 0;

#[derive(Debug, Clone)]
struct Node {
    /// Incoming vertex ID; meaningless for the root.
    vertex: u32,
    /// Ordered children so depth-first traversal yields lexicographic order.
    children: BTreeMap<u32, usize>,
    is_final: bool,
}

impl Node {
    fn new(vertex: u32) -> Self {
        Node {
            vertex,
            children: BTreeMap::new(),
            is_final: false,
        }
    }
}

/// Outcome of a single full-path insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertOutcome {
    /// True when the insertion created at least one node. A path that was
    /// exhausted inside the existing tree is a subpath of an earlier
    /// insertion and changes nothing.
    pub created_node: bool,
    /// True when the insertion extended a previously-maximal path and
    /// cleared its final mark.
    pub was_extension: bool,
}

/// Outcome of [`SuffixTree::insert_with_suffixes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuffixInsertOutcome {
    /// True when the full path was new enough to create a node and is now
    /// marked final (and counted against the insertion threshold).
    pub final_path_recorded: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot insert an empty path")]
pub struct EmptyPathError;

#[derive(Debug, Clone)]
pub struct SuffixTree {
    nodes: Vec<Node>,
    insert_counter: u64,
    work_counter: u64,
}

impl Default for SuffixTree {
    fn default() -> Self {
        Self::new()
    }
}

impl SuffixTree {
    pub fn new() -> Self {
        SuffixTree {
            nodes: vec![Node::new(0)],
            insert_counter: 0,
            work_counter: 0,
        }
    }

    /// Count of full-path insertions that created at least one node. This is
    /// the pessimistic path count used for threshold aborts: it is never
    /// decremented when paths are later subsumed.
    pub fn insert_counter(&self) -> u64 {
        self.insert_counter
    }

    /// Count of node visits and creations across all insert operations.
    pub fn work_counter(&self) -> u64 {
        self.work_counter
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Walks `path` from the root, creating missing nodes. Passing beyond a
    /// final node clears its mark (the node's root-path is now strictly
    /// extended). When `clear_terminal` is set, the terminal's mark is
    /// cleared as well: a suffix landing on a final node proves that path is
    /// a proper subpath of the one being inserted.
    fn descend(&mut self, path: &[u32], clear_terminal: bool) -> (usize, usize, bool) {
        let mut node = ROOT;
        let mut created = 0;
        let mut cleared = false;
        let last = path.len() - 1;
        for (i, &v) in path.iter().enumerate() {
            self.work_counter += 1;
            let next = match self.nodes[node].children.get(&v) {
                Some(&child) => child,
                None => {
                    let child = self.nodes.len();
                    self.nodes.push(Node::new(v));
                    self.nodes[node].children.insert(v, child);
                    created += 1;
                    child
                }
            };
            node = next;
            if (i < last || clear_terminal) && self.nodes[node].is_final {
                self.nodes[node].is_final = false;
                cleared = true;
            }
        }
        (node, created, cleared)
    }

    /// Inserts `path` as a root-path and marks its terminal final, unless the
    /// path was exhausted inside the existing tree, in which case nothing is
    /// created and no final flag changes.
    pub fn insert(&mut self, path: &[u32]) -> Result<InsertOutcome, EmptyPathError> {
        if path.is_empty() {
            return Err(EmptyPathError);
        }
        let (terminal, created, cleared) = self.descend(path, false);
        if created > 0 {
            self.nodes[terminal].is_final = true;
            self.insert_counter += 1;
        }
        Ok(InsertOutcome {
            created_node: created > 0,
            was_extension: cleared,
        })
    }

    /// Inserts `path` (terminal marked final) followed by its successive
    /// tails, whose terminals are *not* marked. Stops as soon as a tail
    /// creates no node: the remaining suffixes were already inserted. A path
    /// whose full insertion creates nothing is a subpath of earlier content
    /// and leaves the tree untouched.
    pub fn insert_with_suffixes(
        &mut self,
        path: &[u32],
    ) -> Result<SuffixInsertOutcome, EmptyPathError> {
        let outcome = self.insert(path)?;
        if !outcome.created_node {
            return Ok(SuffixInsertOutcome {
                final_path_recorded: false,
            });
        }
        let mut tail = &path[1..];
        while !tail.is_empty() {
            let (_, created, _) = self.descend(tail, true);
            if created == 0 {
                break;
            }
            tail = &tail[1..];
        }
        Ok(SuffixInsertOutcome {
            final_path_recorded: true,
        })
    }

    /// True iff `path` is a contiguous subsequence of some previously
    /// inserted path (given suffix-closed insertions): a probe that checks
    /// whether insertion would create any node, leaving the tree unchanged.
    pub fn contains_as_subpath(&self, path: &[u32]) -> bool {
        let mut node = ROOT;
        for v in path {
            match self.nodes[node].children.get(v) {
                Some(&child) => node = child,
                None => return false,
            }
        }
        true
    }

    /// Root-paths of all final nodes in lexicographic order of the vertex
    /// sequences (ordered depth-first traversal, left to right).
    pub fn enumerate_final(&self) -> Vec<Vec<u32>> {
        let mut result = Vec::new();
        let mut path = Vec::new();
        self.collect_final(ROOT, &mut path, &mut result);
        result
    }

    fn collect_final(&self, node: usize, path: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if self.nodes[node].is_final {
            out.push(path.clone());
        }
        for (&v, &child) in &self.nodes[node].children {
            path.push(v);
            self.collect_final(child, path, out);
            path.pop();
        }
    }

    /// Indented node-per-line dump with `*` marking final nodes.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_node(ROOT, 0, &mut out);
        out
    }

    fn dump_node(&self, node: usize, depth: usize, out: &mut String) {
        if node != ROOT {
            out.push_str(&"  ".repeat(depth - 1));
            out.push_str(&self.nodes[node].vertex.to_string());
            if self.nodes[node].is_final {
                out.push_str(" *");
            }
            out.push('\n');
        }
        for &child in self.nodes[node].children.values() {
            self.dump_node(child, depth + 1, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The candidate paths of the looped5 fixture in deterministic
    /// depth-first yield order.
    const LOOPED5_CANDIDATES: &[&[u32]] = &[
        &[1, 4, 2, 3],
        &[1, 4, 5],
        &[2, 3, 4, 2],
        &[2, 3, 4, 5],
        &[3, 4, 2, 3],
        &[3, 4, 5],
        &[4, 2, 3, 4],
        &[4, 5],
        &[5],
    ];

    fn looped5_tree() -> SuffixTree {
        let mut tree = SuffixTree::new();
        for path in LOOPED5_CANDIDATES {
            tree.insert_with_suffixes(path).unwrap();
        }
        tree
    }

    #[test]
    fn insert_single_symbol_into_empty_tree() {
        let mut tree = SuffixTree::new();
        let out = tree.insert(&[7]).unwrap();
        assert!(out.created_node);
        assert!(!out.was_extension);
        assert_eq!(tree.enumerate_final(), vec![vec![7]]);
        assert_eq!(tree.insert_counter(), 1);
    }

    #[test]
    fn insert_exhausted_path_changes_nothing() {
        let mut tree = looped5_tree();
        let finals_before = tree.enumerate_final();
        let counter_before = tree.insert_counter();
        // [1 4 2] exhausts inside the existing [1 4 2 3] chain.
        let out = tree.insert(&[1, 4, 2]).unwrap();
        assert!(!out.created_node);
        assert!(!out.was_extension);
        assert_eq!(tree.enumerate_final(), finals_before);
        assert_eq!(tree.insert_counter(), counter_before);
    }

    #[test]
    fn insert_extension_clears_final_mark() {
        let mut tree = SuffixTree::new();
        tree.insert(&[1, 2, 5]).unwrap();
        assert_eq!(tree.enumerate_final(), vec![vec![1, 2, 5]]);
        let out = tree.insert(&[1, 2, 5, 6]).unwrap();
        assert!(out.created_node);
        assert!(out.was_extension);
        assert_eq!(tree.enumerate_final(), vec![vec![1, 2, 5, 6]]);
    }

    #[test]
    fn suffix_terminals_are_not_final() {
        let mut tree = SuffixTree::new();
        tree.insert_with_suffixes(&[2, 3, 4, 5]).unwrap();
        tree.insert_with_suffixes(&[3, 4, 5]).unwrap();
        // [3 4 5] is a suffix of [2 3 4 5] and not prime.
        assert!(tree.contains_as_subpath(&[3, 4, 5]));
        assert_eq!(tree.enumerate_final(), vec![vec![2, 3, 4, 5]]);
    }

    #[test]
    fn later_superpath_unmarks_subsumed_path() {
        let mut tree = SuffixTree::new();
        tree.insert_with_suffixes(&[1, 2]).unwrap();
        assert_eq!(tree.enumerate_final(), vec![vec![1, 2]]);
        tree.insert_with_suffixes(&[4, 1, 2]).unwrap();
        assert_eq!(tree.enumerate_final(), vec![vec![4, 1, 2]]);
    }

    #[test]
    fn looped5_finals_match_the_prime_paths() {
        let tree = looped5_tree();
        assert_eq!(
            tree.enumerate_final(),
            vec![
                vec![1, 4, 2, 3],
                vec![1, 4, 5],
                vec![2, 3, 4, 2],
                vec![2, 3, 4, 5],
                vec![3, 4, 2, 3],
                vec![4, 2, 3, 4],
            ]
        );
        // Only the six maximal candidates created nodes.
        assert_eq!(tree.insert_counter(), 6);
    }

    #[test]
    fn duplicate_insertion_is_idempotent() {
        let mut tree = SuffixTree::new();
        tree.insert_with_suffixes(&[1, 2, 3]).unwrap();
        let finals = tree.enumerate_final();
        let counter = tree.insert_counter();
        let out = tree.insert_with_suffixes(&[1, 2, 3]).unwrap();
        assert!(!out.final_path_recorded);
        assert_eq!(tree.enumerate_final(), finals);
        assert_eq!(tree.insert_counter(), counter);
    }

    #[test]
    fn subpath_probe_matches_substring_scan() {
        let tree = looped5_tree();
        // Prefix of the suffix [4 2 3 4].
        assert!(tree.contains_as_subpath(&[4, 2, 3]));
        assert!(!tree.contains_as_subpath(&[5, 4]));
        assert!(tree.contains_as_subpath(&[2, 3, 4, 2]));
        let primes: Vec<Vec<u32>> = LOOPED5_CANDIDATES.iter().map(|p| p.to_vec()).collect();
        for probe in [&[1, 4][..], &[4, 2][..], &[2, 3, 4][..], &[3, 4, 5][..], &[2, 4][..]] {
            let expected = primes
                .iter()
                .any(|p| p.windows(probe.len()).any(|w| w == probe));
            assert_eq!(tree.contains_as_subpath(probe), expected, "probe {probe:?}");
        }
    }

    #[test]
    fn probe_leaves_tree_unchanged() {
        let tree = looped5_tree();
        let before = tree.dump();
        let work = tree.work_counter();
        tree.contains_as_subpath(&[4, 2, 3]);
        tree.contains_as_subpath(&[5, 4]);
        assert_eq!(tree.dump(), before);
        assert_eq!(tree.work_counter(), work);
    }

    #[test]
    fn enumerate_final_on_empty_tree() {
        assert!(SuffixTree::new().enumerate_final().is_empty());
    }

    #[test]
    fn enumerate_final_is_lexicographic() {
        let mut tree = SuffixTree::new();
        for path in [&[3, 1][..], &[1, 3][..], &[1, 2][..], &[2][..]] {
            tree.insert_with_suffixes(path).unwrap();
        }
        assert_eq!(
            tree.enumerate_final(),
            vec![vec![1, 2], vec![1, 3], vec![3, 1]]
        );
    }

    #[test]
    fn empty_path_is_rejected() {
        let mut tree = SuffixTree::new();
        assert_eq!(tree.insert(&[]), Err(EmptyPathError));
        assert_eq!(tree.insert_with_suffixes(&[]), Err(EmptyPathError));
    }

    #[test]
    fn looped5_dump_golden() {
        // Full tree after inserting every candidate with suffixes: six final
        // terminals; the [3 4 5], [4 5], and [5] leaves stay unmarked as
        // suffixes of longer insertions.
        let expected = "\
1
  4
    2
      3 *
    5 *
2
  3
    4
      2 *
      5 *
3
  4
    2
      3 *
    5
4
  2
    3
      4 *
  5
5
";
        assert_eq!(looped5_tree().dump(), expected);
    }

    #[test]
    fn dump_golden_small_tree() {
        let mut tree = SuffixTree::new();
        tree.insert_with_suffixes(&[2, 3]).unwrap();
        tree.insert_with_suffixes(&[2, 4]).unwrap();
        assert_eq!(tree.dump(), "2\n  3 *\n  4 *\n3\n4\n");
        assert_eq!(tree.enumerate_final(), vec![vec![2, 3], vec![2, 4]]);
    }

    #[test]
    fn work_counter_stays_within_quadratic_bound() {
        let mut tree = SuffixTree::new();
        let paths: Vec<Vec<u32>> = (0..20u32)
            .map(|i| (0..12).map(|j| (i + j) % 7).collect())
            .collect();
        let n = 12u64;
        let m = paths.len() as u64;
        for p in &paths {
            tree.insert_with_suffixes(p).unwrap();
        }
        assert!(tree.work_counter() <= 4 * n * n * m);
    }
}
