//! Coverage reports: execution directions for uncovered prime paths, in a
//! human-readable and a condensed machine-readable form.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cfg::ControlFlowGraph;
use crate::coverage::{coverage_summary, CoverageState, Summary};
use crate::instrument::PathIndex;

/// One step of an execution direction: the basic block to visit, the
/// decision taken out of it towards the next block (when that edge is
/// labeled), and the block's source lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportLine {
    pub vertex: u32,
    pub decision: Option<bool>,
    pub lines: Vec<(u32, String)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirectionsError {
    #[error("empty path")]
    EmptyPath,
    #[error("unknown vertex {vertex}")]
    UnknownVertex { vertex: u32 },
    #[error("{src} -> {dst} is not an edge")]
    NotAnEdge { src: u32, dst: u32 },
}

/// Describes how to execute `path`: its blocks in order, each with the
/// source lines that must run and the branch decision leading on.
pub fn path_directions(
    g: &ControlFlowGraph,
    path: &[u32],
) -> Result<Vec<ReportLine>, DirectionsError> {
    if path.is_empty() {
        return Err(DirectionsError::EmptyPath);
    }
    for &v in path {
        if !g.contains_vertex(v) {
            return Err(DirectionsError::UnknownVertex { vertex: v });
        }
    }
    for pair in path.windows(2) {
        if !g.contains_edge(pair[0], pair[1]) {
            return Err(DirectionsError::NotAnEdge {
                src: pair[0],
                dst: pair[1],
            });
        }
    }
    Ok(path
        .iter()
        .enumerate()
        .map(|(i, &v)| ReportLine {
            vertex: v,
            decision: path
                .get(i + 1)
                .and_then(|&next| g.edge_label(v, next)),
            lines: g.lines(v).to_vec(),
        })
        .collect())
}

fn render_directions(out: &mut String, directions: &[ReportLine]) {
    for block in directions {
        let decision = match block.decision {
            Some(true) => "(true)",
            Some(false) => "(false)",
            None => "",
        };
        if block.lines.is_empty() {
            if decision.is_empty() {
                let _ = writeln!(out, "BB {}", block.vertex);
            } else {
                let _ = writeln!(out, "BB {}:{decision}", block.vertex);
            }
        } else {
            for (i, (number, text)) in block.lines.iter().enumerate() {
                // The decision annotates the branch, i.e. the block's last line.
                let mark = if i + 1 == block.lines.len() { decision } else { "" };
                let _ = writeln!(out, "BB {}:{mark:<8}{number:>4}: {text}", block.vertex);
            }
        }
    }
}

/// Human-readable report: a summary header, then per uncovered path its
/// index and the directions to cover it.
pub fn text_report(g: &ControlFlowGraph, idx: &PathIndex, state: &CoverageState) -> String {
    let mut out = String::new();
    match coverage_summary(state) {
        Summary::Aborted => {
            let _ = writeln!(out, "{}: aborted: path limit exceeded", state.function);
            return out;
        }
        Summary::Counts { covered, total } => {
            let _ = writeln!(out, "{}: covered {covered}/{total}", state.function);
        }
    }
    for (n, path) in idx.iter() {
        if state.covered.contains(n) {
            continue;
        }
        let _ = writeln!(out, "path {n} not covered:");
        let directions =
            path_directions(g, path).expect("prime paths are paths of their own graph");
        render_directions(&mut out, &directions);
    }
    out
}

/// Machine-readable report: `<function>:summary:<covered>/<total>` then one
/// `<function>:path:<index>:<covered|uncovered>:<v1,v2,...>` line per path
/// in index order. An aborted function yields a single
/// `<function>:summary:aborted` line.
pub fn machine_report(idx: &PathIndex, state: &CoverageState) -> String {
    let mut out = String::new();
    match coverage_summary(state) {
        Summary::Aborted => {
            let _ = writeln!(out, "{}:summary:aborted", state.function);
            return out;
        }
        Summary::Counts { covered, total } => {
            let _ = writeln!(out, "{}:summary:{covered}/{total}", state.function);
        }
    }
    for (n, path) in idx.iter() {
        let status = if state.covered.contains(n) {
            "covered"
        } else {
            "uncovered"
        };
        let vertices: Vec<String> = path.iter().map(u32::to_string).collect();
        let _ = writeln!(
            out,
            "{}:path:{n}:{status}:{}",
            state.function,
            vertices.join(",")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::parse_cfg_text;
    use crate::coverage::{new_state, replay_run, Trace};
    use crate::enumerate::{prime_paths, DEFAULT_PATH_LIMIT};
    use crate::instrument::{index_paths, InstrumentationTable, WordSize};
    use crate::ControlFlowGraph;

    const GETCWD: &str = include_str!("../tests/fixtures/getcwd.cfg");
    const BDD4: &str = include_str!("../tests/fixtures/bdd4.cfg");
    const DIAMOND2: &str = include_str!("../tests/fixtures/diamond2.cfg");

    fn run_traces(text: &str, traces: &[Vec<u32>]) -> (ControlFlowGraph, PathIndex, CoverageState) {
        let g = parse_cfg_text(text).unwrap();
        let set = prime_paths(&g, DEFAULT_PATH_LIMIT);
        let idx = index_paths(&set).unwrap();
        let table = InstrumentationTable::build(&g, &idx, WordSize::DEFAULT);
        let mut state = new_state(&g, &set);
        for t in traces {
            let trace = Trace {
                function: g.name().to_string(),
                vertices: t.clone(),
            };
            replay_run(&mut state, &table, &g, &trace).unwrap();
        }
        (g, idx, state)
    }

    #[test]
    fn directions_annotate_decisions_and_lines() {
        let g = parse_cfg_text(GETCWD).unwrap();
        let directions = path_directions(&g, &[1, 2, 3, 4, 6, 8]).unwrap();
        assert_eq!(directions.len(), 6);
        assert_eq!(directions[2].vertex, 3);
        assert_eq!(directions[2].decision, Some(false));
        assert_eq!(directions[2].lines, vec![(12, "if (val != 0)".to_string())]);
        // The last block has no outgoing decision.
        assert_eq!(directions[5].decision, None);

        let mut out = String::new();
        render_directions(&mut out, &directions);
        assert!(out.contains("BB 3:(false)   12: if (val != 0)"));
        assert!(out.contains("BB 1:           7: int size = 100;"));
    }

    #[test]
    fn directions_of_single_vertex_path() {
        let g = ControlFlowGraph::new("t", [3], [], 3).unwrap();
        let directions = path_directions(&g, &[3]).unwrap();
        assert_eq!(
            directions,
            vec![ReportLine {
                vertex: 3,
                decision: None,
                lines: vec![],
            }]
        );
        let mut out = String::new();
        render_directions(&mut out, &directions);
        assert_eq!(out, "BB 3\n");
    }

    #[test]
    fn directions_without_metadata_list_vertices_only() {
        let g = parse_cfg_text(DIAMOND2).unwrap();
        let directions = path_directions(&g, &[1, 2, 3, 5]).unwrap();
        assert!(directions.iter().all(|d| d.lines.is_empty()));
        let mut out = String::new();
        render_directions(&mut out, &directions);
        assert_eq!(out, "BB 1\nBB 2\nBB 3\nBB 5\n");
    }

    #[test]
    fn directions_reject_non_paths() {
        let g = parse_cfg_text(GETCWD).unwrap();
        assert_eq!(
            path_directions(&g, &[1, 3]),
            Err(DirectionsError::NotAnEdge { src: 1, dst: 3 })
        );
        assert_eq!(
            path_directions(&g, &[99]),
            Err(DirectionsError::UnknownVertex { vertex: 99 })
        );
        assert_eq!(path_directions(&g, &[]), Err(DirectionsError::EmptyPath));
    }

    #[test]
    fn text_report_lists_uncovered_paths_in_index_order() {
        let (g, idx, state) = run_traces(
            GETCWD,
            &[vec![1, 2, 3, 5, 7], vec![1, 2, 3, 4, 6, 8, 2, 3, 5, 7]],
        );
        let report = text_report(&g, &idx, &state);
        assert!(report.starts_with("gnu_getcwd: covered 5/8\n"));
        let sections: Vec<&str> = report
            .lines()
            .filter(|l| l.ends_with("not covered:"))
            .collect();
        assert_eq!(
            sections,
            vec![
                "path 5 not covered:",
                "path 7 not covered:",
                "path 8 not covered:"
            ]
        );
    }

    #[test]
    fn text_report_when_fully_covered_is_header_only() {
        let (g, idx, state) = run_traces(
            GETCWD,
            &[
                vec![1, 2, 3, 5, 7],
                vec![1, 2, 3, 4, 6, 8, 2, 3, 4, 6, 8, 2, 3, 4, 6, 8, 2, 3, 5, 7],
            ],
        );
        assert_eq!(text_report(&g, &idx, &state), "gnu_getcwd: covered 8/8\n");
    }

    #[test]
    fn reports_for_aborted_functions() {
        let g = parse_cfg_text(GETCWD).unwrap();
        let aborted = prime_paths(&g, 1);
        let state = new_state(&g, &aborted);
        let idx = index_paths(&prime_paths(&g, DEFAULT_PATH_LIMIT)).unwrap();
        assert_eq!(
            text_report(&g, &idx, &state),
            "gnu_getcwd: aborted: path limit exceeded\n"
        );
        assert_eq!(
            machine_report(&idx, &state),
            "gnu_getcwd:summary:aborted\n"
        );
    }

    #[test]
    fn machine_report_bdd4_after_mcdc_rows() {
        let (_g, idx, state) = run_traces(
            BDD4,
            &[
                vec![1, 2, 4, 6],
                vec![1, 2, 4, 5],
                vec![1, 2, 3, 4, 6],
                vec![1, 2, 3, 5],
                vec![1, 5],
            ],
        );
        let report = machine_report(&idx, &state);
        let lines: Vec<&str> = report.lines().collect();
        assert_eq!(lines.len(), 1 + idx.count());
        assert_eq!(lines[0], "bdd4:summary:5/6");
        assert_eq!(lines[1], "bdd4:path:1:uncovered:1,2,3,4,5");
        assert!(lines[2..].iter().all(|l| l.contains(":covered:")));
    }

    #[test]
    fn machine_and_text_reports_agree_on_uncovered_paths() {
        let (g, idx, state) = run_traces(GETCWD, &[vec![1, 2, 3, 5, 7]]);
        let text = text_report(&g, &idx, &state);
        let machine = machine_report(&idx, &state);
        let from_text: Vec<String> = text
            .lines()
            .filter_map(|l| {
                l.strip_prefix("path ")
                    .and_then(|r| r.strip_suffix(" not covered:"))
                    .map(str::to_string)
            })
            .collect();
        let from_machine: Vec<String> = machine
            .lines()
            .filter(|l| l.contains(":uncovered:"))
            .map(|l| l.split(':').nth(2).unwrap().to_string())
            .collect();
        assert_eq!(from_text, from_machine);
    }

    #[test]
    fn machine_report_of_empty_path_set() {
        let g = ControlFlowGraph::new("f", [1], [], 1).unwrap();
        let idx = index_paths(&crate::enumerate::PrimePathSet {
            paths: vec![],
            limit_exceeded: false,
            limit: 1,
            insertions_counted: 0,
        })
        .unwrap();
        let state = CoverageState {
            function: "f".to_string(),
            checksum: g.canonical_checksum(),
            path_count: 0,
            aborted: false,
            covered: crate::Bitset::new(0),
            runs: 0,
        };
        assert_eq!(machine_report(&idx, &state), "f:summary:0/0\n");
    }
}
