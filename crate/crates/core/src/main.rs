//! `ppcov` — prime path coverage toolkit.
//!
//! Subcommands: `paths` (enumerate prime paths), `tables` (R/D/I sets and
//! bitmasks), `plan` (the elided instrumentation pseudo-source), `run`
//! (replay traces into a counts file), `report` (coverage report from a
//! counts file), and `merge` (combine counts files).
//!
//! Exit status: 0 on success, 1 on input or usage errors, 2 when prime path
//! enumeration aborts at the path limit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ppcov::cfg::{parse_cfg_text, ControlFlowGraph};
use ppcov::coverage::{
    coverage_summary, load_counts, merge, new_state, parse_trace_file, replay_run, save_counts,
    CoverageState, Summary,
};
use ppcov::enumerate::{prime_paths, PrimePathSet, DEFAULT_PATH_LIMIT};
use ppcov::instrument::{
    build_plan, index_paths, render_pseudo_source, render_tables, InstrumentationTable, PathIndex,
    WordSize,
};
use ppcov::report::{machine_report, text_report};

#[derive(Parser)]
#[command(name = "ppcov", version, about = "Prime path coverage toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// List the prime paths of a control flow graph
    Paths {
        /// CFG file
        cfg: PathBuf,
        /// Abort enumeration after this many suffix tree insertions
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        path_limit: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Write to a file instead of standard output
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dump the record/discard/initialize tables and bitmasks
    Tables {
        cfg: PathBuf,
        /// Bits per instrumentation bin (8, 16, 32 or 64)
        #[arg(long, default_value_t = 64)]
        word_size: u32,
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        path_limit: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render the elided per-block instrumentation plan
    Plan {
        cfg: PathBuf,
        #[arg(long, default_value_t = 64)]
        word_size: u32,
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        path_limit: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay trace files and update a counts file
    Run {
        cfg: PathBuf,
        /// Trace files, one run per line: `<function>: v1 v2 ...`
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Counts file to update (created when missing)
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        path_limit: u64,
    },
    /// Report coverage recorded in a counts file
    Report {
        cfg: PathBuf,
        #[arg(long)]
        counts: PathBuf,
        /// Condensed line-oriented output for machine processing
        #[arg(long)]
        machine: bool,
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        path_limit: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Merge counts files into one
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not usage errors.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("ppcov: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Paths {
            cfg,
            path_limit,
            format,
            output,
        } => cmd_paths(&cfg, path_limit, format, output.as_deref()),
        Command::Tables {
            cfg,
            word_size,
            path_limit,
            output,
        } => cmd_tables(&cfg, word_size, path_limit, output.as_deref()),
        Command::Plan {
            cfg,
            word_size,
            path_limit,
            output,
        } => cmd_plan(&cfg, word_size, path_limit, output.as_deref()),
        Command::Run {
            cfg,
            traces,
            counts,
            path_limit,
        } => cmd_run(&cfg, &traces, &counts, path_limit),
        Command::Report {
            cfg,
            counts,
            machine,
            path_limit,
            output,
        } => cmd_report(&cfg, &counts, machine, path_limit, output.as_deref()),
        Command::Merge { inputs, output } => cmd_merge(&inputs, &output),
    }
}

fn load_graph(path: &Path) -> Result<ControlFlowGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let graph =
        parse_cfg_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    let violations = graph.validate();
    if !violations.is_empty() {
        let listing: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        bail!(
            "{} is not a valid CFG:\n{}",
            path.display(),
            listing.join("\n")
        );
    }
    Ok(graph)
}

fn enumerate(g: &ControlFlowGraph, limit: u64) -> Result<PrimePathSet> {
    if limit == 0 {
        bail!("--path-limit must be at least 1");
    }
    Ok(prime_paths(g, limit))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn abort_notice(g: &ControlFlowGraph, set: &PrimePathSet, format: Format) -> String {
    match format {
        Format::Text => format!(
            "{}: aborted: path limit exceeded ({} insertions, limit {})\n",
            g.name(),
            set.insertions_counted,
            set.limit
        ),
        Format::Machine => format!("{}:aborted\n", g.name()),
    }
}

fn cmd_paths(
    cfg: &Path,
    path_limit: u64,
    format: Format,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let g = load_graph(cfg)?;
    let set = enumerate(&g, path_limit)?;
    if set.limit_exceeded {
        emit(output, &abort_notice(&g, &set, format))?;
        return Ok(ExitCode::from(2));
    }
    let mut text = String::new();
    match format {
        Format::Text => {
            for path in &set.paths {
                let rendered: Vec<String> = path.iter().map(u32::to_string).collect();
                text.push_str(&rendered.join(" "));
                text.push('\n');
            }
        }
        Format::Machine => {
            text.push_str(&format!("{}:paths:{}\n", g.name(), set.paths.len()));
            for (i, path) in set.paths.iter().enumerate() {
                let rendered: Vec<String> = path.iter().map(u32::to_string).collect();
                text.push_str(&format!("{}:path:{}:{}\n", g.name(), i + 1, rendered.join(",")));
            }
        }
    }
    emit(output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn build_index(
    g: &ControlFlowGraph,
    word_size: u32,
    path_limit: u64,
) -> Result<Option<(PathIndex, InstrumentationTable)>> {
    let set = enumerate(g, path_limit)?;
    if set.limit_exceeded {
        eprintln!(
            "ppcov: {}: aborted: path limit exceeded ({} insertions, limit {})",
            g.name(),
            set.insertions_counted,
            set.limit
        );
        return Ok(None);
    }
    let idx = index_paths(&set).expect("not aborted");
    let w = WordSize::new(word_size)?;
    let table = InstrumentationTable::build(g, &idx, w);
    Ok(Some((idx, table)))
}

fn cmd_tables(
    cfg: &Path,
    word_size: u32,
    path_limit: u64,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let g = load_graph(cfg)?;
    let Some((idx, table)) = build_index(&g, word_size, path_limit)? else {
        return Ok(ExitCode::from(2));
    };
    emit(output, &render_tables(&g, &idx, &table))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(
    cfg: &Path,
    word_size: u32,
    path_limit: u64,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let g = load_graph(cfg)?;
    let Some((_, table)) = build_index(&g, word_size, path_limit)? else {
        return Ok(ExitCode::from(2));
    };
    let plan = build_plan(&g, &table);
    emit(output, &render_pseudo_source(&plan, &g))?;
    Ok(ExitCode::SUCCESS)
}

/// Replaces or inserts this function's record among the loaded states,
/// keeping records of other functions untouched.
fn upsert_state(mut all: Vec<CoverageState>, state: CoverageState) -> Vec<CoverageState> {
    match all.iter_mut().find(|s| s.function == state.function) {
        Some(slot) => *slot = state,
        None => all.push(state),
    }
    all
}

fn cmd_run(cfg: &Path, trace_files: &[PathBuf], counts: &Path, path_limit: u64) -> Result<ExitCode> {
    let g = load_graph(cfg)?;
    let set = enumerate(&g, path_limit)?;
    let existing: Vec<CoverageState> = if counts.exists() {
        load_counts(counts).with_context(|| format!("loading {}", counts.display()))?
    } else {
        Vec::new()
    };
    let previous = existing.iter().find(|s| s.function == g.name()).cloned();

    let mut session = new_state(&g, &set);
    if set.limit_exceeded {
        // Record the abort so reporting tools do not retry the enumeration.
        let merged = match previous {
            Some(ref old) => merge(old, &session)
                .map_err(|e| anyhow!("{}: existing counts conflict: {e}", counts.display()))?,
            None => session,
        };
        save_counts(&upsert_state(existing, merged), counts)
            .with_context(|| format!("writing {}", counts.display()))?;
        eprintln!(
            "ppcov: {}: aborted: path limit exceeded ({} insertions, limit {})",
            g.name(),
            set.insertions_counted,
            set.limit
        );
        return Ok(ExitCode::from(2));
    }

    let idx = index_paths(&set).expect("not aborted");
    let table = InstrumentationTable::build(&g, &idx, WordSize::DEFAULT);
    let mut skipped = 0usize;
    for file in trace_files {
        let text =
            fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
        let traces = parse_trace_file(&text)
            .map_err(|e| anyhow!("{}: {e}", file.display()))?;
        for (line, trace) in traces {
            if trace.function != g.name() {
                skipped += 1;
                continue;
            }
            replay_run(&mut session, &table, &g, &trace)
                .map_err(|e| anyhow!("{}: line {line}: {e}", file.display()))?;
        }
    }
    if skipped > 0 {
        eprintln!("ppcov: skipped {skipped} trace(s) for other functions");
    }

    let merged = match previous {
        Some(ref old) => merge(old, &session)
            .map_err(|e| anyhow!("{}: existing counts conflict: {e}", counts.display()))?,
        None => session,
    };
    let summary = coverage_summary(&merged);
    save_counts(&upsert_state(existing, merged), counts)
        .with_context(|| format!("writing {}", counts.display()))?;
    if let Summary::Counts { covered, total } = summary {
        println!("{}: {covered}/{total}", g.name());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(
    cfg: &Path,
    counts: &Path,
    machine: bool,
    path_limit: u64,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let g = load_graph(cfg)?;
    let states =
        load_counts(counts).with_context(|| format!("loading {}", counts.display()))?;
    let state = states
        .into_iter()
        .find(|s| s.function == g.name())
        .ok_or_else(|| {
            anyhow!(
                "{}: no record for function `{}`",
                counts.display(),
                g.name()
            )
        })?;
    if state.checksum != g.canonical_checksum() {
        bail!("{}: cfg checksum mismatch", counts.display());
    }
    let set = enumerate(&g, path_limit)?;
    if state.aborted != set.limit_exceeded {
        bail!(
            "{}: counts were recorded with a different path limit (aborted={} vs {})",
            counts.display(),
            state.aborted,
            set.limit_exceeded
        );
    }
    let idx = if state.aborted {
        // The paths are not recomputed for aborted functions.
        index_paths(&PrimePathSet {
            paths: vec![],
            limit_exceeded: false,
            limit: set.limit,
            insertions_counted: 0,
        })
        .expect("empty set")
    } else {
        let idx = index_paths(&set).expect("not aborted");
        if idx.count() != state.path_count {
            bail!(
                "{}: path count mismatch (counts {}, graph {})",
                counts.display(),
                state.path_count,
                idx.count()
            );
        }
        idx
    };
    let text = if machine {
        machine_report(&idx, &state)
    } else {
        text_report(&g, &idx, &state)
    };
    emit(output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_merge(inputs: &[PathBuf], output: &Path) -> Result<ExitCode> {
    let mut merged: Vec<CoverageState> = Vec::new();
    for input in inputs {
        let states =
            load_counts(input).with_context(|| format!("loading {}", input.display()))?;
        for state in states {
            match merged.iter_mut().find(|s| s.function == state.function) {
                Some(slot) => {
                    *slot = merge(slot, &state)
                        .map_err(|e| anyhow!("{}: {e}", input.display()))?;
                }
                None => merged.push(state),
            }
        }
    }
    merged.sort_by(|a, b| a.function.cmp(&b.function));
    save_counts(&merged, output).with_context(|| format!("writing {}", output.display()))?;
    Ok(ExitCode::SUCCESS)
}
