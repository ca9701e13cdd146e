//! C ABI for the ppcov prime path coverage toolkit.
//!
//! The surface is handle-based: parse a CFG into an opaque
//! [`PpcovAnalysis`] (prime paths enumerated and instrumentation tables
//! built up front), create [`PpcovCoverage`] states bound to it, replay
//! vertex traces, and render reports. All functions return a
//! [`PpcovStatus`]; a human-readable detail for the most recent failure on
//! the current thread is available from [`ppcov_last_error_message`].
//!
//! Handles are not thread-safe; callers must not share one handle across
//! threads without their own synchronization. Strings returned as `char*`
//! are owned by the caller and must be released with [`ppcov_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use ppcov::cfg::parse_cfg_text;
use ppcov::coverage::{
    coverage_summary, merge, new_state, replay_run, CoverageState, Summary, Trace,
};
use ppcov::enumerate::prime_paths;
use ppcov::instrument::{index_paths, InstrumentationTable, PathIndex, WordSize};
use ppcov::report::{machine_report, text_report};
use ppcov::ControlFlowGraph;

/// Result code of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpcovStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The CFG text did not parse.
    ParseError = 3,
    /// The CFG parsed but violates the well-formedness rules.
    InvalidGraph = 4,
    /// Prime path enumeration aborted at the path limit.
    LimitExceeded = 5,
    /// The trace is not a valid entry-rooted walk of the graph.
    InvalidTrace = 6,
    /// The coverage states belong to different graphs or enumerations.
    MergeConflict = 7,
    /// A path index was outside 1..=path_count.
    IndexOutOfRange = 8,
    /// The caller's buffer cannot hold the result; retry with the
    /// reported length.
    BufferTooSmall = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: PpcovStatus, message: impl std::fmt::Display) -> PpcovStatus {
    let text = CString::new(message.to_string())
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

/// Detail text for the most recent failure on this thread, or null when no
/// failure has been recorded. The pointer stays valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ppcov_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// A parsed, validated graph with its prime paths and instrumentation
/// tables. Opaque; create with [`ppcov_analysis_from_text`] and release
/// with [`ppcov_analysis_free`].
pub struct PpcovAnalysis {
    graph: ControlFlowGraph,
    index: PathIndex,
    table: InstrumentationTable,
    name: CString,
    checksum: u64,
}

/// A persistent covered-paths bitset bound to one analysis. Opaque.
pub struct PpcovCoverage {
    state: CoverageState,
}

/// Parses CFG text and enumerates its prime paths under `path_limit`
/// (0 selects the default limit). On success stores a new handle in
/// `*out`; the caller owns it.
///
/// # Safety
/// `cfg_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ppcov_analysis_from_text(
    cfg_text: *const c_char,
    path_limit: u64,
    out: *mut *mut PpcovAnalysis,
) -> PpcovStatus {
    if cfg_text.is_null() || out.is_null() {
        return fail(PpcovStatus::NullArgument, "null argument");
    }
    let text = match CStr::from_ptr(cfg_text).to_str() {
        Ok(text) => text,
        Err(e) => return fail(PpcovStatus::InvalidUtf8, e),
    };
    let graph = match parse_cfg_text(text) {
        Ok(graph) => graph,
        Err(e) => return fail(PpcovStatus::ParseError, e),
    };
    let violations = graph.validate();
    if !violations.is_empty() {
        let listing: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return fail(PpcovStatus::InvalidGraph, listing.join("; "));
    }
    let limit = if path_limit == 0 {
        ppcov::DEFAULT_PATH_LIMIT
    } else {
        path_limit
    };
    let set = prime_paths(&graph, limit);
    if set.limit_exceeded {
        return fail(
            PpcovStatus::LimitExceeded,
            format!(
                "path limit exceeded ({} insertions, limit {})",
                set.insertions_counted, set.limit
            ),
        );
    }
    let index = index_paths(&set).expect("not aborted");
    let table = InstrumentationTable::build(&graph, &index, WordSize::DEFAULT);
    let name = CString::new(graph.name()).expect("graph names contain no NUL");
    let checksum = graph.canonical_checksum();
    let analysis = Box::new(PpcovAnalysis {
        graph,
        index,
        table,
        name,
        checksum,
    });
    *out = Box::into_raw(analysis);
    PpcovStatus::Ok
}

/// Releases an analysis handle. Null is ignored.
///
/// # Safety
/// `analysis` must be a pointer from [`ppcov_analysis_from_text`] that has
/// not been freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_analysis_free(analysis: *mut PpcovAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// The function name of the analyzed graph. The pointer is owned by the
/// handle and valid for the handle's lifetime.
///
/// # Safety
/// `analysis` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ppcov_analysis_function_name(
    analysis: *const PpcovAnalysis,
) -> *const c_char {
    match analysis.as_ref() {
        Some(a) => a.name.as_ptr(),
        None => ptr::null(),
    }
}

/// Number of prime paths (0 for a null handle).
///
/// # Safety
/// `analysis` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_analysis_path_count(analysis: *const PpcovAnalysis) -> usize {
    analysis.as_ref().map_or(0, |a| a.index.count())
}

/// The canonical checksum binding counts to this graph (0 for null).
///
/// # Safety
/// `analysis` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_analysis_checksum(analysis: *const PpcovAnalysis) -> u64 {
    analysis.as_ref().map_or(0, |a| a.checksum)
}

/// Copies the vertex sequence of path `index` (1-based) into `buf`. Always
/// stores the sequence length in `*out_len`; returns `BufferTooSmall`
/// without copying when `capacity` is insufficient.
///
/// # Safety
/// `analysis` must be a live handle; `out_len` must be valid; `buf` must
/// point to at least `capacity` writable `uint32_t`s (it may be null when
/// `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn ppcov_analysis_path(
    analysis: *const PpcovAnalysis,
    index: usize,
    buf: *mut u32,
    capacity: usize,
    out_len: *mut usize,
) -> PpcovStatus {
    let Some(a) = analysis.as_ref() else {
        return fail(PpcovStatus::NullArgument, "null analysis");
    };
    if out_len.is_null() {
        return fail(PpcovStatus::NullArgument, "null out_len");
    }
    if index == 0 || index > a.index.count() {
        return fail(
            PpcovStatus::IndexOutOfRange,
            format!("path index {index} not in 1..={}", a.index.count()),
        );
    }
    let path = a.index.path(index);
    *out_len = path.len();
    if capacity < path.len() {
        return fail(
            PpcovStatus::BufferTooSmall,
            format!("need {} entries, have {capacity}", path.len()),
        );
    }
    if buf.is_null() {
        return fail(PpcovStatus::NullArgument, "null buffer");
    }
    ptr::copy_nonoverlapping(path.as_ptr(), buf, path.len());
    PpcovStatus::Ok
}

/// Creates a fresh all-zero coverage state bound to the analysis.
///
/// # Safety
/// `analysis` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_new(
    analysis: *const PpcovAnalysis,
    out: *mut *mut PpcovCoverage,
) -> PpcovStatus {
    let Some(a) = analysis.as_ref() else {
        return fail(PpcovStatus::NullArgument, "null analysis");
    };
    if out.is_null() {
        return fail(PpcovStatus::NullArgument, "null out");
    }
    let set = ppcov::PrimePathSet {
        paths: a.index.paths().to_vec(),
        limit_exceeded: false,
        limit: ppcov::DEFAULT_PATH_LIMIT,
        insertions_counted: 0,
    };
    let state = new_state(&a.graph, &set);
    *out = Box::into_raw(Box::new(PpcovCoverage { state }));
    PpcovStatus::Ok
}

/// Releases a coverage handle. Null is ignored.
///
/// # Safety
/// `coverage` must be a pointer from [`ppcov_coverage_new`] that has not
/// been freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_free(coverage: *mut PpcovCoverage) {
    if !coverage.is_null() {
        drop(Box::from_raw(coverage));
    }
}

/// Replays one run: `vertices` must be an entry-rooted walk along the
/// graph's edges. An empty trace is a no-op.
///
/// # Safety
/// `analysis` and `coverage` must be live handles; `vertices` must point to
/// `len` readable `uint32_t`s (it may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_replay(
    analysis: *const PpcovAnalysis,
    coverage: *mut PpcovCoverage,
    vertices: *const u32,
    len: usize,
) -> PpcovStatus {
    let Some(a) = analysis.as_ref() else {
        return fail(PpcovStatus::NullArgument, "null analysis");
    };
    let Some(c) = coverage.as_mut() else {
        return fail(PpcovStatus::NullArgument, "null coverage");
    };
    if vertices.is_null() && len > 0 {
        return fail(PpcovStatus::NullArgument, "null vertices");
    }
    let walk = if len == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(vertices, len)
    };
    let trace = Trace {
        function: a.graph.name().to_string(),
        vertices: walk.to_vec(),
    };
    match replay_run(&mut c.state, &a.table, &a.graph, &trace) {
        Ok(()) => PpcovStatus::Ok,
        Err(e @ ppcov::coverage::ReplayError::ChecksumMismatch)
        | Err(e @ ppcov::coverage::ReplayError::PathCountMismatch { .. }) => {
            fail(PpcovStatus::MergeConflict, e)
        }
        Err(e) => fail(PpcovStatus::InvalidTrace, e),
    }
}

/// Folds `src` into `dst` (set union; run counts add). Both must come from
/// the same graph and enumeration.
///
/// # Safety
/// Both handles must be live; `src` is not modified.
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_merge(
    dst: *mut PpcovCoverage,
    src: *const PpcovCoverage,
) -> PpcovStatus {
    let Some(d) = dst.as_mut() else {
        return fail(PpcovStatus::NullArgument, "null dst");
    };
    let Some(s) = src.as_ref() else {
        return fail(PpcovStatus::NullArgument, "null src");
    };
    match merge(&d.state, &s.state) {
        Ok(merged) => {
            d.state = merged;
            PpcovStatus::Ok
        }
        Err(e) => fail(PpcovStatus::MergeConflict, e),
    }
}

/// Number of covered paths (0 for null).
///
/// # Safety
/// `coverage` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_covered_count(coverage: *const PpcovCoverage) -> usize {
    coverage.as_ref().map_or(0, |c| match coverage_summary(&c.state) {
        Summary::Counts { covered, .. } => covered,
        Summary::Aborted => 0,
    })
}

/// Number of replayed runs folded into this state (0 for null).
///
/// # Safety
/// `coverage` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_runs(coverage: *const PpcovCoverage) -> u64 {
    coverage.as_ref().map_or(0, |c| c.state.runs)
}

/// Whether path `index` (1-based) is covered; false for null handles or
/// out-of-range indices.
///
/// # Safety
/// `coverage` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_coverage_is_covered(
    coverage: *const PpcovCoverage,
    index: usize,
) -> bool {
    coverage.as_ref().is_some_and(|c| c.state.covered.contains(index))
}

unsafe fn render_report(
    analysis: *const PpcovAnalysis,
    coverage: *const PpcovCoverage,
    out: *mut *mut c_char,
    machine: bool,
) -> PpcovStatus {
    let Some(a) = analysis.as_ref() else {
        return fail(PpcovStatus::NullArgument, "null analysis");
    };
    let Some(c) = coverage.as_ref() else {
        return fail(PpcovStatus::NullArgument, "null coverage");
    };
    if out.is_null() {
        return fail(PpcovStatus::NullArgument, "null out");
    }
    if c.state.checksum != a.checksum || c.state.path_count != a.index.count() {
        return fail(
            PpcovStatus::MergeConflict,
            "coverage state belongs to a different analysis",
        );
    }
    let text = if machine {
        machine_report(&a.index, &c.state)
    } else {
        text_report(&a.graph, &a.index, &c.state)
    };
    match CString::new(text) {
        Ok(text) => {
            *out = text.into_raw();
            PpcovStatus::Ok
        }
        Err(e) => fail(PpcovStatus::InvalidUtf8, e),
    }
}

/// Renders the human-readable coverage report into a newly allocated
/// string stored in `*out`; release it with [`ppcov_string_free`].
///
/// # Safety
/// `analysis` and `coverage` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ppcov_report_text(
    analysis: *const PpcovAnalysis,
    coverage: *const PpcovCoverage,
    out: *mut *mut c_char,
) -> PpcovStatus {
    render_report(analysis, coverage, out, false)
}

/// Renders the machine-readable report; see [`ppcov_report_text`].
///
/// # Safety
/// `analysis` and `coverage` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ppcov_report_machine(
    analysis: *const PpcovAnalysis,
    coverage: *const PpcovCoverage,
    out: *mut *mut c_char,
) -> PpcovStatus {
    render_report(analysis, coverage, out, true)
}

/// Releases a string returned by the report functions. Null is ignored.
///
/// # Safety
/// `s` must be a pointer returned by this library's report functions that
/// has not been freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ppcov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
