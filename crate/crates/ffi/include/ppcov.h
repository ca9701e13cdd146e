/* C ABI for the ppcov prime path coverage toolkit. */

#ifndef PPCOV_H
#define PPCOV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every API call.
 */
typedef enum PpcovStatus {
  PPCOV_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PPCOV_STATUS_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  PPCOV_STATUS_INVALID_UTF8 = 2,
  /**
   * The CFG text did not parse.
   */
  PPCOV_STATUS_PARSE_ERROR = 3,
  /**
   * The CFG parsed but violates the well-formedness rules.
   */
  PPCOV_STATUS_INVALID_GRAPH = 4,
  /**
   * Prime path enumeration aborted at the path limit.
   */
  PPCOV_STATUS_LIMIT_EXCEEDED = 5,
  /**
   * The trace is not a valid entry-rooted walk of the graph.
   */
  PPCOV_STATUS_INVALID_TRACE = 6,
  /**
   * The coverage states belong to different graphs or enumerations.
   */
  PPCOV_STATUS_MERGE_CONFLICT = 7,
  /**
   * A path index was outside 1..=path_count.
   */
  PPCOV_STATUS_INDEX_OUT_OF_RANGE = 8,
  /**
   * The caller's buffer cannot hold the result; retry with the
   * reported length.
   */
  PPCOV_STATUS_BUFFER_TOO_SMALL = 9,
} PpcovStatus;

/**
 * A parsed, validated graph with its prime paths and instrumentation
 * tables. Opaque; create with [`ppcov_analysis_from_text`] and release
 * with [`ppcov_analysis_free`].
 */
typedef struct PpcovAnalysis PpcovAnalysis;

/**
 * A persistent covered-paths bitset bound to one analysis. Opaque.
 */
typedef struct PpcovCoverage PpcovCoverage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Detail text for the most recent failure on this thread, or null when no
 * failure has been recorded. The pointer stays valid until the next
 * failing call on the same thread.
 */
const char *ppcov_last_error_message(void);

/**
 * Parses CFG text and enumerates its prime paths under `path_limit`
 * (0 selects the default limit). On success stores a new handle in
 * `*out`; the caller owns it.
 *
 * # Safety
 * `cfg_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PpcovStatus ppcov_analysis_from_text(const char *cfg_text,
                                          uint64_t path_limit,
                                          struct PpcovAnalysis **out);

/**
 * Releases an analysis handle. Null is ignored.
 *
 * # Safety
 * `analysis` must be a pointer from [`ppcov_analysis_from_text`] that has
 * not been freed, or null.
 */
void ppcov_analysis_free(struct PpcovAnalysis *analysis);

/**
 * The function name of the analyzed graph. The pointer is owned by the
 * handle and valid for the handle's lifetime.
 *
 * # Safety
 * `analysis` must be a live handle.
 */
const char *ppcov_analysis_function_name(const struct PpcovAnalysis *analysis);

/**
 * Number of prime paths (0 for a null handle).
 *
 * # Safety
 * `analysis` must be a live handle or null.
 */
size_t ppcov_analysis_path_count(const struct PpcovAnalysis *analysis);

/**
 * The canonical checksum binding counts to this graph (0 for null).
 *
 * # Safety
 * `analysis` must be a live handle or null.
 */
uint64_t ppcov_analysis_checksum(const struct PpcovAnalysis *analysis);

/**
 * Copies the vertex sequence of path `index` (1-based) into `buf`. Always
 * stores the sequence length in `*out_len`; returns `BufferTooSmall`
 * without copying when `capacity` is insufficient.
 *
 * # Safety
 * `analysis` must be a live handle; `out_len` must be valid; `buf` must
 * point to at least `capacity` writable `uint32_t`s (it may be null when
 * `capacity` is 0).
 */
enum PpcovStatus ppcov_analysis_path(const struct PpcovAnalysis *analysis,
                                     size_t index,
                                     uint32_t *buf,
                                     size_t capacity,
                                     size_t *out_len);

/**
 * Creates a fresh all-zero coverage state bound to the analysis.
 *
 * # Safety
 * `analysis` must be a live handle and `out` a valid pointer.
 */
enum PpcovStatus ppcov_coverage_new(const struct PpcovAnalysis *analysis,
                                    struct PpcovCoverage **out);

/**
 * Releases a coverage handle. Null is ignored.
 *
 * # Safety
 * `coverage` must be a pointer from [`ppcov_coverage_new`] that has not
 * been freed, or null.
 */
void ppcov_coverage_free(struct PpcovCoverage *coverage);

/**
 * Replays one run: `vertices` must be an entry-rooted walk along the
 * graph's edges. An empty trace is a no-op.
 *
 * # Safety
 * `analysis` and `coverage` must be live handles; `vertices` must point to
 * `len` readable `uint32_t`s (it may be null when `len` is 0).
 */
enum PpcovStatus ppcov_coverage_replay(const struct PpcovAnalysis *analysis,
                                       struct PpcovCoverage *coverage,
                                       const uint32_t *vertices,
                                       size_t len);

/**
 * Folds `src` into `dst` (set union; run counts add). Both must come from
 * the same graph and enumeration.
 *
 * # Safety
 * Both handles must be live; `src` is not modified.
 */
enum PpcovStatus ppcov_coverage_merge(struct PpcovCoverage *dst, const struct PpcovCoverage *src);

/**
 * Number of covered paths (0 for null).
 *
 * # Safety
 * `coverage` must be a live handle or null.
 */
size_t ppcov_coverage_covered_count(const struct PpcovCoverage *coverage);

/**
 * Number of replayed runs folded into this state (0 for null).
 *
 * # Safety
 * `coverage` must be a live handle or null.
 */
uint64_t ppcov_coverage_runs(const struct PpcovCoverage *coverage);

/**
 * Whether path `index` (1-based) is covered; false for null handles or
 * out-of-range indices.
 *
 * # Safety
 * `coverage` must be a live handle or null.
 */
bool ppcov_coverage_is_covered(const struct PpcovCoverage *coverage, size_t index);

/**
 * Renders the human-readable coverage report into a newly allocated
 * string stored in `*out`; release it with [`ppcov_string_free`].
 *
 * # Safety
 * `analysis` and `coverage` must be live handles; `out` must be valid.
 */
enum PpcovStatus ppcov_report_text(const struct PpcovAnalysis *analysis,
                                   const struct PpcovCoverage *coverage,
                                   char **out);

/**
 * Renders the machine-readable report; see [`ppcov_report_text`].
 *
 * # Safety
 * `analysis` and `coverage` must be live handles; `out` must be valid.
 */
enum PpcovStatus ppcov_report_machine(const struct PpcovAnalysis *analysis,
                                      const struct PpcovCoverage *coverage,
                                      char **out);

/**
 * Releases a string returned by the report functions. Null is ignored.
 *
 * # Safety
 * `s` must be a pointer returned by this library's report functions that
 * has not been freed, or null.
 */
void ppcov_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPCOV_H */
