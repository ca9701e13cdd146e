#include <assert.h>
#include <stdio.h>
#include <string.h>
#include "ppcov.h"

int main(void) {
    const char *cfg =
        "graph gnu_getcwd\n"
        "vertex 1\nvertex 2\nvertex 3\nvertex 4\n"
        "vertex 5\nvertex 6\nvertex 7\nvertex 8\n"
        "edge 1 2\nedge 2 3\nedge 3 4 false\nedge 3 5 true\n"
        "edge 4 6\nedge 5 7\nedge 6 8\nedge 8 2\n"
        "entry 1\n";
    PpcovAnalysis *a = NULL;
    assert(ppcov_analysis_from_text(cfg, 0, &a) == PPCOV_STATUS_OK);
    assert(ppcov_analysis_path_count(a) == 8);
    assert(strcmp(ppcov_analysis_function_name(a), "gnu_getcwd") == 0);

    uint32_t buf[16];
    size_t len = 0;
    assert(ppcov_analysis_path(a, 1, buf, 16, &len) == PPCOV_STATUS_OK);
    assert(len == 6 && buf[0] == 1 && buf[5] == 8);

    PpcovCoverage *c = NULL;
    assert(ppcov_coverage_new(a, &c) == PPCOV_STATUS_OK);
    const uint32_t walk[] = {1, 2, 3, 4, 6, 8, 2, 3, 5, 7};
    assert(ppcov_coverage_replay(a, c, walk, 10) == PPCOV_STATUS_OK);
    assert(ppcov_coverage_covered_count(c) == 4);
    assert(ppcov_coverage_is_covered(c, 1));

    const uint32_t bad[] = {1, 3};
    assert(ppcov_coverage_replay(a, c, bad, 2) == PPCOV_STATUS_INVALID_TRACE);
    assert(ppcov_last_error_message() != NULL);

    char *report = NULL;
    assert(ppcov_report_machine(a, c, &report) == PPCOV_STATUS_OK);
    assert(strncmp(report, "gnu_getcwd:summary:4/8", 22) == 0);
    ppcov_string_free(report);

    ppcov_coverage_free(c);
    ppcov_analysis_free(a);
    puts("ffi smoke ok");
    return 0;
}
