/* Drives a full simulation through the C interface: generate, run,
 * inspect the outcome, read back the trace, and exercise an error path.
 * Exits non-zero at the first unexpected result. */

#include <stdio.h>
#include <string.h>

#include "gridscatter.h"

int main(void) {
    gs_config *config = NULL;
    if (gs_config_generate(8, 15, 3, &config) != GS_OK) return 1;
    if (gs_config_robot_count(config) != 8) return 2;

    uint32_t id = 0;
    int64_t x = 0, y = 0;
    if (gs_config_robot(config, 0, &id, &x, &y) != GS_OK) return 3;
    if (id != 1) return 4;

    gs_run_result *result = NULL;
    if (gs_run(config, "ssync:p=0.5,w=32", 10000, 42, 1, &result) != GS_OK) return 5;
    if (gs_result_status(result) != 0) return 6;
    if (gs_result_violations(result) != 0) return 7;
    if (!gs_result_matches_oracle(result)) return 8;

    gs_config *final_config = NULL;
    if (gs_result_final_config(result, &final_config) != GS_OK) return 9;
    if (!gs_config_is_final(final_config)) return 10;

    char *trace = NULL;
    if (gs_result_trace_string(result, &trace) != GS_OK) return 11;
    if (strncmp(trace, "# gridscatter-trace v1", 22) != 0) return 12;
    if (strstr(trace, "end status=converged") == NULL) return 13;
    gs_string_free(trace);

    /* an unknown strategy fails with a readable message */
    gs_run_result *bogus = NULL;
    if (gs_run(config, "warp", 100, 1, 1, &bogus) != GS_ERR_RUN) return 14;
    if (strlen(gs_last_error()) == 0) return 15;

    gs_config_free(final_config);
    gs_result_free(result);
    gs_config_free(config);
    printf("c abi smoke ok, version %s\n", gs_version());
    return 0;
}
