/* C interface to the gridscatter simulator. Generated by cbindgen; do not edit. */

#ifndef GRIDSCATTER_H
#define GRIDSCATTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum gs_status {
  GS_OK = 0,
  GS_ERR_NULL_ARGUMENT = 1,
  GS_ERR_INVALID_ARGUMENT = 2,
  GS_ERR_PARSE = 3,
  GS_ERR_RUN = 4,
  GS_ERR_IO = 5,
  GS_ERR_INDEX = 6,
} gs_status;

/**
 * An initial or final robot placement. Opaque.
 */
typedef struct gs_config gs_config;

/**
 * A finished simulation run: outcome, records, and trace metadata. Opaque.
 */
typedef struct gs_run_result gs_run_result;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *gs_last_error(void);

/**
 * Samples `n` distinct positions uniformly from the square
 * `[-half_width, half_width]^2`, seeded.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum gs_status gs_config_generate(uint32_t n,
                                  int64_t half_width,
                                  uint64_t seed,
                                  struct gs_config **out);

/**
 * Parses the initial-configuration text format: `x y` per line,
 * `#` comments allowed.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` as in
 * [`gs_config_generate`].
 */
enum gs_status gs_config_parse(const char *text, struct gs_config **out);

/**
 * # Safety
 * `config` must come from this library and not have been freed.
 */
void gs_config_free(struct gs_config *config);

/**
 * Number of robots, or 0 for a null handle.
 *
 * # Safety
 * `config` must be a live handle or null.
 */
uint32_t gs_config_robot_count(const struct gs_config *config);

/**
 * Reads robot `index` (0-based, id order) into `id`, `x`, `y`; null
 * output pointers are skipped.
 *
 * # Safety
 * `config` must be a live handle; non-null outputs must be writable.
 */
enum gs_status gs_config_robot(const struct gs_config *config,
                               uint32_t index,
                               uint32_t *id,
                               int64_t *x,
                               int64_t *y);

/**
 * 1 if the placement already is the target formation, else 0.
 *
 * # Safety
 * `config` must be a live handle or null.
 */
int gs_config_is_final(const struct gs_config *config);

/**
 * Runs the protocol from `config` under the given strategy spec
 * (`fsync`, `ssync:p=0.5,w=32`, `roundrobin`, `scripted:<path>`).
 * `strict` non-zero halts on the first verifier violation.
 *
 * # Safety
 * `config` must be a live handle; `strategy` a NUL-terminated string;
 * `out` writable.
 */
enum gs_status gs_run(const struct gs_config *config,
                      const char *strategy,
                      uint32_t max_rounds,
                      uint64_t seed,
                      int strict,
                      struct gs_run_result **out);

/**
 * # Safety
 * `result` must come from this library and not have been freed.
 */
void gs_result_free(struct gs_run_result *result);

/**
 * 0 converged, 1 round cap hit, 2 halted on a violation, -1 null handle.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
int gs_result_status(const struct gs_run_result *result);

/**
 * Rounds before the quiescence confirmation for converged runs, total
 * rounds executed otherwise.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
uint32_t gs_result_rounds(const struct gs_run_result *result);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
uint64_t gs_result_moves(const struct gs_run_result *result);

/**
 * Total verifier violations recorded across all rounds.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
uint64_t gs_result_violations(const struct gs_run_result *result);

/**
 * 1 if the run's final placement equals the oracle's expected formation
 * anchored at the initial bounds.
 *
 * # Safety
 * `result` must be a live handle or null.
 */
int gs_result_matches_oracle(const struct gs_run_result *result);

/**
 * Copies the final placement into a fresh config handle.
 *
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum gs_status gs_result_final_config(const struct gs_run_result *result, struct gs_config **out);

/**
 * The run's trace as a NUL-terminated string owned by the library;
 * release it with [`gs_string_free`].
 *
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum gs_status gs_result_trace_string(const struct gs_run_result *result, char **out);

/**
 * Writes the run's trace to `path`.
 *
 * # Safety
 * `result` must be a live handle; `path` a NUL-terminated string.
 */
enum gs_status gs_result_write_trace(const struct gs_run_result *result, const char *path);

/**
 * # Safety
 * `s` must come from [`gs_result_trace_string`] and not have been freed.
 */
void gs_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDSCATTER_H */
