#ifndef MEMSCHED_H
#define MEMSCHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsStatus {
  MS_STATUS_OK = 0,
  /**
   * No schedule satisfies the (possibly relaxed) memory capacities.
   */
  MS_STATUS_INFEASIBLE = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_PARSE_ERROR = 3,
  MS_STATUS_RESOURCE_LIMIT = 4,
  MS_STATUS_IO = 5,
  MS_STATUS_INTERNAL = 6,
} MsStatus;

/**
 * Opaque instance handle.
 */
typedef struct MsInstance MsInstance;

/**
 * Opaque solution handle.
 */
typedef struct MsSolution MsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer stays
 * valid until the next memsched call on the same thread.
 */
const char *ms_last_error_message(void);

/**
 * Parses a JSON instance (`n`, `k`, `edges`, `costs`, `weights`, `capacities`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_instance_from_json(const char *json, struct MsInstance **out);

/**
 * # Safety
 * `instance` must come from `ms_instance_from_json` and not be freed twice.
 */
void ms_instance_free(struct MsInstance *instance);

/**
 * Number of jobs, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or a live handle.
 */
size_t ms_instance_jobs(const struct MsInstance *instance);

/**
 * Number of machines, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or a live handle.
 */
size_t ms_instance_machines(const struct MsInstance *instance);

/**
 * Optimal schedule within the memory capacities. Returns
 * `MS_STATUS_INFEASIBLE` and leaves `*out` null when none exists.
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum MsStatus ms_solve_exact(const struct MsInstance *instance, struct MsSolution **out);

/**
 * Schedule within `1 + eps` of the optimal makespan whose memory loads
 * exceed each capacity by at most `1 + eps`, with `eps = eps_num / eps_den`
 * in (0, 2].
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum MsStatus ms_solve_fptas(const struct MsInstance *instance,
                             uint64_t eps_num,
                             uint64_t eps_den,
                             struct MsSolution **out);

/**
 * # Safety
 * `solution` must come from a solve call and not be freed twice.
 */
void ms_solution_free(struct MsSolution *solution);

/**
 * # Safety
 * `solution` must be null or a live handle.
 */
uint64_t ms_solution_makespan(const struct MsSolution *solution);

/**
 * Whether every memory load is within its capacity (always true for exact
 * solutions).
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
bool ms_solution_feasible(const struct MsSolution *solution);

/**
 * Copies the 0-based machine of every job into `out[0..n]`.
 *
 * # Safety
 * `solution` must be a live handle and `out` valid for `len` writes.
 */
enum MsStatus ms_solution_assignment(const struct MsSolution *solution, size_t *out, size_t len);

/**
 * Copies the `k` machine loads into `out`.
 *
 * # Safety
 * `solution` must be a live handle and `out` valid for `len` writes.
 */
enum MsStatus ms_solution_loads(const struct MsSolution *solution, uint64_t *out, size_t len);

/**
 * Copies the `k` memory loads into `out`.
 *
 * # Safety
 * `solution` must be a live handle and `out` valid for `len` writes.
 */
enum MsStatus ms_solution_mems(const struct MsSolution *solution, uint64_t *out, size_t len);

/**
 * The solution as a JSON string, released with `ms_string_free`; null on
 * failure.
 *
 * # Safety
 * `solution` must be null or a live handle.
 */
char *ms_solution_to_json(const struct MsSolution *solution);

/**
 * # Safety
 * `s` must come from `ms_solution_to_json` and not be freed twice.
 */
void ms_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMSCHED_H */
