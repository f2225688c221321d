#ifndef MCCS_H
#define MCCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MccsStatus {
  MCCS_STATUS_OK = 0,
  MCCS_STATUS_NULL_POINTER = 1,
  MCCS_STATUS_INVALID_ARGUMENT = 2,
  MCCS_STATUS_INFEASIBLE = 3,
  /**
   * The exact value does not fit in a 64-bit fraction; use the string form.
   */
  MCCS_STATUS_OVERFLOW = 4,
  MCCS_STATUS_DECODE_FAILURE = 5,
  MCCS_STATUS_PANIC = 6,
} MccsStatus;

/**
 * Opaque problem instance `(N, K, M)`.
 */
typedef struct MccsInstance MccsInstance;

/**
 * Opaque placement vector `a_0..a_K`.
 */
typedef struct MccsPlacement MccsPlacement;

/**
 * Exact fraction `num / den` with `den > 0`, in lowest terms.
 */
typedef struct MccsFraction {
  int64_t num;
  int64_t den;
} MccsFraction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *mccs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mccs_version(void);

/**
 * Creates an instance with cache size `m_num / m_den` files.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum MccsStatus mccs_instance_new(size_t files,
                                  size_t users,
                                  int64_t m_num,
                                  int64_t m_den,
                                  struct MccsInstance **out);

/**
 * Like [`mccs_instance_new`] with the cache size as text (`"3/2"`, `"0.25"`).
 *
 * # Safety
 * `m` must be a NUL-terminated string; `out` must be writable.
 */
enum MccsStatus mccs_instance_parse(size_t files,
                                    size_t users,
                                    const char *m,
                                    struct MccsInstance **out);

/**
 * # Safety
 * `inst` must be NULL or a handle from this library not yet freed.
 */
void mccs_instance_free(struct MccsInstance *inst);

/**
 * Closed-form optimal placement for `inst`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MccsStatus mccs_optimal_placement(const struct MccsInstance *inst, struct MccsPlacement **out);

/**
 * Builds a placement from `len` fractions.
 *
 * # Safety
 * `entries` must point to `len` readable fractions; `out` must be writable.
 */
enum MccsStatus mccs_placement_new(const struct MccsFraction *entries,
                                   size_t len,
                                   struct MccsPlacement **out);

/**
 * # Safety
 * `p` must be NULL or a handle from this library not yet freed.
 */
void mccs_placement_free(struct MccsPlacement *p);

/**
 * Number of entries (`K + 1`), or 0 for NULL.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
size_t mccs_placement_len(const struct MccsPlacement *p);

/**
 * Entry `a_level`.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum MccsStatus mccs_placement_entry(const struct MccsPlacement *p,
                                     size_t level,
                                     struct MccsFraction *out);

/**
 * Exact expected rate of `p` under uniformly random demands.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MccsStatus mccs_expected_rate(const struct MccsInstance *inst,
                                   const struct MccsPlacement *p,
                                   struct MccsFraction *out);

/**
 * Rate for any demand with `distinct` different files.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MccsStatus mccs_per_demand_rate(const struct MccsInstance *inst,
                                     const struct MccsPlacement *p,
                                     size_t distinct,
                                     struct MccsFraction *out);

/**
 * Worst-case rate with `min(N, K)` distinct requests.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MccsStatus mccs_peak_rate(const struct MccsInstance *inst,
                               const struct MccsPlacement *p,
                               struct MccsFraction *out);

/**
 * Minimum expected rate over all placements.
 *
 * # Safety
 * `inst` must be live; `out` must be writable.
 */
enum MccsStatus mccs_minimum_expected_rate(const struct MccsInstance *inst,
                                           struct MccsFraction *out);

/**
 * Minimum expected rate as a `"p/q"` string; free with
 * [`mccs_string_free`]. Returns NULL on error.
 *
 * # Safety
 * `inst` must be NULL or live.
 */
char *mccs_minimum_expected_rate_string(const struct MccsInstance *inst);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void mccs_string_free(char *s);

/**
 * Solves the placement linear program exactly and reports whether its
 * optimum equals the closed-form value.
 *
 * # Safety
 * `inst` must be live; `out_equal` must be writable.
 */
enum MccsStatus mccs_verify_theorem(const struct MccsInstance *inst, bool *out_equal);

/**
 * Simulates coded delivery of `demand` (1-based file indices, `users`
 * entries) under the optimal placement with random contents from `seed`.
 * Writes the delivered load and whether every user decoded its file.
 *
 * # Safety
 * `inst` must be live; `demand` must point to `users` readable values;
 * outputs must be writable.
 */
enum MccsStatus mccs_simulate(const struct MccsInstance *inst,
                              const size_t *demand,
                              size_t users,
                              uint64_t seed,
                              struct MccsFraction *out_load,
                              bool *out_all_decoded);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCCS_H */
