#ifndef RATBOUNDS_H
#define RATBOUNDS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Bound components, in the order used by [`rb_report_bound`].
 */
enum RbBound
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  RB_BOUND_THETA_LO = 0,
  RB_BOUND_THETA_HI = 1,
  RB_BOUND_EFFORT_LO = 2,
  RB_BOUND_EFFORT_HI = 3,
  RB_BOUND_NO_EFFORT_LO = 4,
  RB_BOUND_NO_EFFORT_HI = 5,
};
#ifndef __cplusplus
typedef int32_t RbBound;
#endif // __cplusplus

/**
 * Noise families accepted by [`rb_params_set_family`].
 */
enum RbFamily
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  RB_FAMILY_GAUSSIAN = 0,
  RB_FAMILY_LAPLACE = 1,
  RB_FAMILY_LOGISTIC = 2,
};
#ifndef __cplusplus
typedef int32_t RbFamily;
#endif // __cplusplus

/**
 * Status codes.
 */
enum RbStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  RB_STATUS_OK = 0,
  RB_STATUS_INVALID_ARGUMENT = 1,
  RB_STATUS_NULL_POINTER = 2,
  RB_STATUS_NUMERIC = 3,
  RB_STATUS_NOT_CONVERGED = 4,
  RB_STATUS_PANIC = 5,
};
#ifndef __cplusplus
typedef int32_t RbStatus;
#endif // __cplusplus

/**
 * Opaque model parameters.
 */
typedef struct RbParams RbParams;

/**
 * Opaque solver report.
 */
typedef struct RbReport RbReport;

/**
 * Extended real: `kind` is -1 for minus infinity, 1 for plus infinity and 0
 * for a finite `value`.
 */
typedef struct RbExtReal {
  int32_t kind;
  double value;
} RbExtReal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a Gaussian model with `n` followers. `sigma_l = 0` gives the
 * perfectly informed leader.
 *
 * # Safety
 * `out` must be null or valid for writing a pointer.
 */
RbStatus rb_params_new(size_t n, double sigma_f, double sigma_l, struct RbParams **out);

/**
 * Replaces the follower noise family (an [`RbFamily`] value). Non-Gaussian
 * families need `sigma_l = 0`.
 *
 * # Safety
 * `params` must be null or a live handle from [`rb_params_new`].
 */
RbStatus rb_params_set_family(struct RbParams *params, int32_t family, double scale);

/**
 * # Safety
 * `params` must be null or a handle from [`rb_params_new`] not yet freed.
 */
void rb_params_free(struct RbParams *params);

/**
 * Iterates the dominance bounds. `max_rounds = 0` and `tol <= 0` select the
 * defaults (500 rounds, 1e-9). A run that exhausts its rounds still returns
 * a report; check [`rb_report_converged`].
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writing a pointer.
 */
RbStatus rb_solve(const struct RbParams *params,
                  size_t max_rounds,
                  double tol,
                  struct RbReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`rb_solve`] not yet freed.
 */
void rb_report_free(struct RbReport *report);

/**
 * Whether the limit bounds coincide.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writing.
 */
RbStatus rb_report_unique(const struct RbReport *report, bool *out);

/**
 * Whether the iteration settled within its round budget.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writing.
 */
RbStatus rb_report_converged(const struct RbReport *report, bool *out);

/**
 * Number of rounds the iteration ran.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writing.
 */
RbStatus rb_report_rounds(const struct RbReport *report, size_t *out);

/**
 * One component of the final bounds, selected by an [`RbBound`] value.
 *
 * # Safety
 * `report` must be a live handle and `out` valid for writing.
 */
RbStatus rb_report_bound(const struct RbReport *report, int32_t which, struct RbExtReal *out);

/**
 * Critical follower noise for `n` followers with a perfectly informed leader.
 *
 * # Safety
 * `out` must be valid for writing.
 */
RbStatus rb_critical_sigma_f(size_t n, double *out);

/**
 * Leader noise above which play is unique when σ_F = gamma·σ_L.
 *
 * # Safety
 * `out` must be valid for writing.
 */
RbStatus rb_sufficient_sigma_l(double gamma, size_t n, double *out);

/**
 * Copies the last error message of this thread into `buf` (truncated and
 * NUL-terminated) and returns its full length in bytes, or 0 if there is
 * none. Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or valid for writing `len` bytes.
 */
size_t rb_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RATBOUNDS_H */
