#ifndef HISTCHECK_H
#define HISTCHECK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI entry point.
 */
typedef enum {
  HISTCHECK_STATUS_OK = 0,
  HISTCHECK_STATUS_NULL_POINTER = 1,
  HISTCHECK_STATUS_INVALID_UTF8 = 2,
  HISTCHECK_STATUS_PARSE_ERROR = 3,
  HISTCHECK_STATUS_INVALID_ARGUMENT = 4,
  HISTCHECK_STATUS_BUDGET_EXCEEDED = 5,
  HISTCHECK_STATUS_INTERNAL_ERROR = 6,
} HistcheckStatus;

/**
 * Opaque handle to a validated unitary + partition + initial state.
 */
typedef struct HistcheckBundle HistcheckBundle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a bundle JSON document.
 *
 * On success writes a new handle to `out`; release it with
 * `histcheck_bundle_free`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
HistcheckStatus histcheck_bundle_parse(const char *json, double tol, HistcheckBundle **out);

/**
 * Releases a bundle handle. Passing NULL is a no-op.
 *
 * # Safety
 * `handle` must come from `histcheck_bundle_parse` and not be freed twice.
 */
void histcheck_bundle_free(HistcheckBundle *handle);

/**
 * Overrides the history-count budget (m^k cap) of a handle.
 *
 * # Safety
 * `handle` must be a live bundle handle.
 */
HistcheckStatus histcheck_bundle_set_budget(HistcheckBundle *handle, uintptr_t budget);

/**
 * Exact medium decoherence at history length `k`; writes a JSON report.
 *
 * # Safety
 * `handle` must be a live bundle handle and `out_report` a valid pointer.
 */
HistcheckStatus histcheck_check_exact(const HistcheckBundle *handle,
                                      uintptr_t k,
                                      double tol,
                                      char **out_report);

/**
 * Approximate decoherence. `mode`: 0 = |D| condition, 1 = |Re D| variant,
 * 2 = strong condition (divided by the history count).
 *
 * # Safety
 * `handle` must be a live bundle handle and `out_report` a valid pointer.
 */
HistcheckStatus histcheck_check_approx(const HistcheckBundle *handle,
                                       uintptr_t k,
                                       double eps,
                                       int32_t mode,
                                       char **out_report);

/**
 * Iterated commutator condition up to horizon `n_max`.
 *
 * # Safety
 * `handle` must be a live bundle handle and `out_report` a valid pointer.
 */
HistcheckStatus histcheck_check_commutators(const HistcheckBundle *handle,
                                            uintptr_t n_max,
                                            double tol,
                                            char **out_report);

/**
 * Commutator norm bound 2 d^{3/2} sqrt(eps) up to horizon `n_max`.
 *
 * # Safety
 * `handle` must be a live bundle handle and `out_report` a valid pointer.
 */
HistcheckStatus histcheck_check_theorem2_bound(const HistcheckBundle *handle,
                                               uintptr_t n_max,
                                               double eps,
                                               char **out_report);

/**
 * Releases a report string returned by any check. NULL is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void histcheck_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HISTCHECK_H */
