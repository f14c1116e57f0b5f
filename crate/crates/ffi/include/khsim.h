#ifndef KHSIM_H
#define KHSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KhsimStatus {
  KHSIM_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  KHSIM_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  KHSIM_STATUS_INVALID_UTF8 = 2,
  /**
   * Netlist, configuration or preset rejected.
   */
  KHSIM_STATUS_INVALID_INPUT = 3,
  /**
   * The integration or the analysis failed numerically.
   */
  KHSIM_STATUS_NUMERICAL = 4,
  /**
   * Index or buffer size out of range.
   */
  KHSIM_STATUS_OUT_OF_RANGE = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  KHSIM_STATUS_INTERNAL = 6,
} KhsimStatus;

/**
 * Which trace [`khsim_simulation_trace`] copies.
 */
typedef enum KhsimTrace {
  /**
   * Sample times (s); `dof` is ignored.
   */
  KHSIM_TRACE_TIME = 0,
  /**
   * Normalized charge of `dof`.
   */
  KHSIM_TRACE_CHARGE = 1,
  /**
   * Normalized flux of `dof`.
   */
  KHSIM_TRACE_FLUX = 2,
  /**
   * Energy (J); `dof` is ignored.
   */
  KHSIM_TRACE_ENERGY = 3,
} KhsimTrace;

/**
 * A finished run: traces plus synchronization report.
 */
typedef struct KhsimSimulation KhsimSimulation;

/**
 * Synchronization metrics of the compared pair.
 */
typedef struct KhsimSyncReport {
  /**
   * Start of strict synchronization (s); infinity if never reached.
   */
  double transient_time;
  /**
   * Start of phase locking (s); infinity if never reached.
   */
  double lock_time;
  double phase_lag;
  double amplitude_ratio;
  double steady_amplitude_a;
  double steady_amplitude_b;
  double decay_rate;
  bool strict_sync;
  bool phase_locked;
} KhsimSyncReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *khsim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *khsim_version(void);

/**
 * Parses a value with an optional engineering suffix (`"1.01p"`).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KhsimStatus khsim_parse_value(const char *text, double *out);

/**
 * Simulates a netlist with an INI configuration.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be a valid pointer. On
 * success `*out` owns a handle to release with [`khsim_simulation_free`].
 */
enum KhsimStatus khsim_run(const char *netlist, const char *config, struct KhsimSimulation **out);

/**
 * Simulates a built-in scenario such as `"regime1"`.
 *
 * # Safety
 * `name` must be NUL-terminated; `out` must be a valid pointer.
 */
enum KhsimStatus khsim_run_preset(const char *name, struct KhsimSimulation **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `sim` must come from this library and must not be used afterwards.
 */
void khsim_simulation_free(struct KhsimSimulation *sim);

/**
 * Number of samples and of degrees of freedom.
 *
 * # Safety
 * `sim` must be a live handle; the out pointers must be valid.
 */
enum KhsimStatus khsim_simulation_shape(const struct KhsimSimulation *sim,
                                        size_t *samples,
                                        size_t *dofs);

/**
 * Copies a trace into `buf`, which must hold at least `len` samples.
 *
 * # Safety
 * `sim` must be a live handle, `trace` one of the [`KhsimTrace`] values and
 * `buf` valid for `len` writes.
 */
enum KhsimStatus khsim_simulation_trace(const struct KhsimSimulation *sim,
                                        enum KhsimTrace trace,
                                        size_t dof,
                                        double *buf,
                                        size_t len);

/**
 * Synchronization metrics of the run.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid.
 */
enum KhsimStatus khsim_simulation_sync(const struct KhsimSimulation *sim,
                                       struct KhsimSyncReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KHSIM_H */
