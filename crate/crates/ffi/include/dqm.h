#ifndef DQM_H
#define DQM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DqmBoundary {
  DQM_BOUNDARY_PERIODIC = 0,
  DQM_BOUNDARY_HARD_WALL = 1,
} DqmBoundary;

typedef enum DqmStatus {
  DQM_STATUS_OK = 0,
  DQM_STATUS_NULL_POINTER = 1,
  DQM_STATUS_INVALID_INPUT = 2,
  DQM_STATUS_NUMERIC = 3,
  DQM_STATUS_TIMEOUT = 4,
  DQM_STATUS_CONFIG = 5,
  DQM_STATUS_DOMAIN = 6,
  DQM_STATUS_IO = 7,
  DQM_STATUS_BUFFER_TOO_SMALL = 8,
  DQM_STATUS_PANIC = 9,
} DqmStatus;

/**
 * Opaque wavefunction handle.
 */
typedef struct DqmWaveFunction DqmWaveFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *dqm_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the next failure.
 */
const char *dqm_last_error(void);

/**
 * Normalized Gaussian packet on a new lattice.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DqmStatus dqm_gaussian_new(double x_min,
                                double x_max,
                                size_t n_points,
                                enum DqmBoundary boundary,
                                double dt,
                                double x0,
                                double sigma,
                                double p0,
                                double hbar,
                                double mass,
                                struct DqmWaveFunction **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void dqm_wavefunction_free(struct DqmWaveFunction *handle);

/**
 * Number of lattice sites, 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t dqm_wavefunction_len(const struct DqmWaveFunction *handle);

/**
 * `∫|ψ|² dx`.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum DqmStatus dqm_wavefunction_norm(const struct DqmWaveFunction *handle, double *out);

/**
 * Evolves in place under the free Hamiltonian for `t_final` (rounded to whole steps).
 *
 * # Safety
 * `handle` must be a live handle.
 */
enum DqmStatus dqm_wavefunction_evolve_free(struct DqmWaveFunction *handle, double t_final);

/**
 * Copies `|ψ|²` into `buffer`, which must hold at least `dqm_wavefunction_len` values.
 *
 * # Safety
 * `buffer` must be valid for `len` writes.
 */
enum DqmStatus dqm_wavefunction_density(const struct DqmWaveFunction *handle,
                                        double *buffer,
                                        size_t len);

/**
 * Minimum of `δL_QM + δL_GR` over clock mass for a length `length`, in natural units
 * when `natural_units` is non-zero, else SI.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum DqmStatus dqm_minimum_measurable_length(double length,
                                             int32_t natural_units,
                                             double *out_min,
                                             double *out_mass);

/**
 * Monte Carlo mean collapse time in Planck times for a gap `delta_e` given in Planck energies.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum DqmStatus dqm_mean_collapse_time(double delta_e,
                                      double rho0,
                                      uint64_t trials,
                                      uint64_t seed,
                                      double *out_tau,
                                      double *out_stderr);

/**
 * Runs a JSON experiment config in memory and returns its summary as a JSON string,
 * to be released with [`dqm_string_free`]. Nothing is written to disk.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum DqmStatus dqm_run_config_json(const char *config_json, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void dqm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQM_H */
