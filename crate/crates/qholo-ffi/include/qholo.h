#ifndef QHOLO_H
#define QHOLO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_POINTER = 1,
  QH_STATUS_INVALID_ARGUMENT = 2,
  QH_STATUS_CONFIG = 3,
  QH_STATUS_NUMERICAL = 4,
  QH_STATUS_IO = 5,
  QH_STATUS_PANIC = 6,
} QhStatus;

typedef enum QhMethod {
  QH_METHOD_GAUSS_HERMITE = 0,
  QH_METHOD_MONTE_CARLO = 1,
} QhMethod;

// Run configuration handle.
typedef struct QhConfig QhConfig;

// Momentum distribution handle; values are row-major by p_perp.
typedef struct QhPmd QhPmd;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *qh_last_error_message(void);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QhStatus qh_config_new(struct QhConfig **out);

// Configuration parsed from a NUL-terminated TOML document.
//
// # Safety
// `text` must be a valid C string and `out` writable.
enum QhStatus qh_config_from_toml(const char *text, struct QhConfig **out);

// Set the driver state: displacement α and squeezing (r, θ).
//
// # Safety
// `cfg` must come from `qh_config_new` or `qh_config_from_toml`.
enum QhStatus qh_config_set_state(struct QhConfig *cfg,
                                  double alpha_re,
                                  double alpha_im,
                                  double r,
                                  double theta);

// Set the momentum grid.
//
// # Safety
// `cfg` must be a live configuration handle.
enum QhStatus qh_config_set_grid(struct QhConfig *cfg,
                                 double pz_min,
                                 double pz_max,
                                 size_t pz_steps,
                                 double pperp_min,
                                 double pperp_max,
                                 size_t pperp_steps);

// Set the ensemble method; `count` is the quadrature order or the
// Monte Carlo sample count.
//
// # Safety
// `cfg` must be a live configuration handle.
enum QhStatus qh_config_set_ensemble(struct QhConfig *cfg,
                                     enum QhMethod method,
                                     size_t count,
                                     uint64_t seed);

// # Safety
// `cfg` must be NULL or a handle not yet freed.
void qh_config_free(struct QhConfig *cfg);

// Ensemble-averaged distribution for `cfg`.
//
// # Safety
// `cfg` must be a live configuration handle and `out` writable.
enum QhStatus qh_pmd_compute(const struct QhConfig *cfg, struct QhPmd **out);

// Grid shape of a distribution.
//
// # Safety
// `pmd` must be live; `pz_steps` and `pperp_steps` writable.
enum QhStatus qh_pmd_dims(const struct QhPmd *pmd, size_t *pz_steps, size_t *pperp_steps);

// Copy the values into `buf`, which must hold exactly pz_steps·pperp_steps doubles.
//
// # Safety
// `pmd` must be live and `buf` valid for `len` writes.
enum QhStatus qh_pmd_values(const struct QhPmd *pmd, double *buf, size_t len);

// # Safety
// `pmd` must be NULL or a handle not yet freed.
void qh_pmd_free(struct QhPmd *pmd);

// Mean and variance of the photon number of a squeezed coherent state.
//
// # Safety
// `mean_n` and `var_n` must be writable.
enum QhStatus qh_photon_statistics(double alpha_re,
                                   double alpha_im,
                                   double r,
                                   double theta,
                                   double *mean_n,
                                   double *var_n);

// Quadrature noise reduction in dB for squeezing `r`.
//
// # Safety
// `db` must be writable.
enum QhStatus qh_squeezing_to_db(double r, double *db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHOLO_H */
