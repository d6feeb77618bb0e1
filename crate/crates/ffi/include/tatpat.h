#ifndef TATPAT_H
#define TATPAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which field of a configuration to copy out.
typedef enum TpQuantity {
  TP_QUANTITY_SPEED = 0,
  TP_QUANTITY_SOURCE = 1,
  // `c⁻² f`
  TP_QUANTITY_Q = 2,
} TpQuantity;

// Result of every fallible call.
typedef enum TpStatus {
  TP_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or a buffer of the wrong length.
  TP_STATUS_INVALID_ARGUMENT = 1,
  // Inputs violate a documented precondition.
  TP_STATUS_VALIDATION = 2,
  // Non-contraction, degenerate weights, ill-conditioning or a non-physical estimate.
  TP_STATUS_NUMERICAL_GUARD = 3,
  // File system or file format failure.
  TP_STATUS_IO = 4,
  // Internal panic; the library state is unchanged.
  TP_STATUS_PANIC = 5,
} TpStatus;

// A phantom: grid, support region, speed and source.
typedef struct TpConfig TpConfig;

// A real scalar field on a voxel grid.
typedef struct TpField TpField;

// Boundary spectra over a wavenumber sweep.
typedef struct TpFreqTrace TpFreqTrace;

// Boundary samples in time on the reference sphere.
typedef struct TpTrace TpTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next `tp_*` call on the same thread.
const char *tp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *tp_version(void);

// Builds a named phantom on the cube `[-(R + h), R + h]³` with `dims` voxels
// across `[-R, R]`. `params_toml` may be null or a TOML table of parameters.
enum TpStatus tp_phantom_build(const char *name,
                               size_t dims,
                               double radius,
                               const char *params_toml,
                               struct TpConfig **out_config);

void tp_config_free(struct TpConfig *config);

enum TpStatus tp_config_field(const struct TpConfig *config,
                              enum TpQuantity quantity,
                              struct TpField **out_field);

void tp_field_free(struct TpField *field);

// Grid shape, spacing and minimum corner.
enum TpStatus tp_field_grid(const struct TpField *field,
                            size_t *out_dims,
                            double *out_spacing,
                            double *out_origin);

// Copies the `x3`-fastest values into `buf`, which must hold exactly `n1 n2 n3` doubles.
enum TpStatus tp_field_copy_values(const struct TpField *field, double *buf, size_t len);

enum TpStatus tp_field_write(const struct TpField *field, const char *path);

enum TpStatus tp_field_read(const char *path, struct TpField **out_field);

// Runs the wave solver and returns the trace on the reference sphere.
// `t_final <= 0` selects the default `6R / c0`.
enum TpStatus tp_simulate(const struct TpConfig *config,
                          double t_final,
                          size_t n_sphere,
                          struct TpTrace **out_trace);

void tp_trace_free(struct TpTrace *trace);

enum TpStatus tp_trace_shape(const struct TpTrace *trace,
                             size_t *out_points,
                             size_t *out_samples,
                             double *out_dt);

// Point-major samples; `buf` must hold `points × samples` doubles.
enum TpStatus tp_trace_copy_values(const struct TpTrace *trace, double *buf, size_t len);

// Temporal Fourier transform at `n_k` wavenumbers (`ks` null: default sweep).
enum TpStatus tp_temporal_ft(const struct TpTrace *trace,
                             const double *ks,
                             size_t n_k,
                             struct TpFreqTrace **out_freq);

// Lippmann-Schwinger spectra on `n_sphere` points of the reference sphere.
enum TpStatus tp_ls_spectrum(const struct TpConfig *config,
                             size_t n_sphere,
                             const double *ks,
                             size_t n_k,
                             struct TpFreqTrace **out_freq);

void tp_freq_free(struct TpFreqTrace *freq);

enum TpStatus tp_freq_shape(const struct TpFreqTrace *freq, size_t *out_points, size_t *out_k);

// Point-major real and imaginary parts; each buffer holds `points × n_k` doubles.
enum TpStatus tp_freq_copy_values(const struct TpFreqTrace *freq,
                                  double *re,
                                  double *im,
                                  size_t len);

enum TpStatus tp_freq_write(const struct TpFreqTrace *freq, const char *path);

enum TpStatus tp_freq_read(const char *path, struct TpFreqTrace **out_freq);

// Recovers `q` on the grid and support region of `domain` under the
// `x3`-independent cylinder prior. `l_max = 0` selects degree 8.
enum TpStatus tp_recover_q(const struct TpFreqTrace *freq,
                           const struct TpConfig *domain,
                           size_t pixel_block,
                           size_t l_max,
                           struct TpField **out_q);

// Constant speed on the support of `domain` from a given `q`.
enum TpStatus tp_recover_constant_c(const struct TpField *q,
                                    const struct TpFreqTrace *freq,
                                    const struct TpConfig *domain,
                                    double *out_c);

// Full constant-speed reconstruction; `out_q` and `out_f` may be null.
enum TpStatus tp_reconstruct_constant_speed(const struct TpFreqTrace *freq,
                                            const struct TpConfig *domain,
                                            size_t pixel_block,
                                            double *out_c,
                                            struct TpField **out_q,
                                            struct TpField **out_f);

// Inclusion contrast for an inclusion phantom `domain`, given `q`.
// `out_detected` is 0 when no contrast was detected, in which case `out_gamma` is infinite.
enum TpStatus tp_recover_inclusion_gamma(const struct TpField *q,
                                         const struct TpFreqTrace *freq,
                                         const struct TpConfig *domain,
                                         double *out_gamma,
                                         int32_t *out_detected);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TATPAT_H */
