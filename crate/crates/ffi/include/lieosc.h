#ifndef LIEOSC_H
#define LIEOSC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Group code for the circle 𝕋¹.
 */
#define LIEOSC_TORUS1 1

/**
 * Group code for 𝕋².
 */
#define LIEOSC_TORUS2 2

/**
 * Group code for 𝕋³.
 */
#define LIEOSC_TORUS3 3

/**
 * Group code for SU(2).
 */
#define LIEOSC_SU2 4

typedef enum LieoscStatus {
  LIEOSC_STATUS_OK = 0,
  LIEOSC_STATUS_NULL_POINTER = 1,
  LIEOSC_STATUS_INVALID_ARGUMENT = 2,
  LIEOSC_STATUS_RESOLUTION = 3,
  LIEOSC_STATUS_NUMERICAL = 4,
  LIEOSC_STATUS_PANIC = 5,
} LieoscStatus;

/**
 * Fourier coefficient handle.
 */
typedef struct LieoscCoefficients LieoscCoefficients;

/**
 * Quadrature grid handle.
 */
typedef struct LieoscGrid LieoscGrid;

typedef struct LieoscSpectralData {
  uintptr_t dim;
  double eigenvalue;
  double weight;
} LieoscSpectralData;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *lieosc_last_error(void);

/**
 * Builds the quadrature grid of resolution `b` for `group`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum LieoscStatus lieosc_grid_new(uint32_t group, uintptr_t b, struct LieoscGrid **out);

/**
 * # Safety
 * `grid` must come from [`lieosc_grid_new`] and not be used afterwards.
 */
void lieosc_grid_free(struct LieoscGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum LieoscStatus lieosc_grid_len(const struct LieoscGrid *grid, uintptr_t *out);

/**
 * Largest bandwidth `L` the grid resolves.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum LieoscStatus lieosc_grid_max_bandwidth(const struct LieoscGrid *grid, double *out);

/**
 * Copies the quadrature weights into `out` (length `len` = grid size).
 *
 * # Safety
 * `grid` must be a live handle and `out` must hold `len` doubles.
 */
enum LieoscStatus lieosc_grid_weights(const struct LieoscGrid *grid, double *out, uintptr_t len);

/**
 * Dimension, eigenvalue and weight of a representation. Tori read `n`
 * frequencies from `freq` and ignore `two_l`; SU(2) reads `two_l` (twice
 * the spin) and ignores `freq`.
 *
 * # Safety
 * For tori `freq` must point to `n` integers; `out` must be writable.
 */
enum LieoscStatus lieosc_spectral_data(uint32_t group,
                                       const int64_t *freq,
                                       uint32_t two_l,
                                       struct LieoscSpectralData *out);

/**
 * Fourier coefficients up to `bandwidth` of the grid samples `re + i·im`.
 *
 * # Safety
 * `grid` must be live, `re`/`im` must hold `len` doubles, `out` writable.
 */
enum LieoscStatus lieosc_forward_transform(const struct LieoscGrid *grid,
                                           const double *re,
                                           const double *im,
                                           uintptr_t len,
                                           double bandwidth,
                                           struct LieoscCoefficients **out);

/**
 * Evaluates coefficients on `grid`, writing `len` samples.
 *
 * # Safety
 * Handles must be live and `out_re`/`out_im` must hold `len` doubles.
 */
enum LieoscStatus lieosc_inverse_transform(const struct LieoscCoefficients *coeffs,
                                           const struct LieoscGrid *grid,
                                           double *out_re,
                                           double *out_im,
                                           uintptr_t len);

/**
 * `Σ d_ξ ‖f̂(ξ)‖²_HS`.
 *
 * # Safety
 * `coeffs` must be live and `out` writable.
 */
enum LieoscStatus lieosc_coefficients_energy(const struct LieoscCoefficients *coeffs, double *out);

/**
 * Serialises coefficients to JSON. Release the string with
 * [`lieosc_string_free`].
 *
 * # Safety
 * `coeffs` must be live and `out` writable.
 */
enum LieoscStatus lieosc_coefficients_to_json(const struct LieoscCoefficients *coeffs, char **out);

/**
 * # Safety
 * `coeffs` must come from this library and not be used afterwards.
 */
void lieosc_coefficients_free(struct LieoscCoefficients *coeffs);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void lieosc_string_free(char *s);

/**
 * Applies `⟨ξ⟩^{-nθ/2} e^{i⟨ξ⟩^θ}` at bandwidth `L` to the samples `re + i·im`.
 *
 * # Safety
 * `grid` must be live; all four buffers must hold `len` doubles.
 */
enum LieoscStatus lieosc_apply_oscillating(const struct LieoscGrid *grid,
                                           double theta,
                                           double bandwidth,
                                           const double *re,
                                           const double *im,
                                           double *out_re,
                                           double *out_im,
                                           uintptr_t len);

/**
 * Decay constant `C_L` of the oscillating symbol and whether it stays flat
 * across dyadic levels (written as 1 or 0).
 *
 * # Safety
 * `out_constant` and `out_admissible` must be writable.
 */
enum LieoscStatus lieosc_verify_decay_oscillating(uint32_t group,
                                                  double theta,
                                                  double bandwidth,
                                                  double *out_constant,
                                                  int32_t *out_admissible);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIEOSC_H */
