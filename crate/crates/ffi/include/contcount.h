/* C ABI for the contcount continual counting library. */

#ifndef CONTCOUNT_H
#define CONTCOUNT_H

/* Generated by cbindgen from contcount-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes for every fallible entry point.
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  // A parameter violated a documented precondition.
  CC_STATUS_INVALID_ARGUMENT = 1,
  // Matrix shapes disagree (library bug if reached through this ABI).
  CC_STATUS_DIMENSION_MISMATCH = 2,
  // Requested dense computation exceeds the supported size.
  CC_STATUS_DENSE_LIMIT = 3,
  // Spectral construction left a non-negligible imaginary part.
  CC_STATUS_IMAGINARY_RESIDUE = 4,
  // A coefficient sequence failed a structural precondition.
  CC_STATUS_BAD_SEQUENCE = 5,
  // More than `n` stream steps were requested.
  CC_STATUS_STREAM_EXHAUSTED = 6,
  // A matrix block was numerically singular.
  CC_STATUS_SINGULAR = 7,
  // Serialization failed.
  CC_STATUS_SERIALIZATION = 8,
  // Underlying I/O failure.
  CC_STATUS_IO = 9,
  // A required pointer argument was null.
  CC_STATUS_NULL_POINTER = 10,
  // An internal panic was caught at the boundary.
  CC_STATUS_PANIC = 11,
} CcStatus;

// Opaque live mechanism; create with [`cc_mechanism_new`], destroy with
// [`cc_mechanism_free`].
typedef struct CcMechanism CcMechanism;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create a mechanism for a length-`n` stream.
//
// `zeta` is the target error inflation in `(0, 1]`; `noise_multiplier`
// is the Gaussian standard deviation per unit sensitivity (0 disables
// noise); `seed` fixes the noise stream.  `use_norm_bound != 0` selects
// the closed-form sensitivity bound (no dense matrices, any `n`);
// otherwise the exact dense sensitivity is computed, which is limited to
// moderate `n`.  `use_reference_noise != 0` selects the O(n) validation
// noise source instead of the O(#segments) streaming one.
//
// On `CC_OK`, `*out` owns the mechanism and must be released with
// [`cc_mechanism_free`].
enum CcStatus cc_mechanism_new(size_t n,
                               double zeta,
                               double noise_multiplier,
                               uint64_t seed,
                               int32_t use_norm_bound,
                               int32_t use_reference_noise,
                               struct CcMechanism **out);

// Consume one stream value and write the private prefix-sum estimate.
//
// # Safety
// `mechanism` must be a live pointer from [`cc_mechanism_new`].
enum CcStatus cc_mechanism_step(struct CcMechanism *mechanism, double x, double *estimate);

// Number of stream elements consumed so far.
//
// # Safety
// `mechanism` must be a live pointer from [`cc_mechanism_new`].
enum CcStatus cc_mechanism_steps_taken(const struct CcMechanism *mechanism, size_t *out);

// Effective sensitivity the noise was calibrated with.
//
// # Safety
// `mechanism` must be a live pointer from [`cc_mechanism_new`].
enum CcStatus cc_mechanism_sensitivity(const struct CcMechanism *mechanism, double *out);

// Number of piecewise-constant segments the noise state tracks.
//
// # Safety
// `mechanism` must be a live pointer from [`cc_mechanism_new`].
enum CcStatus cc_mechanism_segment_count(const struct CcMechanism *mechanism, size_t *out);

// Release a mechanism.  Null is a no-op; the pointer must not be used
// afterwards.
//
// # Safety
// `mechanism` must be null or a live pointer from [`cc_mechanism_new`].
void cc_mechanism_free(struct CcMechanism *mechanism);

// Max squared row norm of the left factor (equals the max squared
// column norm of the right factor) as a closed-form sum.
enum CcStatus cc_norm_formula(size_t n, double *out);

// Factorization coefficient `b(omega^-t)` for `t in [-n, n-1]`.
enum CcStatus cc_bf_closed(size_t n, int64_t t, double *out);

// Static description of a status code (never null).
const char *cc_status_message(enum CcStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTCOUNT_H */
