#ifndef NCX_H
#define NCX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NcxStatus {
  NCX_STATUS_OK = 0,
  NCX_STATUS_NULL_POINTER = 1,
  NCX_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A coefficient or lacunarity hypothesis fails.
   */
  NCX_STATUS_HYPOTHESIS = 3,
  NCX_STATUS_NUMERICAL = 4,
  NCX_STATUS_SERIALIZATION = 5,
  NCX_STATUS_PANIC = 6,
} NcxStatus;

typedef enum NcxKind {
  NCX_KIND_KHINTCHINE = 0,
  NCX_KIND_PALEY1 = 1,
  NCX_KIND_PALEY2 = 2,
  NCX_KIND_STEINHAUS = 3,
} NcxKind;

/**
 * Generated test function with its instance description.
 */
typedef struct NcxInstance NcxInstance;

/**
 * Finite sequence of square complex matrices.
 */
typedef struct NcxSequence NcxSequence;

/**
 * Explicit splitting of a coefficient sequence.
 */
typedef struct NcxSplitting NcxSplitting;

typedef struct NcxSplitSummary {
  double l1_norm;
  double column_norm_a;
  double row_norm_b;
  double splitting_value;
  double reconstruction_residual;
  /**
   * Number of failed invariant checks, structural ones included.
   */
  size_t violations;
} NcxSplitSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into the library from the same thread.
 */
const char *ncx_last_error(void);

const char *ncx_version(void);

/**
 * Builds a sequence of `len` matrices of size `dim × dim` from interleaved
 * (re, im) pairs, row-major within each matrix: `2·len·dim²` doubles.
 *
 * # Safety
 * `entries` must point to that many doubles and `out` must be writable.
 */
enum NcxStatus ncx_sequence_new(size_t dim,
                                size_t len,
                                const double *entries,
                                struct NcxSequence **out);

/**
 * # Safety
 * `seq` must be null or a handle from `ncx_sequence_new` not yet freed.
 */
void ncx_sequence_free(struct NcxSequence *seq);

/**
 * `‖(Σ c_j* c_j)^{1/2}‖₁`.
 *
 * # Safety
 * `seq` must be a live handle and `out` writable.
 */
enum NcxStatus ncx_column_norm(const struct NcxSequence *seq, double *out);

/**
 * `‖(Σ c_j c_j*)^{1/2}‖₁`.
 *
 * # Safety
 * `seq` must be a live handle and `out` writable.
 */
enum NcxStatus ncx_row_norm(const struct NcxSequence *seq, double *out);

/**
 * Optimized splitting norm. `value` is attained by an explicit splitting and
 * `dual_lower` is a certified lower bound. A nonpositive `tolerance` or a
 * zero `max_iter` selects the default.
 *
 * # Safety
 * `seq` must be a live handle; `value` and `dual_lower` writable.
 */
enum NcxStatus ncx_splitting_norm(const struct NcxSequence *seq,
                                  double tolerance,
                                  size_t max_iter,
                                  double *value,
                                  double *dual_lower);

/**
 * Generates a random instance with default resolution and grid size.
 *
 * # Safety
 * `out` must be writable.
 */
enum NcxStatus ncx_instance_generate(enum NcxKind kind,
                                     size_t dim,
                                     size_t terms,
                                     uint64_t seed,
                                     struct NcxInstance **out);

/**
 * Parses an instance from the JSON written by `ncx gen`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum NcxStatus ncx_instance_from_json(const char *json, struct NcxInstance **out);

/**
 * # Safety
 * `inst` must be null or a live handle.
 */
void ncx_instance_free(struct NcxInstance *inst);

/**
 * Splits the instance with the construction matching its kind.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum NcxStatus ncx_instance_split(const struct NcxInstance *inst, struct NcxSplitting **out);

/**
 * # Safety
 * `split` must be null or a live handle.
 */
void ncx_splitting_free(struct NcxSplitting *split);

/**
 * # Safety
 * `split` must be a live handle and `out` writable.
 */
enum NcxStatus ncx_splitting_summary(const struct NcxSplitting *split, struct NcxSplitSummary *out);

/**
 * Serializes the splitting as JSON. Release the string with `ncx_string_free`.
 *
 * # Safety
 * `split` must be a live handle and `out` writable.
 */
enum NcxStatus ncx_splitting_to_json(const struct NcxSplitting *split, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ncx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCX_H */
