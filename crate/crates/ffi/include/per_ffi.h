/* C interface for the progressive entity resolution core. Generated by cbindgen; do not edit. */

#ifndef PER_FFI_H
#define PER_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum PerStatus {
  PER_STATUS_OK = 0,
  /**
   * The emitter has no further comparisons; not an error.
   */
  PER_STATUS_EXHAUSTED = 1,
  PER_STATUS_NULL_ARGUMENT = 2,
  PER_STATUS_INVALID_ARGUMENT = 3,
  PER_STATUS_PARSE_ERROR = 4,
  PER_STATUS_IO_ERROR = 5,
  /**
   * The blocking workflow produced no blocks for this collection.
   */
  PER_STATUS_EMPTY_BLOCKS = 6,
  PER_STATUS_INVALID_UTF8 = 7,
} PerStatus;

/**
 * Profile file format.
 */
typedef enum PerFormat {
  PER_FORMAT_CSV = 0,
  PER_FORMAT_JSONL = 1,
} PerFormat;

/**
 * Emission method selector.
 */
typedef enum PerMethod {
  PER_METHOD_SA_PSN = 0,
  PER_METHOD_SA_PSAB = 1,
  PER_METHOD_LS_PSN = 2,
  PER_METHOD_GS_PSN = 3,
  PER_METHOD_PBS = 4,
  PER_METHOD_PPS = 5,
} PerMethod;

/**
 * An immutable, loaded profile collection.
 */
typedef struct PerCollection PerCollection;

/**
 * A single-method emitter; owns its indexes and advances on every
 * `per_emitter_next` call.
 */
typedef struct PerEmitter PerEmitter;

/**
 * Method tuning knobs; `per_params_default` returns the usual benchmark
 * configuration.
 */
typedef struct PerParams {
  /**
   * Minimum suffix length (sa-psab).
   */
  uint32_t l_min;
  /**
   * Window range bound (gs-psn) and window cap (ls-psn).
   */
  uint32_t w_max;
  /**
   * Comparisons kept per scheduled profile (pps).
   */
  uint32_t k_max;
  double purge_ratio;
  double filter_ratio;
  /**
   * Whether sa-psab purges oversized suffix nodes.
   */
  bool psab_purge;
} PerParams;

/**
 * One emitted candidate pair. `i` and `j` are dense profile ids (canonical
 * order: ascending in dirty mode, source 0 before source 1 in clean-clean
 * mode); `weight` is the method's matching-likelihood estimate.
 */
typedef struct PerComparison {
  uint32_t i;
  uint32_t j;
  double weight;
} PerComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failing call on this thread. Never null;
 * empty when no failure has occurred yet.
 */
const char *per_last_error_message(void);

/**
 * Default parameters: purge at 10%, filter at 80%, l_min 2, w_max 20,
 * k_max 10, suffix-node purging on.
 */
struct PerParams per_params_default(void);

/**
 * Loads a profile collection. `path0` is required; a non-null `path1` names
 * the source-1 file and switches to clean-clean mode. A non-null
 * `id_column` names the external-id column or key. On success, writes a
 * handle to `out` that must be freed with `per_collection_free`.
 *
 * # Safety
 * String arguments must be NUL-terminated and valid for the call; `out`
 * must be a valid pointer.
 */
enum PerStatus per_collection_load(const char *path0,
                                   const char *path1,
                                   enum PerFormat format,
                                   const char *id_column,
                                   struct PerCollection **out);

/**
 * Number of profiles in the collection; 0 for a null handle.
 *
 * # Safety
 * `collection` must be a live handle from `per_collection_load` or null.
 */
uintptr_t per_collection_len(const struct PerCollection *collection);

/**
 * Frees a collection handle; null is a no-op.
 *
 * # Safety
 * `collection` must be a handle from `per_collection_load`, not yet freed.
 */
void per_collection_free(struct PerCollection *collection);

/**
 * Builds an initialized emitter over the collection. A null `params` uses
 * `per_params_default`. The emitter copies what it needs: the collection
 * may be freed afterwards. Free with `per_emitter_free`.
 *
 * # Safety
 * `collection` must be a live handle; `params` must be null or valid;
 * `out` must be a valid pointer.
 */
enum PerStatus per_emitter_new(const struct PerCollection *collection,
                               enum PerMethod method,
                               const struct PerParams *params,
                               struct PerEmitter **out);

/**
 * Writes the next best comparison to `out` and returns `Ok`, or returns
 * `Exhausted` once no comparison remains (every later call keeps returning
 * `Exhausted`).
 *
 * # Safety
 * `emitter` must be a live handle; `out` must be a valid pointer.
 */
enum PerStatus per_emitter_next(struct PerEmitter *emitter, struct PerComparison *out);

/**
 * Frees an emitter handle; null is a no-op.
 *
 * # Safety
 * `emitter` must be a handle from `per_emitter_new`, not yet freed.
 */
void per_emitter_free(struct PerEmitter *emitter);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PER_FFI_H */
