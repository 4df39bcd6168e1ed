#ifndef DREXPLAINER_H
#define DREXPLAINER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Validation and runtime failures use the
 * same split as the command-line exit codes.
 */
typedef enum {
  DRX_STATUS_OK = 0,
  /**
   * Bad input: malformed files, config violations, unknown names.
   */
  DRX_STATUS_VALIDATION = 1,
  /**
   * Failure while running: missing files, numerical trouble.
   */
  DRX_STATUS_RUNTIME = 2,
  DRX_STATUS_NULL_ARGUMENT = 3,
  DRX_STATUS_INVALID_UTF8 = 4,
  DRX_STATUS_PANIC = 5,
} DrxStatus;

/**
 * A run configuration.
 */
typedef struct DrxConfig DrxConfig;

/**
 * A checkpointed model bound to the graph it was trained on.
 */
typedef struct DrxModel DrxModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *drx_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *drx_version(void);

/**
 * New configuration with default values.
 */
DrxConfig *drx_config_new(void);

/**
 * Reads a `key = value` config file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
DrxStatus drx_config_load(const char *path, DrxConfig **out);

/**
 * Sets one config key from its text form and revalidates.
 *
 * # Safety
 * `cfg` must come from this library; `key` and `value` must be NUL-terminated.
 */
DrxStatus drx_config_set(DrxConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards. Null is ignored.
 */
void drx_config_free(DrxConfig *cfg);

/**
 * Writes the default synthetic dataset into the configured output directory.
 *
 * # Safety
 * `cfg` must come from this library.
 */
DrxStatus drx_synth(const DrxConfig *cfg);

/**
 * Cross-validates and writes reports and checkpoints to the output
 * directory. Mean AUC and AUPR are stored through the non-null pointers.
 *
 * # Safety
 * `cfg` must come from this library; `auc` and `aupr` may be null.
 */
DrxStatus drx_train(const DrxConfig *cfg, double *auc, double *aupr);

/**
 * Restores a checkpoint and rebuilds its training graph from the data files.
 *
 * # Safety
 * `cfg` must come from this library, `checkpoint` must be NUL-terminated
 * and `out` writable.
 */
DrxStatus drx_model_load(const DrxConfig *cfg, const char *checkpoint, DrxModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is ignored.
 */
void drx_model_free(DrxModel *model);

/**
 * Probability of `CELL,REL,DRUG` (names, REL sensitive or resistant).
 *
 * # Safety
 * `model` must come from this library, `triple` NUL-terminated, `out` writable.
 */
DrxStatus drx_model_score(const DrxModel *model, const char *triple, double *out);

/**
 * Explains `CELL,REL,DRUG` with `method` (`mask`, `explaine` or
 * `deletion`) using the explainer keys of `cfg`. The JSON record is
 * returned in `*out` and must be released with [`drx_string_free`].
 *
 * # Safety
 * Handles must come from this library, strings NUL-terminated, `out` writable.
 */
DrxStatus drx_explain_json(const DrxModel *model,
                           const DrxConfig *cfg,
                           const char *triple,
                           const char *method,
                           char **out);

/**
 * # Safety
 * `s` must be a string returned by this library, freed once. Null is ignored.
 */
void drx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DREXPLAINER_H */
