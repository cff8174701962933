#ifndef POVMC_H
#define POVMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PovmcStatus {
  POVMC_STATUS_OK = 0,
  POVMC_STATUS_NULL_POINTER = 1,
  POVMC_STATUS_INVALID_UTF8 = 2,
  POVMC_STATUS_JSON = 3,
  POVMC_STATUS_VALIDATION = 4,
  POVMC_STATUS_DIMENSION = 5,
  POVMC_STATUS_CAP_EXCEEDED = 6,
  POVMC_STATUS_SOLVER = 7,
  POVMC_STATUS_DOMAIN = 8,
  POVMC_STATUS_IO = 9,
  POVMC_STATUS_PANIC = 10,
} PovmcStatus;

/**
 * Opaque assemblage.
 */
typedef struct PovmcAssemblage PovmcAssemblage;

/**
 * Opaque Kraus channel.
 */
typedef struct PovmcKrausChannel PovmcKrausChannel;

/**
 * Opaque measurement set.
 */
typedef struct PovmcMeasurementSet PovmcMeasurementSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into the library from the same thread.
 */
const char *povmc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *povmc_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void povmc_string_free(char *s);

/**
 * Parses a `measurement_set` document.
 *
 * # Safety
 * `json_text` must be a NUL-terminated string; `out` must be writable.
 */
enum PovmcStatus povmc_measurement_set_from_json(const char *json_text,
                                                 struct PovmcMeasurementSet **out);

/**
 * # Safety
 * `ms` must come from this library and not have been freed. NULL is ignored.
 */
void povmc_measurement_set_free(struct PovmcMeasurementSet *ms);

/**
 * # Safety
 * `ms` must be a live handle; `out_dim` must be writable.
 */
enum PovmcStatus povmc_measurement_set_dim(const struct PovmcMeasurementSet *ms, size_t *out_dim);

/**
 * Exact joint-measurability test. Writes 1 for compatible, 0 otherwise.
 *
 * # Safety
 * `ms` must be a live handle; `out_compatible` must be writable.
 */
enum PovmcStatus povmc_jm_test(const struct PovmcMeasurementSet *ms,
                               size_t cap,
                               int *out_compatible);

/**
 * Depolarizing joint-measurability robustness `η*`.
 *
 * # Safety
 * `ms` must be a live handle; `out_eta` must be writable.
 */
enum PovmcStatus povmc_jm_robustness(const struct PovmcMeasurementSet *ms,
                                     size_t cap,
                                     double *out_eta);

/**
 * Parses an `assemblage` document.
 *
 * # Safety
 * `json_text` must be a NUL-terminated string; `out` must be writable.
 */
enum PovmcStatus povmc_assemblage_from_json(const char *json_text, struct PovmcAssemblage **out);

/**
 * # Safety
 * `assemblage` must come from this library and not have been freed. NULL is ignored.
 */
void povmc_assemblage_free(struct PovmcAssemblage *assemblage);

/**
 * `σ_{a|x} = σ^{1/2} M_{a|x}^T σ^{1/2}`. `sigma_json` is a `density_state`
 * document, or NULL for the maximally mixed state.
 *
 * # Safety
 * `ms` must be a live handle, `sigma_json` NULL or NUL-terminated, `out`
 * writable.
 */
enum PovmcStatus povmc_sandwich(const struct PovmcMeasurementSet *ms,
                                const char *sigma_json,
                                struct PovmcAssemblage **out);

/**
 * Exact LHS test. Writes 1 for unsteerable, 0 for steerable.
 *
 * # Safety
 * `assemblage` must be a live handle; `out_unsteerable` must be writable.
 */
enum PovmcStatus povmc_lhs_test(const struct PovmcAssemblage *assemblage,
                                size_t cap,
                                int *out_unsteerable);

/**
 * Steering robustness under mixing with `tr(σ_{a|x}) σ`.
 *
 * # Safety
 * `assemblage` must be a live handle; `out_eta` must be writable.
 */
enum PovmcStatus povmc_lhs_robustness(const struct PovmcAssemblage *assemblage,
                                      size_t cap,
                                      double *out_eta);

/**
 * Parses a `kraus_channel` document.
 *
 * # Safety
 * `json_text` must be a NUL-terminated string; `out` must be writable.
 */
enum PovmcStatus povmc_kraus_channel_from_json(const char *json_text,
                                               struct PovmcKrausChannel **out);

/**
 * # Safety
 * `c` must come from this library and not have been freed. NULL is ignored.
 */
void povmc_kraus_channel_free(struct PovmcKrausChannel *c);

/**
 * Pure decomposition of the channel's normalized Choi state as a
 * `pure_decomposition` document, plus the Schmidt-number bound it
 * certifies.
 *
 * # Safety
 * `c` must be a live handle; `out_json` and `out_sn_upper` must be writable.
 */
enum PovmcStatus povmc_choi_sn_witness_json(const struct PovmcKrausChannel *c,
                                            char **out_json,
                                            size_t *out_sn_upper);

/**
 * Runs the position/momentum scan. `config_json` is a `scan_config`
 * document or NULL for the default configuration; the result is a
 * `scan_table` document.
 *
 * # Safety
 * `config_json` must be NULL or NUL-terminated; `out_json` must be writable.
 */
enum PovmcStatus povmc_cvscan_json(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POVMC_H */
