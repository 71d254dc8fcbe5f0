#ifndef SATVNF_H
#define SATVNF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SatvnfAlgorithm {
  SATVNF_ALGORITHM_DVNFP = 0,
  SATVNF_ALGORITHM_GREEDY = 1,
  SATVNF_ALGORITHM_VITERBI = 2,
} SatvnfAlgorithm;

typedef enum SatvnfMode {
  SATVNF_MODE_STATIC = 0,
  SATVNF_MODE_DYNAMIC = 1,
} SatvnfMode;

typedef enum SatvnfStatus {
  SATVNF_STATUS_OK = 0,
  SATVNF_STATUS_NULL_POINTER = 1,
  SATVNF_STATUS_INVALID_UTF8 = 2,
  // Config text or file failed to parse or validate.
  SATVNF_STATUS_CONFIG = 3,
  SATVNF_STATUS_INVALID_PARAMETER = 4,
  SATVNF_STATUS_IO = 5,
  // Row index past the end of a result table.
  SATVNF_STATUS_OUT_OF_RANGE = 6,
  // The oracle check found a mismatch or a constraint violation.
  SATVNF_STATUS_CHECK_FAILED = 7,
  SATVNF_STATUS_INTERNAL = 8,
  SATVNF_STATUS_PANIC = 9,
} SatvnfStatus;

// Opaque experiment configuration.
typedef struct SatvnfConfig SatvnfConfig;

// Opaque result tables of one `satvnf_run`.
typedef struct SatvnfResults SatvnfResults;

// One detail row. `slot` is -1 for static runs.
typedef struct SatvnfDetailRow {
  enum SatvnfMode mode;
  enum SatvnfAlgorithm algorithm;
  double cell_param;
  uint32_t repetition;
  int64_t slot;
  uint64_t seed;
  double bandwidth_cost_mbps;
  double user_delay_ms;
  double allocated_fraction;
  uint64_t edge_count;
  uint64_t cloud_count;
  uint64_t local_count;
  uint64_t rounds;
  uint64_t solver_calls;
  double wall_ms;
} SatvnfDetailRow;

// Mean and sample standard deviation over one (algorithm, cell).
typedef struct SatvnfAggregateRow {
  enum SatvnfMode mode;
  enum SatvnfAlgorithm algorithm;
  double cell_param;
  uint64_t samples;
  double bandwidth_cost_mean;
  double bandwidth_cost_std;
  double user_delay_mean;
  double user_delay_std;
  double allocated_fraction_mean;
  double allocated_fraction_std;
} SatvnfAggregateRow;

typedef struct SatvnfOracleSummary {
  uint64_t instances;
  uint64_t matched;
  uint64_t scope_improved;
  double scope_bandwidth_gap;
  uint64_t audited_runs;
  uint64_t audit_failures;
} SatvnfOracleSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *satvnf_version(void);

// Message of the last failure on this thread, or null if none.
const char *satvnf_last_error(void);

// Writes a new config holding the reference defaults to `*out`.
//
// # Safety
// `out` must be null or valid for writes.
enum SatvnfStatus satvnf_config_default(struct SatvnfConfig **out);

// Parses and validates TOML config text.
//
// # Safety
// `text` must be null or a NUL-terminated string; `out` must be null or
// valid for writes.
enum SatvnfStatus satvnf_config_from_toml(const char *text, struct SatvnfConfig **out);

// Reads and validates a TOML config file.
//
// # Safety
// `path` must be null or a NUL-terminated string; `out` must be null or
// valid for writes.
enum SatvnfStatus satvnf_config_load(const char *path, struct SatvnfConfig **out);

// Serializes the resolved config as TOML. Free the string with
// `satvnf_string_free`.
//
// # Safety
// `config` must be null or a live handle; `out` must be null or valid for
// writes.
enum SatvnfStatus satvnf_config_to_toml(const struct SatvnfConfig *config, char **out);

// Overrides the root seed.
//
// # Safety
// `config` must be null or a live handle.
enum SatvnfStatus satvnf_config_set_seed(struct SatvnfConfig *config, uint64_t seed);

// Restricts the run to `count` algorithms read from `algorithms`.
//
// # Safety
// `config` must be null or a live handle; `algorithms` must be null or
// point to `count` readable values.
enum SatvnfStatus satvnf_config_set_algorithms(struct SatvnfConfig *config,
                                               const enum SatvnfAlgorithm *algorithms,
                                               size_t count);

// Releases a config handle. Null is a no-op.
//
// # Safety
// `config` must be null or a handle not yet freed.
void satvnf_config_free(struct SatvnfConfig *config);

// Runs the configured sweep on `jobs` threads (0 means 1).
//
// # Safety
// `config` must be null or a live handle; `out` must be null or valid for
// writes.
enum SatvnfStatus satvnf_run(const struct SatvnfConfig *config,
                             size_t jobs,
                             struct SatvnfResults **out);

// # Safety
// `results` must be null or a live handle.
enum SatvnfStatus satvnf_results_detail_count(const struct SatvnfResults *results, size_t *out);

// # Safety
// `results` must be null or a live handle; `out` must be null or valid
// for writes.
enum SatvnfStatus satvnf_results_detail_row(const struct SatvnfResults *results,
                                            size_t index,
                                            struct SatvnfDetailRow *out);

// # Safety
// `results` must be null or a live handle.
enum SatvnfStatus satvnf_results_aggregate_count(const struct SatvnfResults *results, size_t *out);

// # Safety
// `results` must be null or a live handle; `out` must be null or valid
// for writes.
enum SatvnfStatus satvnf_results_aggregate_row(const struct SatvnfResults *results,
                                               size_t index,
                                               struct SatvnfAggregateRow *out);

// Writes the CSV, JSON and resolved-config files into `dir`.
//
// # Safety
// Handles must be null or live; `dir` must be null or a NUL-terminated
// string.
enum SatvnfStatus satvnf_results_write(const struct SatvnfResults *results,
                                       const struct SatvnfConfig *config,
                                       const char *dir);

// Releases a results handle. Null is a no-op.
//
// # Safety
// `results` must be null or a handle not yet freed.
void satvnf_results_free(struct SatvnfResults *results);

// Runs the oracle comparison and constraint audit. Fills `out` in every
// case where the check ran; returns `SATVNF_STATUS_CHECK_FAILED` if it
// found a problem.
//
// # Safety
// `config` must be null or a live handle; `out` must be null or valid for
// writes.
enum SatvnfStatus satvnf_oracle_check(const struct SatvnfConfig *config,
                                      size_t jobs,
                                      struct SatvnfOracleSummary *out);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void satvnf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SATVNF_H */
