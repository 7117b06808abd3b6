/* C interface to the inexact tensor methods library.
 *
 * All functions return an itm_status. On failure the thread-local message from
 * itm_last_error() describes the cause. Strings returned through char** are
 * owned by the caller and released with itm_string_free().
 */
#ifndef ITM_ITM_H
#define ITM_ITM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(ITM_BUILDING_LIBRARY)
#define ITM_API __declspec(dllexport)
#else
#define ITM_API __declspec(dllimport)
#endif
#else
#define ITM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum itm_status {
  ITM_OK = 0,
  ITM_ERR_INVALID_ARGUMENT = 1,
  ITM_ERR_PARSE = 2,
  ITM_ERR_IO = 3,
  ITM_ERR_FACTORIZATION = 4,
  ITM_ERR_NUMERICAL = 5,
  ITM_ERR_INTERNAL = 6
} itm_status;

/* Termination reason of a finished run. */
typedef enum itm_run_status {
  ITM_RUN_MAX_ITERATIONS = 0,
  ITM_RUN_TARGET_REACHED = 1,
  ITM_RUN_GRADIENT_TOLERANCE = 2,
  ITM_RUN_STOP_CONDITION = 3,
  ITM_RUN_MONOTONE_FLOOR = 4,
  ITM_RUN_SUBSOLVER_STALL = 5,
  ITM_RUN_DIVERGED = 6
} itm_run_status;

typedef struct itm_config itm_config;
typedef struct itm_result itm_result;

/* One trace row; absent quantities are NaN. */
typedef struct itm_trace_row {
  int64_t k;
  double objective;
  double gap;
  double delta_requested;
  double delta_certified;
  double h_used;
  int64_t inner_iterations;
  uint64_t hvp_count;
  uint64_t grad_count;
  double time_s;
} itm_trace_row;

ITM_API const char* itm_version(void);
ITM_API const char* itm_last_error(void);
ITM_API const char* itm_status_name(itm_status status);
ITM_API void itm_string_free(char* text);

ITM_API itm_status itm_config_new(itm_config** out);
ITM_API itm_status itm_config_load(const char* path, itm_config** out);
ITM_API itm_status itm_config_parse(const char* json_text, itm_config** out);
/* Keys: problem, method, p, H, policy, subsolver, stop, max-iters, target-gap, seed, out. */
ITM_API itm_status itm_config_set(itm_config* config, const char* key, const char* value);
ITM_API itm_status itm_config_to_json(const itm_config* config, char** out);
ITM_API void itm_config_free(itm_config* config);

/* Runs the configured experiment; writes trace.csv, config.json, summary.json when `out` is set. */
ITM_API itm_status itm_run(const itm_config* config, itm_result** out);
ITM_API itm_status itm_result_status(const itm_result* result, itm_run_status* out);
ITM_API itm_status itm_result_row_count(const itm_result* result, size_t* out);
ITM_API itm_status itm_result_row(const itm_result* result, size_t index, itm_trace_row* out);
ITM_API itm_status itm_result_summary_json(const itm_result* result, char** out);
ITM_API itm_status itm_result_trace_csv(const itm_result* result, char** out);
ITM_API void itm_result_free(itm_result* result);

/* Runs every config file and compares them. Either output may be NULL. */
ITM_API itm_status itm_compare(const char* const* config_paths, size_t count, char** report_json, char** table_text);

/* Fits the log-log rate of a trace file. `fstar` is a number or "auto"
 * (summary.json beside the trace, else the smallest F in the trace).
 * k_lo = 0 and k_hi = 0 select the default window. */
ITM_API itm_status itm_fit(const char* trace_path, const char* fstar, int64_t k_lo, int64_t k_hi, int order,
                           char** fit_json);

#ifdef __cplusplus
}
#endif

#endif /* ITM_ITM_H */
