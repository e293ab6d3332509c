#ifndef ASGD_ASGD_H
#define ASGD_ASGD_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(ASGD_BUILDING)
#    define ASGD_API __declspec(dllexport)
#  else
#    define ASGD_API __declspec(dllimport)
#  endif
#else
#  define ASGD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum asgd_status {
  ASGD_OK = 0,
  ASGD_INVALID_ARGUMENT = 1,
  ASGD_DOMAIN = 2,   /* schedule or delay parameters outside their domain */
  ASGD_CONFIG = 3,   /* malformed or inconsistent configuration */
  ASGD_IO = 4,
  ASGD_RUNTIME = 5,  /* deadlock, non-finite iterate, internal failure */
  ASGD_AUDIT = 6     /* run completed but an audit check failed */
} asgd_status;

typedef struct asgd_config asgd_config;
typedef struct asgd_run asgd_run;

/* Last error message on the calling thread; empty if none. */
ASGD_API const char* asgd_last_error(void);
ASGD_API const char* asgd_version(void);

ASGD_API asgd_status asgd_config_from_json(const char* json, asgd_config** out);
ASGD_API asgd_status asgd_config_load(const char* path, asgd_config** out);
ASGD_API asgd_status asgd_config_set_seed(asgd_config* cfg, uint64_t seed);
/* backend: "event" or "threaded" */
ASGD_API asgd_status asgd_config_set_backend(asgd_config* cfg, const char* backend);
ASGD_API void asgd_config_free(asgd_config* cfg);

/* On ASGD_AUDIT the run handle is still returned in *out. */
ASGD_API asgd_status asgd_run_execute(const asgd_config* cfg, int audit, asgd_run** out);
ASGD_API asgd_status asgd_run_metrics_json(const asgd_run* run, char** out);
ASGD_API asgd_status asgd_run_audit_json(const asgd_run* run, char** out);
ASGD_API asgd_status asgd_run_write_trace(const asgd_run* run, const char* path);
ASGD_API void asgd_run_free(asgd_run* run);

ASGD_API asgd_status asgd_schedule_csv(const char* params_json, char** out);
/* data_path/test_path may be NULL for the defaults data/a9a and data/a9a.t */
ASGD_API asgd_status asgd_experiment_csv(const char* suite, const char* data_path, const char* test_path,
                                         uint64_t seed, char** out);
/* Newline-separated suite names. */
ASGD_API asgd_status asgd_experiment_suites(char** out);
ASGD_API asgd_status asgd_optimum_json(const asgd_config* cfg, char** out);
/* grid may be NULL (count 0) for the default step grid */
ASGD_API asgd_status asgd_grid_csv(const asgd_config* cfg, const double* grid, int count, char** out);

ASGD_API void asgd_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
