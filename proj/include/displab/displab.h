#ifndef DISPLAB_H
#define DISPLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DISPLAB_BUILDING)
#    define DISPLAB_API __declspec(dllexport)
#  else
#    define DISPLAB_API __declspec(dllimport)
#  endif
#else
#  define DISPLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum displab_status {
  DISPLAB_OK = 0,
  DISPLAB_INVALID_ARGUMENT = 1,
  DISPLAB_NOT_INVERTIBLE = 2,
  DISPLAB_SIZING = 3,
  DISPLAB_BUDGET_EXCEEDED = 4,
  DISPLAB_CONVERGENCE = 5,
  DISPLAB_CONFIG = 6,
  DISPLAB_INTERNAL = 7
} displab_status;

typedef struct displab_config displab_config;
typedef struct displab_report displab_report;
typedef struct displab_sieve displab_sieve;

typedef struct displab_run_options {
  int oracle;           /* nonzero: brute-force paths */
  int override_budget;  /* nonzero: ignore desk-scale caps */
  int has_seed;
  uint64_t seed;
} displab_run_options;

/* Message of the last failed call on this thread; "" when none. */
DISPLAB_API const char* displab_last_error(void);
DISPLAB_API const char* displab_status_string(displab_status status);
DISPLAB_API const char* displab_version(void);
/* Worker count for parallel sections; <= 0 keeps the default. */
DISPLAB_API void displab_set_threads(int threads);

/* Configuration */
DISPLAB_API displab_status displab_config_new(displab_config** out);
DISPLAB_API displab_status displab_config_parse(const char* text, displab_config** out);
DISPLAB_API displab_status displab_config_load(const char* path, displab_config** out);
DISPLAB_API displab_status displab_config_set(displab_config* config, const char* key,
                                              const char* value);
/* 16 hex digits plus terminator: buf_len >= 17. */
DISPLAB_API displab_status displab_config_hash(const displab_config* config, char* buf,
                                               size_t buf_len);
DISPLAB_API void displab_config_free(displab_config* config);

/* Experiments */
DISPLAB_API size_t displab_command_count(void);
DISPLAB_API const char* displab_command_name(size_t index);
DISPLAB_API displab_status displab_run(const char* command, const displab_config* config,
                                       const displab_run_options* options,
                                       displab_report** out);
DISPLAB_API const char* displab_report_summary(const displab_report* report);
DISPLAB_API const char* displab_report_config_hash(const displab_report* report);
DISPLAB_API int displab_report_ok(const displab_report* report);
DISPLAB_API size_t displab_report_file_count(const displab_report* report);
DISPLAB_API const char* displab_report_file_name(const displab_report* report, size_t index);
DISPLAB_API const char* displab_report_file_content(const displab_report* report, size_t index);
DISPLAB_API void displab_report_free(displab_report* report);

/* Arithmetic primitives */
DISPLAB_API displab_status displab_tau_k(uint64_t n, unsigned k, uint64_t* out);
DISPLAB_API displab_status displab_mod_inverse(int64_t a, int64_t m, int64_t* out);
DISPLAB_API displab_status displab_kloosterman(int64_t a, int64_t b, int64_t c, double* re,
                                               double* im);

DISPLAB_API displab_status displab_sieve_build(uint64_t lo, uint64_t hi, displab_sieve** out);
DISPLAB_API displab_status displab_sieve_phi(const displab_sieve* sieve, uint64_t n, uint64_t* out);
DISPLAB_API displab_status displab_sieve_mu(const displab_sieve* sieve, uint64_t n, int* out);
DISPLAB_API displab_status displab_sieve_spf(const displab_sieve* sieve, uint64_t n, uint64_t* out);
DISPLAB_API displab_status displab_sieve_big_omega(const displab_sieve* sieve, uint64_t n,
                                                   unsigned* out);
DISPLAB_API void displab_sieve_free(displab_sieve* sieve);

#ifdef __cplusplus
}
#endif

#endif
