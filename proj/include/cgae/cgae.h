/* C interface to the CGAE forecasting library.
 *
 * Every function returns a cgae_status. On failure the message is available
 * from cgae_last_error() until the next call on the same thread. Objects are
 * opaque handles released with the matching *_free function; passing NULL to
 * a *_free function is a no-op.
 */
#ifndef CGAE_H
#define CGAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CGAE_API __declspec(dllexport)
#else
#define CGAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cgae_status {
  CGAE_OK = 0,
  CGAE_ERR_DIMENSION = 1, /* shapes do not agree */
  CGAE_ERR_DOMAIN = 2,    /* argument outside an operation's domain */
  CGAE_ERR_USAGE = 3,     /* invalid call or parameter combination */
  CGAE_ERR_DATA = 4,      /* malformed or inconsistent input data */
  CGAE_ERR_CONFIG = 5,    /* invalid configuration */
  CGAE_ERR_IO = 6,        /* missing or unreadable file */
  CGAE_ERR_TRAINING = 7,  /* non-finite loss or gradient */
  CGAE_ERR_NULL = 8,      /* required pointer argument was NULL */
  CGAE_ERR_INTERNAL = 9
} cgae_status;

CGAE_API const char* cgae_version(void);
CGAE_API const char* cgae_status_name(cgae_status status);
/* Message of the last failed call on this thread ("" if none). */
CGAE_API const char* cgae_last_error(void);

/* ---- configuration ---- */

typedef struct cgae_config cgae_config;

CGAE_API cgae_status cgae_config_default(cgae_config** out);
CGAE_API cgae_status cgae_config_load(const char* path, cgae_config** out);
/* Sets "section.key" (or a top-level key such as "seed") from text. */
CGAE_API cgae_status cgae_config_set(cgae_config* config, const char* key, const char* value);
CGAE_API cgae_status cgae_config_validate(const cgae_config* config);
/* Canonical text form. Copies at most `capacity` bytes including the
 * terminator into `buffer` (which may be NULL when capacity is 0) and stores
 * the full length plus one in `needed`. */
CGAE_API cgae_status cgae_config_format(const cgae_config* config, char* buffer, size_t capacity, size_t* needed);
CGAE_API void cgae_config_free(cgae_config* config);

/* ---- pipeline stages ----
 * Each stage reads and writes files in the configured work directory. On
 * success cgae_last_summary() holds a one-line key=value summary and
 * cgae_last_warning() any data warnings. A horizon of 0 means every
 * configured horizon. */

CGAE_API cgae_status cgae_run_synth(const cgae_config* config);
CGAE_API cgae_status cgae_run_select_lags(const cgae_config* config);
CGAE_API cgae_status cgae_run_build_graph(const cgae_config* config);
CGAE_API cgae_status cgae_run_train(const cgae_config* config, size_t horizon);
CGAE_API cgae_status cgae_run_forecast(const cgae_config* config, size_t horizon);
CGAE_API cgae_status cgae_run_evaluate(const cgae_config* config);

CGAE_API const char* cgae_last_summary(void);
CGAE_API size_t cgae_last_warning_count(void);
/* "" when index is out of range. */
CGAE_API const char* cgae_last_warning(size_t index);

/* ---- metrics ---- */

/* Percent; intervals are inclusive. */
CGAE_API cgae_status cgae_reliability_bias(const double* observations, const double* lower, const double* upper,
                                           size_t count, double alpha, double* out);
CGAE_API cgae_status cgae_piaw(const double* lower, const double* upper, size_t count, double* out);
CGAE_API cgae_status cgae_crps(const double* samples, size_t count, double observation, double* out);
/* `degenerate` (optional) is set to 1 for constant samples. */
CGAE_API cgae_status cgae_pdf_entropy(const double* samples, size_t count, size_t bins, double* out, int* degenerate);

/* ---- graphs ---- */

typedef struct cgae_graph cgae_graph;

CGAE_API cgae_status cgae_graph_load(const char* path, cgae_graph** out);
/* Row-major n x n symmetric adjacency; nodes are named "0".."n-1". */
CGAE_API cgae_status cgae_graph_from_adjacency(const double* adjacency, size_t n, cgae_graph** out);
CGAE_API cgae_status cgae_graph_node_count(const cgae_graph* graph, size_t* out);
/* Writes the n x n renormalized propagation matrix. */
CGAE_API cgae_status cgae_graph_propagation(const cgae_graph* graph, double* out);
/* Chebyshev filter of an n x cols signal with omega_0..omega_{terms-1}.
 * gamma_max <= 0 uses the largest Laplacian eigenvalue. */
CGAE_API cgae_status cgae_graph_chebyshev(const cgae_graph* graph, const double* signal, size_t cols,
                                          const double* omega, size_t terms, double gamma_max, double* out);
CGAE_API void cgae_graph_free(cgae_graph* graph);

/* ---- trained models ---- */

typedef struct cgae_model cgae_model;

CGAE_API cgae_status cgae_model_load(const char* path, cgae_model** out);
CGAE_API cgae_status cgae_model_save(const cgae_model* model, const char* path);
CGAE_API cgae_status cgae_model_info(const cgae_model* model, size_t* nodes, size_t* features, size_t* latent_dim,
                                     size_t* parameters);
/* Draws `rho` ensemble members for the n x F history `pi` (row-major,
 * physical units) into `out` (rho x n, row-major). */
CGAE_API cgae_status cgae_model_sample(const cgae_model* model, const double* pi, size_t rho, uint64_t seed,
                                       int add_output_noise, double* out);
CGAE_API void cgae_model_free(cgae_model* model);

#ifdef __cplusplus
}
#endif

#endif /* CGAE_H */
