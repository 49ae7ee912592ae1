/* C interface to the lgcpd survey-design library.
 *
 * All functions return an lgcpd_status. On failure the message is available
 * from lgcpd_last_error() on the calling thread until the next call. Handles
 * are opaque and must be released with their *_free function. */
#ifndef LGCPD_LGCPD_H
#define LGCPD_LGCPD_H

#include <stddef.h>
#include <stdint.h>

#if defined(LGCPD_BUILDING_LIBRARY)
#define LGCPD_API __attribute__((visibility("default")))
#else
#define LGCPD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lgcpd_status {
  LGCPD_OK = 0,
  LGCPD_ERR_INVALID_ARGUMENT = 1,
  LGCPD_ERR_USAGE = 2,
  LGCPD_ERR_IO = 3,
  LGCPD_ERR_NUMERICAL = 4,
  LGCPD_ERR_INTERNAL = 5
} lgcpd_status;

typedef enum lgcpd_cov_mode { LGCPD_SEPARABLE = 0, LGCPD_ADDITIVE = 1 } lgcpd_cov_mode;
typedef enum lgcpd_kernel { LGCPD_MATERN32 = 0, LGCPD_SQEXP = 1 } lgcpd_kernel;
typedef enum lgcpd_observation {
  LGCPD_POISSON = 0,
  LGCPD_NEGATIVE_BINOMIAL = 1,
  LGCPD_GAUSSIAN = 2
} lgcpd_observation;

typedef struct lgcpd_domain lgcpd_domain;
typedef struct lgcpd_model lgcpd_model;
typedef struct lgcpd_design lgcpd_design;
typedef struct lgcpd_comparison lgcpd_comparison;

typedef struct lgcpd_model_params {
  lgcpd_cov_mode cov_mode;
  lgcpd_kernel spatial_kernel;
  double l_s;
  double sigma2_s; /* ignored in separable mode */
  lgcpd_kernel temporal_kernel;
  double l_t;
  double sigma2_t;
  /* mean a - c (t - b)^2; with c = 0 the mean is the constant a */
  double mean_a;
  double mean_b;
  double mean_c;
  lgcpd_observation observation;
  double noise_variance; /* Gaussian */
  double nb_dispersion;  /* Negative-Binomial r */
  double nb_volume;      /* Negative-Binomial sampling volume V */
} lgcpd_model_params;

typedef struct lgcpd_design_request {
  const char* generator; /* base name, optionally suffixed "_rej" */
  size_t n;
  uint64_t seed;
  double delta; /* <= 0 selects the default for n */
  double close_pair_fraction;
  uint64_t offset;
  size_t candidate_resolution[3];
  const char* inclusion; /* inclusion variant for "_rej" generators */
  double p_max;
  size_t inclusion_resolution[3]; /* grid over which the inclusion is normalized */
} lgcpd_design_request;

typedef struct lgcpd_eval_options {
  size_t replicates;
  uint64_t seed;
  int quadrature_nodes;
  double max_failure_rate;
  unsigned threads;
  size_t grid_resolution[3];
} lgcpd_eval_options;

LGCPD_API const char* lgcpd_version(void);
LGCPD_API const char* lgcpd_last_error(void);

/* Defaults follow the unit-cube Poisson simulation setup. */
LGCPD_API void lgcpd_model_params_default(lgcpd_model_params* params);
LGCPD_API void lgcpd_design_request_default(lgcpd_design_request* request);
LGCPD_API void lgcpd_eval_options_default(lgcpd_eval_options* options);

LGCPD_API lgcpd_status lgcpd_domain_create(const double lo[3], const double hi[3], lgcpd_domain** out);
LGCPD_API lgcpd_status lgcpd_domain_load_mask(const char* path, lgcpd_domain** out);
LGCPD_API void lgcpd_domain_free(lgcpd_domain* domain);

LGCPD_API lgcpd_status lgcpd_model_create(const lgcpd_model_params* params, lgcpd_model** out);
/* Returns a new model whose prior is the posterior given (design, y). */
LGCPD_API lgcpd_status lgcpd_model_condition(const lgcpd_model* model, const lgcpd_design* design,
                                             const double* y, size_t count, lgcpd_model** out);
LGCPD_API void lgcpd_model_free(lgcpd_model* model);

/* `model` may be NULL unless the generator is a rejection variant. */
LGCPD_API lgcpd_status lgcpd_design_generate(const lgcpd_design_request* request, const lgcpd_domain* domain,
                                             const lgcpd_model* model, lgcpd_design** out);
/* points holds count rows of (s1, s2, t). */
LGCPD_API lgcpd_status lgcpd_design_from_points(const double* points, size_t count, lgcpd_design** out);
LGCPD_API lgcpd_status lgcpd_design_load(const char* path, lgcpd_design** out);
LGCPD_API lgcpd_status lgcpd_design_save(const lgcpd_design* design, const char* path);
LGCPD_API size_t lgcpd_design_size(const lgcpd_design* design);
LGCPD_API lgcpd_status lgcpd_design_point(const lgcpd_design* design, size_t index, double out[3]);
LGCPD_API void lgcpd_design_free(lgcpd_design* design);

/* Evaluates designs under common random numbers. `criteria` holds names
 * (apv_latent, apv_intensity, kl). Rows are design-major. */
LGCPD_API lgcpd_status lgcpd_compare(const lgcpd_model* model, const lgcpd_domain* domain,
                                     const lgcpd_design* const* designs, const char* const* names, size_t design_count,
                                     const char* const* criteria, size_t criterion_count,
                                     const lgcpd_eval_options* options, lgcpd_comparison** out);
LGCPD_API size_t lgcpd_comparison_rows(const lgcpd_comparison* comparison);
/* reduction is NaN when the row has no base design. */
LGCPD_API lgcpd_status lgcpd_comparison_row(const lgcpd_comparison* comparison, size_t row, const char** design_name,
                                            const char** criterion, double* estimate, double* std_error,
                                            size_t* replicates, double* reduction_pct);
LGCPD_API lgcpd_status lgcpd_comparison_save_csv(const lgcpd_comparison* comparison, const char* path);
LGCPD_API void lgcpd_comparison_free(lgcpd_comparison* comparison);

/* Runs a simulation-study config file. A non-NULL output_dir overrides the
 * config's. failed_cells may be NULL. */
LGCPD_API lgcpd_status lgcpd_simstudy(const char* config_path, const char* output_dir, unsigned threads,
                                      size_t* failed_cells);

#ifdef __cplusplus
}
#endif

#endif
