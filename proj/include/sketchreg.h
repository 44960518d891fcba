#pragma once

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SKR_API __attribute__((visibility("default")))
#else
#define SKR_API
#endif

/* Every function returning skr_status leaves a message in skr_last_error()
 * (per thread) when it fails. Matrices are column-major. */

typedef enum skr_status {
    SKR_OK = 0,
    SKR_INVALID_ARGUMENT = 1,
    SKR_DIMENSION_MISMATCH = 2,
    SKR_IO = 3,
    SKR_UNMEASURABLE = 4,
    SKR_NUMERIC = 5,
    SKR_INTERNAL = 6
} skr_status;

typedef enum skr_penalty {
    SKR_PENALTY_NONE = 0,
    SKR_PENALTY_RIDGE = 1,
    SKR_PENALTY_L1 = 2,
    SKR_PENALTY_SCAD = 3,
    SKR_PENALTY_MCP = 4,
    /* λ Σ |β_i − β_{i+1}|, solved through the chain-difference substitution. */
    SKR_PENALTY_FUSED = 5
} skr_penalty;

typedef enum skr_embedding_kind {
    SKR_EMBEDDING_GAUSSIAN = 0,
    SKR_EMBEDDING_SPARSE = 1
} skr_embedding_kind;

typedef enum skr_method {
    SKR_METHOD_EXACT = 0,
    SKR_METHOD_SRO = 1,
    SKR_METHOD_ISRO = 2,
    SKR_METHOD_ISRO_IHS = 3
} skr_method;

typedef struct skr_config skr_config;
typedef struct skr_instance skr_instance;
typedef struct skr_embedding skr_embedding;
typedef struct skr_run skr_run;
typedef struct skr_result skr_result;

typedef struct skr_solver_options {
    int max_iters;
    double rel_tol;
    double abs_tol;
    /* λ-continuation factor for scad/mcp. */
    double eta;
} skr_solver_options;

typedef struct skr_sro_options {
    double rho;
    double delta;
    skr_embedding_kind embedding;
    /* 0 selects the recommended size at ε = ρ/(ρ+1). */
    int64_t sketch_size;
    /* Rank for the recommended size; 0 means the numerical rank of X. */
    int64_t rank;
    double c_gaussian;
    double c_sparse;
    int iterations;
    uint64_t seed;
    skr_solver_options solver;
} skr_sro_options;

typedef struct skr_penalty_spec {
    skr_penalty kind;
    double lambda;
    /* SCAD a or MCP b; values <= 0 select the defaults (3.7 and 2). */
    double shape;
} skr_penalty_spec;

SKR_API const char* skr_version(void);
SKR_API const char* skr_status_name(skr_status status);
SKR_API const char* skr_last_error(void);

SKR_API void skr_solver_options_default(skr_solver_options* out);
SKR_API void skr_sro_options_default(skr_sro_options* out);

/* Penalty. Fused is not separable and is rejected by the scalar calls. */
SKR_API skr_status skr_penalty_value(const skr_penalty_spec* pen, const double* beta, size_t len,
                                     double* out);
SKR_API skr_status skr_prox(const skr_penalty_spec* pen, const double* v, size_t len, double step,
                            double* out);

/* Sketches. */
SKR_API skr_status skr_recommended_sketch_size(skr_embedding_kind kind, double epsilon, double delta,
                                               int64_t rank, int64_t* out);
SKR_API skr_status skr_embedding_build(skr_embedding_kind kind, int64_t n, int64_t rows, uint64_t seed,
                                       skr_embedding** out);
/* Sparse embedding with rows = n, bucket(i) = i and sign +1. */
SKR_API skr_status skr_embedding_identity(int64_t n, skr_embedding** out);
SKR_API void skr_embedding_free(skr_embedding* p);
SKR_API skr_status skr_embedding_shape(const skr_embedding* p, int64_t* rows, int64_t* cols);
/* out (rows×d) = P x (n×d). */
SKR_API skr_status skr_embedding_apply(const skr_embedding* p, const double* x, int64_t n, int64_t d,
                                       double* out);
/* Largest |‖PXβ‖²/‖Xβ‖² − 1| over n_probes Gaussian β. */
SKR_API skr_status skr_embedding_distortion(const skr_embedding* p, const double* x, int64_t n,
                                            int64_t d, int n_probes, uint64_t seed, double* out);

/* Solves on raw data: min ½‖y − Xβ‖² + h(β). */
SKR_API skr_status skr_solve(skr_method method, const double* x, int64_t n, int64_t d, const double* y,
                             const skr_penalty_spec* pen, const skr_sro_options* opts, skr_run** out);
/* Iterative SRO with a caller-supplied sketch. */
SKR_API skr_status skr_solve_with_embedding(const skr_embedding* p, const double* x, int64_t n, int64_t d,
                                            const double* y, const skr_penalty_spec* pen,
                                            const skr_sro_options* opts, skr_run** out);

SKR_API void skr_run_free(skr_run* run);
SKR_API int64_t skr_run_dim(const skr_run* run);
/* Outer iterations (0 for the exact solver). */
SKR_API int skr_run_iterations(const skr_run* run);
SKR_API int64_t skr_run_sketch_size(const skr_run* run);
SKR_API int skr_run_converged(const skr_run* run);
SKR_API double skr_run_objective(const skr_run* run);
SKR_API double skr_run_seconds(const skr_run* run);
SKR_API skr_status skr_run_beta(const skr_run* run, double* out, size_t len);
/* Iterate t in 0..skr_run_iterations(). */
SKR_API skr_status skr_run_iterate(const skr_run* run, int t, double* out, size_t len);

/* Instances. `spec` is key = value text (design, n, d, rank, seed, signal,
 * sparsity, noise, scale_by_sqrt_n, estimation_mode, penalty, lambda, shape);
 * missing keys take their defaults. */
SKR_API skr_status skr_instance_generate(const char* spec, skr_instance** out);
SKR_API skr_status skr_instance_load(const char* dir, skr_instance** out);
SKR_API skr_status skr_instance_save(const skr_instance* inst, const char* dir);
SKR_API void skr_instance_free(skr_instance* inst);
SKR_API skr_status skr_instance_shape(const skr_instance* inst, int64_t* n, int64_t* d);
SKR_API skr_status skr_instance_design(const skr_instance* inst, double* out, size_t len);
SKR_API skr_status skr_instance_response(const skr_instance* inst, double* out, size_t len);
SKR_API skr_status skr_instance_signal(const skr_instance* inst, double* out, size_t len);
/* Solves with the instance penalty; iterates are returned as coefficients β. */
SKR_API skr_status skr_instance_solve(const skr_instance* inst, skr_method method,
                                      const skr_sro_options* opts, skr_run** out);
/* ‖β − β̄‖₂ for a coefficient vector of length d. */
SKR_API skr_status skr_instance_l2_to_signal(const skr_instance* inst, const double* beta, size_t len,
                                             double* out);

/* Experiment configuration (key = value, see README). Strings are copied
 * into buf (capacity cap, NUL included); *needed receives the full length
 * without NUL, so a call with cap = 0 sizes the buffer. */
SKR_API skr_status skr_config_default(const char* experiment, skr_config** out);
SKR_API skr_status skr_config_load(const char* path, skr_config** out);
SKR_API void skr_config_free(skr_config* cfg);
SKR_API skr_status skr_config_set(skr_config* cfg, const char* key, const char* value);
SKR_API skr_status skr_config_get(const skr_config* cfg, const char* key, char* buf, size_t cap,
                                  size_t* needed);
SKR_API skr_status skr_config_text(const skr_config* cfg, char* buf, size_t cap, size_t* needed);

/* Runs the configured experiment. out_dir may be NULL or empty to skip files. */
SKR_API skr_status skr_experiment_run(const skr_config* cfg, const char* out_dir, skr_result** out);
SKR_API void skr_result_free(skr_result* res);
/* table: decay, estimation, rate, rate_fit, distortion, timing or summary. */
SKR_API skr_status skr_result_csv(const skr_result* res, const char* table, char* buf, size_t cap,
                                  size_t* needed);
/* Fitted log-log slope of a rate scan for method "exact" or "isro". */
SKR_API skr_status skr_result_rate_slope(const skr_result* res, const char* method, double* slope,
                                         double* r_squared);
SKR_API size_t skr_result_file_count(const skr_result* res);
SKR_API skr_status skr_result_file(const skr_result* res, size_t i, char* buf, size_t cap, size_t* needed);

#ifdef __cplusplus
}
#endif
