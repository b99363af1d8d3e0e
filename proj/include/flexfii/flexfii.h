#ifndef FLEXFII_H
#define FLEXFII_H

/* C interface to libflexfii. Every fallible call returns a status code; the
 * message of the most recent failure on the calling thread is available
 * from flexfii_last_error(). Handles are opaque and owned by the caller. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FLEXFII_BUILDING_LIBRARY)
#    define FLEXFII_API __declspec(dllexport)
#  else
#    define FLEXFII_API __declspec(dllimport)
#  endif
#else
#  define FLEXFII_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum flexfii_status {
    FLEXFII_OK = 0,
    FLEXFII_INVALID_ARGUMENT = 1,
    FLEXFII_PARSE = 2,
    FLEXFII_INVALID_MODEL = 3, /* row sums, entry ranges, non-finite payoff */
    FLEXFII_ILL_POSED = 4,     /* some state neither discounts nor reaches the target */
    FLEXFII_SINGULAR = 5,
    FLEXFII_NO_CONVERGENCE = 6,
    FLEXFII_CAP_DOMINATES = 7,
    FLEXFII_RULE_ORDER = 8,
    FLEXFII_EMPTY_SET = 9,
    FLEXFII_INTERNAL = 10
} flexfii_status;

typedef struct flexfii_model flexfii_model;
typedef struct flexfii_result flexfii_result;

FLEXFII_API const char* flexfii_version(void);
FLEXFII_API const char* flexfii_status_string(flexfii_status status);
/* Empty string when the last call on this thread succeeded. */
FLEXFII_API const char* flexfii_last_error(void);
/* Offending state of the last failure; returns 0 if none was attached. */
FLEXFII_API int flexfii_last_error_state(size_t* state);

/* ---- models ------------------------------------------------------------ */

FLEXFII_API flexfii_status flexfii_model_load(const char* path, flexfii_model** out);
FLEXFII_API flexfii_status flexfii_model_parse(const char* json, flexfii_model** out);
/* Grid spec JSON -> random-walk model. */
FLEXFII_API flexfii_status flexfii_model_from_grid_file(const char* path, flexfii_model** out);
FLEXFII_API flexfii_status flexfii_model_from_grid_json(const char* json, flexfii_model** out);
FLEXFII_API void flexfii_model_free(flexfii_model* model);

FLEXFII_API size_t flexfii_model_num_states(const flexfii_model* model);
FLEXFII_API double flexfii_model_payoff(const flexfii_model* model, size_t state);
/* Returns 1 and fills width/height for grid models, 0 otherwise. */
FLEXFII_API int flexfii_model_grid(const flexfii_model* model, size_t* width, size_t* height);
/* Copies the label with a terminating NUL. `needed` receives the length
 * without the NUL; FLEXFII_INVALID_ARGUMENT if it does not fit. */
FLEXFII_API flexfii_status flexfii_model_label(const flexfii_model* model, size_t state, char* buf,
                                               size_t capacity, size_t* needed);
/* Accepts a label, a decimal index, or "x:y" on grid models. */
FLEXFII_API flexfii_status flexfii_model_find_state(const flexfii_model* model, const char* name, size_t* state);
/* Fills n_states bytes with the file's initial set (all ones by default). */
FLEXFII_API void flexfii_model_initial_set(const flexfii_model* model, unsigned char* mask);
/* Free the string with flexfii_string_free. */
FLEXFII_API flexfii_status flexfii_model_to_json(const flexfii_model* model, char** out);
FLEXFII_API void flexfii_string_free(char* s);

/* ---- forward improvement iteration -------------------------------------- */

typedef struct flexfii_solve_options {
    double tie_tolerance;         /* default 1e-9 */
    int fixed_point;              /* 0: sparse LU (default), 1: fixed-point iteration */
    double fixed_point_tolerance; /* default 1e-12 */
} flexfii_solve_options;

FLEXFII_API void flexfii_solve_options_default(flexfii_solve_options* options);

/* `initial_mask` may be NULL (all states); `kappa` is "k", "k1,k2,..." or
 * "D:{1,3};{1,2}"; `options` may be NULL. */
FLEXFII_API flexfii_status flexfii_solve(const flexfii_model* model, const unsigned char* initial_mask,
                                         const char* kappa, const flexfii_solve_options* options,
                                         flexfii_result** out);
FLEXFII_API void flexfii_result_free(flexfii_result* result);

typedef struct flexfii_iteration_info {
    size_t iteration;
    const char* window; /* owned by the result */
    int window_augmented;
    size_t set_size_before;
    size_t set_size;
    size_t removed;
    double wall_ms;
} flexfii_iteration_info;

typedef struct flexfii_result_summary {
    size_t iterations;
    size_t improving_iterations;
    size_t final_set_size;
    size_t matvecs;
    size_t solves;
    double total_ms;
    int depth_one_augmented;
} flexfii_result_summary;

FLEXFII_API void flexfii_result_get_summary(const flexfii_result* result, flexfii_result_summary* out);
FLEXFII_API flexfii_status flexfii_result_iteration(const flexfii_result* result, size_t index,
                                                    flexfii_iteration_info* out);
/* 1 if the state lies in the final stopping set F. */
FLEXFII_API int flexfii_result_in_set(const flexfii_result* result, size_t state);
/* h'_{F,0}(state) */
FLEXFII_API double flexfii_result_value(const flexfii_result* result, size_t state);

/* ---- Monte Carlo ------------------------------------------------------- */

typedef struct flexfii_sim_options {
    uint64_t n_paths;     /* default 10000 */
    uint64_t seed;
    uint64_t horizon_cap; /* 0: derived from alpha and the payoff */
    int parallel;         /* default 1 */
} flexfii_sim_options;

typedef struct flexfii_sim_report {
    size_t start;
    uint64_t n_paths;
    double mean;
    double std_error;
    uint64_t horizon_cap;
    uint64_t capped_paths;
} flexfii_sim_report;

FLEXFII_API void flexfii_sim_options_default(flexfii_sim_options* options);
FLEXFII_API const char* flexfii_rng_algorithm(void);

/* Simulates the first entrance into `target_mask` from `start`. */
FLEXFII_API flexfii_status flexfii_simulate_entrance(const flexfii_model* model, const unsigned char* target_mask,
                                                     size_t start, const flexfii_sim_options* options,
                                                     flexfii_sim_report* out);

#ifdef __cplusplus
}
#endif

#endif
