/*
 * slge.h - C interface to the cell-encoding architecture search engine.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns an slge_status;
 * on failure, slge_last_error() describes the problem for the calling
 * thread until the next call. Strings returned through `char** out` are
 * NUL-terminated, heap allocated, and released with slge_string_free().
 */
#ifndef SLGE_H
#define SLGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define SLGE_API __declspec(dllexport)
#else
#  define SLGE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slge_status {
  SLGE_OK = 0,
  SLGE_ERR_INVALID_ARGUMENT = 1,
  SLGE_ERR_PARSE = 2,
  SLGE_ERR_OVERFLOW = 3,
  SLGE_ERR_ASSEMBLY = 4,
  SLGE_ERR_EVALUATION = 5,
  SLGE_ERR_PROTOCOL = 6,
  SLGE_ERR_TIMEOUT = 7,
  SLGE_ERR_IO = 8,
  SLGE_ERR_INTERNAL = 9
} slge_status;

typedef struct slge_chromosome slge_chromosome;
typedef struct slge_cell slge_cell;
typedef struct slge_network slge_network;
typedef struct slge_evaluator slge_evaluator;
typedef struct slge_run slge_run;

SLGE_API const char* slge_last_error(void);
SLGE_API const char* slge_status_name(slge_status status);
SLGE_API void slge_string_free(char* s);

/* ---- genome ------------------------------------------------------------ */

/* symbols^h * ops^(h+1) * n; SLGE_ERR_OVERFLOW instead of wrapping. */
SLGE_API slge_status slge_search_space_size(uint64_t head_length, uint64_t gene_count,
                                            uint64_t num_symbols, uint64_t num_ops,
                                            uint64_t* out);

SLGE_API slge_status slge_chromosome_random(uint32_t head_length, uint32_t gene_count,
                                            uint64_t seed, slge_chromosome** out);
/* On SLGE_ERR_PARSE, *error_offset (if non-null) receives the character
 * position of the first problem. */
SLGE_API slge_status slge_chromosome_decode(const char* text, slge_chromosome** out,
                                            size_t* error_offset);
SLGE_API slge_status slge_chromosome_encode(const slge_chromosome* chromosome, char** out);
SLGE_API uint32_t slge_chromosome_head_length(const slge_chromosome* chromosome);
SLGE_API uint32_t slge_chromosome_gene_count(const slge_chromosome* chromosome);
SLGE_API void slge_chromosome_free(slge_chromosome* chromosome);

/* ---- mapping ----------------------------------------------------------- */

SLGE_API slge_status slge_develop(const slge_chromosome* chromosome, slge_cell** out);
SLGE_API size_t slge_cell_conv_count(const slge_cell* cell);
SLGE_API size_t slge_cell_edge_count(const slge_cell* cell);
SLGE_API slge_status slge_cell_to_json(const slge_cell* cell, char** out);
SLGE_API slge_status slge_cell_to_dot(const slge_cell* cell, char** out);
SLGE_API slge_status slge_cell_canonical_form(const slge_cell* cell, char** out);
SLGE_API void slge_cell_free(slge_cell* cell);

/* Exhaustively develops every genotype for (h, n) and counts distinct cells
 * up to isomorphism. Refused with SLGE_ERR_INVALID_ARGUMENT when the
 * per-gene count exceeds 1e5 or the genotype count exceeds 1e6. */
SLGE_API slge_status slge_enumerate_cells(uint32_t head_length, uint32_t gene_count,
                                          uint64_t* genotypes, uint64_t* distinct_cells);

/* ---- assembly ---------------------------------------------------------- */

typedef struct slge_macro_config {
  uint32_t stem_channels;
  uint32_t blocks[3];
  uint32_t num_classes;
  uint32_t input_height;
  uint32_t input_width;
  uint32_t input_channels;
  uint64_t param_budget;
} slge_macro_config;

/* Search-time network: C=16, B=[1,1,1], 10 classes, 32x32x3, budget 3.5M. */
SLGE_API void slge_macro_config_default(slge_macro_config* out);

SLGE_API slge_status slge_assemble(const slge_cell* cell, const slge_macro_config* macro,
                                   slge_network** out);
SLGE_API uint64_t slge_network_total_params(const slge_network* network);
/* *within_budget is 1 when total params <= budget; *exceeded_by is the excess. */
SLGE_API slge_status slge_network_check_budget(const slge_network* network, uint64_t budget,
                                               int* within_budget, uint64_t* exceeded_by);
SLGE_API slge_status slge_network_to_json(const slge_network* network, char** out);
SLGE_API slge_status slge_network_to_table(const slge_network* network, char** out);
SLGE_API void slge_network_free(slge_network* network);

/* ---- evaluators -------------------------------------------------------- */

SLGE_API slge_status slge_evaluator_synthetic_target(const slge_chromosome* target,
                                                     slge_evaluator** out);
SLGE_API slge_status slge_evaluator_graph_proxy(slge_evaluator** out);

/* Return SLGE_OK and write a value in [0, 1], or any error status. */
typedef slge_status (*slge_fitness_fn)(const char* chromosome_text, void* user_data,
                                       double* fitness);
SLGE_API slge_status slge_evaluator_callback(slge_fitness_fn fn, void* user_data,
                                             slge_evaluator** out);

typedef void (*slge_warning_fn)(const char* message, void* user_data);

typedef struct slge_external_options {
  const char* command;       /* run through /bin/sh -c */
  slge_macro_config macro;   /* network described in each request */
  uint32_t epochs;
  uint32_t workers;          /* evaluator processes */
  uint32_t timeout_ms;
  /* When non-null, evaluator-reported errors and timeouts become fitness 0
   * and are reported here; protocol violations always fail. */
  slge_warning_fn on_warning;
  void* warning_user_data;
} slge_external_options;

SLGE_API slge_status slge_evaluator_external(const slge_external_options* options,
                                             slge_evaluator** out);

/* Wraps `inner` in a genotype-keyed cache. Takes ownership of `inner`. */
SLGE_API slge_status slge_evaluator_memoize(slge_evaluator* inner, slge_evaluator** out);
/* Cache persistence; only valid on memoizing evaluators. */
SLGE_API slge_status slge_evaluator_cache_load(slge_evaluator* evaluator, const char* path);
SLGE_API slge_status slge_evaluator_cache_save(const slge_evaluator* evaluator, const char* path);
SLGE_API uint64_t slge_evaluator_inner_calls(const slge_evaluator* evaluator);

SLGE_API slge_status slge_evaluate(slge_evaluator* evaluator, const slge_chromosome* chromosome,
                                   double* fitness);
SLGE_API void slge_evaluator_free(slge_evaluator* evaluator);

/* ---- evolution --------------------------------------------------------- */

typedef struct slge_evolution_params {
  uint32_t population_size;
  uint32_t generations;
  uint32_t elites;
  double mutation_rate;
  double inversion_rate;
  double transposition_rate;
  uint32_t seq_length;
  double two_point_rate;
  double gene_rate;
  uint64_t rng_seed;
} slge_evolution_params;

/* Population 20, 20 generations, 1 elite, mutation 0.044, inversion and
 * transposition 0.1 with length 2, two-point 0.6, gene 0.1, seed 0. */
SLGE_API void slge_evolution_params_default(slge_evolution_params* out);

/* On SLGE_ERR_EVALUATION / _PROTOCOL / _TIMEOUT the message names the
 * chromosome being evaluated. */
SLGE_API slge_status slge_evolve(uint32_t head_length, uint32_t gene_count,
                                 const slge_evolution_params* params, slge_evaluator* evaluator,
                                 uint32_t workers, slge_run** out);
SLGE_API slge_status slge_run_best(const slge_run* run, slge_chromosome** chromosome,
                                   double* fitness);
SLGE_API size_t slge_run_generation_count(const slge_run* run);
SLGE_API slge_status slge_run_history_jsonl(const slge_run* run, char** out);
SLGE_API void slge_run_free(slge_run* run);

typedef struct slge_random_report {
  double best;
  double mean;
  double stddev;
  uint32_t count;
} slge_random_report;

SLGE_API slge_status slge_random_search(uint32_t head_length, uint32_t gene_count,
                                        uint32_t count, uint64_t seed,
                                        slge_evaluator* evaluator, slge_random_report* report,
                                        slge_chromosome** best);

/* History JSONL -> "generation,best,mean,evaluations" CSV. */
SLGE_API slge_status slge_history_to_csv(const char* jsonl, char** out);

/* ---- files ------------------------------------------------------------- */

/* Write-then-rename so readers never see a torn file. */
SLGE_API slge_status slge_write_file_atomic(const char* path, const char* content);

#ifdef __cplusplus
}
#endif

#endif /* SLGE_H */
