/* Copyright 2026 The Mechagency Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MECHAGENCY_MECHAGENCY_H_
#define MECHAGENCY_MECHAGENCY_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MECHAGENCY_BUILDING_LIBRARY)
#define MCA_API __attribute__((visibility("default")))
#else
#define MCA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mca_status {
  MCA_OK = 0,
  MCA_INVALID_ARGUMENT,
  MCA_NON_FINITE_DOMAIN,
  MCA_NO_CONVERGENCE,
  MCA_INCOMPLETE_SOLUTION,
  MCA_EMPTY_DOMAIN,
  MCA_EMPTY_RESPONSE_SET,
  MCA_MISSING_VARIABLES,
  MCA_PARTIAL_COLLECTION,
  MCA_TOO_MANY_SETTINGS,
  MCA_NEGATIVE_PREFERENCE,
  MCA_INVALID_CONFIG,
  MCA_DEGENERATE_DESIGN,
  MCA_SHAPE_MISMATCH,
  MCA_NON_FINITE,
  MCA_UNKNOWN_EXAMPLE,
  MCA_IO,
  MCA_INTERNAL
} mca_status;

typedef struct mca_context mca_context;
typedef struct mca_result mca_result;
typedef struct mca_model mca_model;

MCA_API const char* mca_version(void);
MCA_API const char* mca_status_string(mca_status status);

/* Context: seed, thread count and the message of the last failed call. */
MCA_API mca_status mca_context_create(mca_context** out);
MCA_API void mca_context_destroy(mca_context* ctx);
MCA_API const char* mca_context_last_error(const mca_context* ctx);
MCA_API mca_status mca_context_set_seed(mca_context* ctx, uint64_t seed);
/* 0 selects the hardware concurrency. */
MCA_API mca_status mca_context_set_threads(mca_context* ctx, unsigned threads);

/* Results carry a JSON document and a boolean verdict. */
MCA_API const char* mca_result_json(const mca_result* r);
MCA_API int mca_result_verdict(const mca_result* r);
MCA_API void mca_result_destroy(mca_result* r);

/* JSON array of names. */
MCA_API mca_status mca_examples_list(mca_context* ctx, mca_result** out);
MCA_API mca_status mca_models_list(mca_context* ctx, mca_result** out);

/* grid_step < 0 keeps each model's default. */
MCA_API mca_status mca_examples_run(mca_context* ctx, const char* name,
                                    double grid_step, mca_result** out);

/* subsets: NULL or "default" keeps the pair's suite, "all" or "full"
   overrides it. */
MCA_API mca_status mca_abstraction_check(mca_context* ctx, const char* low,
                                         const char* high, double grid_step,
                                         const char* subsets,
                                         mca_result** out);

/* config_json may be NULL. An empty or NULL out_dir writes no files.
   The mechanism argument overrides the config's. */
MCA_API mca_status mca_experiment_run(mca_context* ctx, const char* mechanism,
                                      const char* config_json,
                                      const char* out_dir, const char* command,
                                      mca_result** out);

MCA_API mca_status mca_model_from_registry(mca_context* ctx, const char* name,
                                           double grid_step, mca_model** out);
MCA_API mca_status mca_model_load_json(mca_context* ctx, const char* json,
                                       mca_model** out);
MCA_API mca_status mca_model_to_json(mca_context* ctx, const mca_model* m,
                                     mca_result** out);
/* intervention_json maps variable names to numbers or coordinate arrays.
   The result lists mechanism solutions and their object distributions. */
MCA_API mca_status mca_model_solve(mca_context* ctx, const mca_model* m,
                                   const char* intervention_json,
                                   mca_result** out);
MCA_API void mca_model_destroy(mca_model* m);

/* Closed-form equilibrium of the country game: q (length n) and Q_W. */
MCA_API mca_status mca_ne_from_params(mca_context* ctx, size_t n,
                                      const double* alpha, const double* delta,
                                      double* q_out, double* total_out);

#ifdef __cplusplus
}
#endif

#endif  // MECHAGENCY_MECHAGENCY_H_
