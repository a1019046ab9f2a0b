// Copyright 2026 The eqdf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EQDF_H
#define EQDF_H

#include <stddef.h>
#include <stdint.h>

#if defined(EQDF_BUILDING_LIBRARY)
#define EQDF_API __attribute__((visibility("default")))
#else
#define EQDF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; they double as the CLI exit codes. */
typedef enum eqdf_status {
  EQDF_OK = 0,
  EQDF_E_USAGE = 1,
  EQDF_E_DATA = 2,
  EQDF_E_NUMERIC = 3,
  EQDF_E_INTERNAL = 4
} eqdf_status;

typedef enum eqdf_stage {
  EQDF_STAGE_SYNTH = 0,
  EQDF_STAGE_ZOO,
  EQDF_STAGE_ATTACK_SWEEP,
  EQDF_STAGE_REJECT_SWEEP,
  EQDF_STAGE_REPORT,
  EQDF_STAGE_ALL
} eqdf_stage;

typedef struct eqdf_session eqdf_session;
typedef struct eqdf_model eqdf_model;

typedef void (*eqdf_log_fn)(const char* line, void* user);

EQDF_API const char* eqdf_version(void);

/* Message of the last failed call on this thread; "" if none. */
EQDF_API const char* eqdf_last_error(void);

/* Sessions hold an experiment configuration and an output directory. */
EQDF_API eqdf_status eqdf_session_create(eqdf_session** out);
EQDF_API void eqdf_session_destroy(eqdf_session* s);
EQDF_API eqdf_status eqdf_session_load_config(eqdf_session* s, const char* path);
EQDF_API eqdf_status eqdf_session_parse_config(eqdf_session* s, const char* text);
EQDF_API eqdf_status eqdf_session_set_out(eqdf_session* s, const char* dir);
EQDF_API eqdf_status eqdf_session_set_seed(eqdf_session* s, uint64_t seed);
EQDF_API eqdf_status eqdf_session_set_threads(eqdf_session* s, unsigned threads);
EQDF_API eqdf_status eqdf_session_set_force(eqdf_session* s, int force);
EQDF_API eqdf_status eqdf_session_set_logger(eqdf_session* s, eqdf_log_fn fn, void* user);

/* Writes the effective configuration text. With buf == NULL only *needed is
   set (including the terminating NUL). */
EQDF_API eqdf_status eqdf_session_config_text(const eqdf_session* s, char* buf, size_t cap, size_t* needed);

EQDF_API eqdf_status eqdf_run_stage(eqdf_session* s, eqdf_stage stage);

/* Trained checkpoints. Inputs are row-major (n, input_len) waveforms. */
EQDF_API eqdf_status eqdf_model_load(const char* path, eqdf_model** out);
EQDF_API void eqdf_model_destroy(eqdf_model* m);
EQDF_API eqdf_status eqdf_model_info(const eqdf_model* m, size_t* num_classes, size_t* input_len,
                                     size_t* feature_dim);
EQDF_API eqdf_status eqdf_model_predict(const eqdf_model* m, const double* x, size_t n, int* labels);
EQDF_API eqdf_status eqdf_model_logits(const eqdf_model* m, const double* x, size_t n, double* logits);
EQDF_API eqdf_status eqdf_model_features(const eqdf_model* m, const double* x, size_t n, double* features);

/* Metric helpers. */
EQDF_API eqdf_status eqdf_binomial_two_sided_p(uint64_t k, uint64_t n, double* p);
EQDF_API eqdf_status eqdf_trapezoid_auc(const double* x, const double* y, size_t n, int normalize, double* auc);
/* *defined is 0 when either input has zero variance; *r is then NaN. */
EQDF_API eqdf_status eqdf_pearson(const double* x, const double* y, size_t n, double* r, int* defined);
EQDF_API eqdf_status eqdf_max_gap(const double* values, size_t n, double* gap);

#ifdef __cplusplus
}
#endif

#endif /* EQDF_H */
