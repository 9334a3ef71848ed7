/*
 * Copyright 2026 The clforge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to clforge. All functions are safe to call from C; strings
 * returned through char** are heap-allocated and must be released with
 * clf_string_free. On failure the status code says which kind of error
 * occurred and clf_last_error() describes it (thread-local). */

#ifndef CLFORGE_CLFORGE_H_
#define CLFORGE_CLFORGE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CLF_API __declspec(dllexport)
#else
#define CLF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clf_status {
  CLF_OK = 0,
  CLF_ERR_USAGE = 1,
  CLF_ERR_DATA = 2,
  CLF_ERR_TRAINING = 3,
  CLF_ERR_INTERNAL = 4
} clf_status;

typedef struct clf_config clf_config;
typedef struct clf_scenario clf_scenario;
typedef struct clf_checkpoint clf_checkpoint;

typedef void (*clf_progress_fn)(const char* message, void* user_data);

CLF_API const char* clf_version(void);
CLF_API const char* clf_last_error(void);
CLF_API const char* clf_status_name(clf_status status);
CLF_API void clf_string_free(char* s);

/* ---- run configuration ---- */
CLF_API clf_status clf_config_default(clf_config** out);
CLF_API clf_status clf_config_load(const char* path, clf_config** out);
/* base_dir resolves a relative "scenario" entry; may be NULL. */
CLF_API clf_status clf_config_parse(const char* json, const char* base_dir, clf_config** out);
CLF_API clf_status clf_config_set_model_kind(clf_config* cfg, const char* kind);
/* params_json may be NULL for defaults. */
CLF_API clf_status clf_config_set_strategy(clf_config* cfg, const char* name, const char* params_json);
CLF_API clf_status clf_config_apply_env(clf_config* cfg);
CLF_API clf_status clf_config_to_json(const clf_config* cfg, char** out);
CLF_API clf_status clf_config_hash(const clf_config* cfg, char** out);
CLF_API void clf_config_free(clf_config* cfg);

/* ---- corpus ---- */
/* Synthetic corpus from a generator config; writes <out_dir>/corpus.jsonl. */
CLF_API clf_status clf_gen_corpus(const char* config_path, const char* out_dir, size_t* n_methods);
/* Methods from every .java file under src_dir; writes <out_dir>/corpus.jsonl. */
CLF_API clf_status clf_extract(const char* src_dir, const char* manifest_dir, const char* out_dir, size_t* n_methods);
/* Builds the ID/OOD scenario and writes it under out_dir. stats_json may be NULL. */
CLF_API clf_status clf_split(const char* corpus_path, const char* manifest_dir, size_t id_test, size_t id_valid,
                             uint64_t seed, const char* out_dir, char** stats_json);

CLF_API clf_status clf_scenario_load(const char* path, clf_scenario** out);
CLF_API clf_status clf_scenario_domain_count(const clf_scenario* scenario, size_t* out);
/* Leakage check; report_json may be NULL. */
CLF_API clf_status clf_scenario_validate(const clf_scenario* scenario, size_t* violations, char** report_json);
CLF_API void clf_scenario_free(clf_scenario* scenario);

/* ---- models ---- */
/* Pre-trains the configured model kind on the ID split and saves a checkpoint. */
CLF_API clf_status clf_pretrain(const clf_config* cfg, const clf_scenario* scenario, const char* out_ckpt,
                                clf_progress_fn progress, void* user_data, char** summary_json);
CLF_API clf_status clf_checkpoint_load(const char* path, clf_checkpoint** out);
CLF_API clf_status clf_checkpoint_info(const clf_checkpoint* ckpt, char** out);
CLF_API void clf_checkpoint_free(clf_checkpoint* ckpt);

/* ---- experiments ---- */
/* Writes <out_dir>/zeroshot.json; result_json may be NULL. */
CLF_API clf_status clf_zeroshot(const clf_checkpoint* ckpt, const clf_scenario* scenario, const clf_config* cfg,
                                const char* out_dir, char** result_json);
/* Continual fine-tuning with cfg's strategy; writes the report files to out_dir. */
CLF_API clf_status clf_finetune(const clf_checkpoint* ckpt, const clf_scenario* scenario, const clf_config* cfg,
                                const char* out_dir, clf_progress_fn progress, void* user_data, char** report_json);
CLF_API clf_status clf_report_merge(const char* const* run_dirs, size_t n_runs, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* CLFORGE_CLFORGE_H_ */
