#ifndef FFAE_FFAE_H
#define FFAE_FFAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(FFAE_BUILDING_LIBRARY)
#define FFAE_API __attribute__((visibility("default")))
#else
#define FFAE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ffae_status {
    FFAE_OK = 0,
    FFAE_ERR_INVALID_ARGUMENT = 1,
    FFAE_ERR_IO = 2,
    FFAE_ERR_FORMAT = 3,
    FFAE_ERR_NUMERIC = 4,
    FFAE_ERR_INTERNAL = 5
} ffae_status;

/* Message for the last failing call on this thread; "" after success. */
FFAE_API const char* ffae_last_error(void);
FFAE_API const char* ffae_status_name(ffae_status status);

typedef struct ffae_corpus ffae_corpus;
typedef struct ffae_codebook ffae_codebook;
typedef struct ffae_run_config ffae_run_config;
typedef struct ffae_model ffae_model;

/* Corpus: synthetic fashion items, n_items spread evenly over n_categories. */
FFAE_API ffae_status ffae_corpus_generate(size_t n_items, size_t n_categories, uint64_t seed, ffae_corpus** out);
FFAE_API ffae_status ffae_corpus_save(const ffae_corpus* corpus, const char* dir);
FFAE_API ffae_status ffae_corpus_load(const char* dir, ffae_corpus** out);
FFAE_API size_t ffae_corpus_size(const ffae_corpus* corpus);
FFAE_API size_t ffae_corpus_vocab_size(const ffae_corpus* corpus);
FFAE_API void ffae_corpus_free(ffae_corpus* corpus);

/* Patch codebook over every patch of the corpus images. */
FFAE_API ffae_status ffae_codebook_train(const ffae_corpus* corpus, size_t k, size_t iterations, size_t patch_size,
                                         uint64_t seed, ffae_codebook** out);
FFAE_API ffae_status ffae_codebook_save(const ffae_codebook* codebook, const char* path);
FFAE_API ffae_status ffae_codebook_load(const char* path, ffae_codebook** out);
FFAE_API size_t ffae_codebook_size(const ffae_codebook* codebook);
FFAE_API void ffae_codebook_free(ffae_codebook* codebook);

/* Run configuration. profile is "desk" or "paper" (NULL means desk). */
FFAE_API ffae_status ffae_run_config_create(const char* profile, ffae_run_config** out);
FFAE_API ffae_status ffae_run_config_load(const char* path, ffae_run_config** out);
FFAE_API ffae_status ffae_run_config_set(ffae_run_config* config, const char* key, const char* value);
/* Writes key=value text into buf (NUL-terminated, truncated to cap) and the
   full length excluding the NUL into *needed. buf may be NULL when cap is 0. */
FFAE_API ffae_status ffae_run_config_to_text(const ffae_run_config* config, char* buf, size_t cap, size_t* needed);
FFAE_API void ffae_run_config_free(ffae_run_config* config);

typedef void (*ffae_progress_fn)(size_t step, const char* task, double loss, void* user);

/* Pre-trains a fresh model (or continues the checkpoint in resume_dir, which
   may be NULL) until config steps are done. Checkpoints go to out_dir at the
   configured cadence and at the end. progress may be NULL. out may be NULL. */
FFAE_API ffae_status ffae_pretrain(const ffae_run_config* config, const ffae_corpus* corpus,
                                   const ffae_codebook* codebook, const char* out_dir, const char* resume_dir,
                                   ffae_progress_fn progress, void* user, ffae_model** out);
FFAE_API ffae_status ffae_model_load(const char* dir, ffae_model** out);
FFAE_API ffae_status ffae_model_save(const ffae_model* model, const char* dir);
FFAE_API size_t ffae_model_parameter_count(const ffae_model* model);
FFAE_API void ffae_model_free(ffae_model* model);

typedef struct ffae_finetune_options {
    const char* label_field; /* "category" or "subcategory" */
    size_t steps;
    size_t batch_size;
    double lr;
    int freeze_backbone;
    uint64_t seed;
} ffae_finetune_options;

FFAE_API ffae_finetune_options ffae_finetune_defaults(void);

typedef struct ffae_classification_result {
    double accuracy;
    double macro_f1;
    double final_loss;
    size_t num_classes;
    size_t num_items;
} ffae_classification_result;

/* Trains a linear head over the fused [CLS] state; the model is updated in
   place unless the backbone is frozen. */
FFAE_API ffae_status ffae_finetune(ffae_model* model, const ffae_corpus* corpus, const ffae_finetune_options* options,
                                   ffae_classification_result* out);

typedef enum ffae_protocol { FFAE_PROTOCOL_RANDOM_M = 0, FFAE_PROTOCOL_FULL = 1 } ffae_protocol;
typedef enum ffae_direction { FFAE_I2T = 0, FFAE_T2I = 1 } ffae_direction;

typedef struct ffae_eval_run {
    ffae_protocol protocol;
    ffae_direction direction;
    double recall_at_1;
    double recall_at_5;
    double recall_at_10;
    double mean;
    uint64_t seed;
    size_t m;
    size_t queries;
    size_t clamped_queries;
} ffae_eval_run;

/* Retrieval over pooled contrastive features. m and seed only matter for
   random_m. itm_rerank_top > 0 re-scores that many top candidates per query
   with the matching head. */
FFAE_API ffae_status ffae_evaluate(const ffae_model* model, const ffae_corpus* corpus, ffae_protocol protocol,
                                   ffae_direction direction, size_t m, uint64_t seed, size_t itm_rerank_top,
                                   ffae_eval_run* out);
FFAE_API ffae_status ffae_eval_run_to_json(const ffae_eval_run* run, char* buf, size_t cap, size_t* needed);
FFAE_API ffae_status ffae_eval_run_from_json(const char* json, ffae_eval_run* out);

/* metrics.csv and summary.txt in out_dir; loss logs are CSV files written by
   pre-training. */
FFAE_API ffae_status ffae_report(const char* out_dir, const ffae_eval_run* runs, size_t n_runs,
                                 const char* const* loss_log_paths, size_t n_logs);

/* Finite-difference check of one loss ("aetp", "apir", "itc", "mlm", "itm")
   on a seeded two-item batch; desk_scale selects the default desk
   architecture instead of a tiny one. *max_relative_error receives the
   worst coordinate. */
FFAE_API ffae_status ffae_gradcheck(const char* task, uint64_t seed, size_t coords_per_param, int desk_scale,
                                    double* max_relative_error);

#ifdef __cplusplus
}
#endif

#endif
