/* C interface to the rewarddance engine.
 *
 * Every function returns an rd_status. On failure rd_last_error() describes
 * the most recent error on the calling thread. Objects are opaque handles
 * released with their *_free function; strings returned through char** are
 * released with rd_string_free. Structured results are JSON text.
 */
#ifndef REWARDDANCE_H
#define REWARDDANCE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RD_API __declspec(dllexport)
#else
#define RD_API __attribute__((visibility("default")))
#endif

typedef enum rd_status {
    RD_OK = 0,
    RD_ERR_INVALID_ARGUMENT = 1,
    RD_ERR_DIMENSION = 2,
    RD_ERR_NON_FINITE = 3,
    RD_ERR_EMPTY = 4,
    RD_ERR_IO = 5,
    RD_ERR_PARSE = 6,
    RD_ERR_CONFIG = 7,
    RD_ERR_SCORING = 8,
    RD_ERR_NOT_DIFFERENTIABLE = 9,
    RD_ERR_DIVERGED = 10,
    RD_ERR_REMOTE_TIMEOUT = 11,
    RD_ERR_REMOTE_HTTP = 12,
    RD_ERR_REMOTE_MALFORMED = 13,
    RD_ERR_REMOTE_NO_DECISION = 14,
    RD_ERR_PORT_BINDING = 15,
    RD_ERR_INTERNAL = 16
} rd_status;

typedef struct rd_config rd_config;
typedef struct rd_dataset rd_dataset;
typedef struct rd_reward_model rd_reward_model;
typedef struct rd_backend rd_backend;
typedef struct rd_flow rd_flow;

RD_API const char* rd_version(void);
RD_API const char* rd_status_name(rd_status status);
RD_API const char* rd_last_error(void);
RD_API void rd_string_free(char* s);

/* Sends library warnings and debug output to stderr at the given level
 * ("debug", "info", "warn", "error", "off"). */
RD_API rd_status rd_set_log_level(const char* level);

/* ---- configuration (key=value files with `include`) ---- */
RD_API rd_status rd_config_new(rd_config** out);
RD_API rd_status rd_config_load(const char* path, rd_config** out);
RD_API rd_status rd_config_set(rd_config* cfg, const char* key, const char* value);
RD_API rd_status rd_config_get(const rd_config* cfg, const char* key, const char* fallback, char** out);
/* Sorted key=value snapshot, one entry per line. */
RD_API rd_status rd_config_dump(const rd_config* cfg, char** out);
RD_API void rd_config_free(rd_config* cfg);

/* ---- preference datasets (JSONL) ---- */
/* Synthetic pairs from the data.* keys. */
RD_API rd_status rd_dataset_generate(const rd_config* cfg, rd_dataset** out);
RD_API rd_status rd_dataset_load(const char* path, rd_dataset** out);
RD_API rd_status rd_dataset_save(const rd_dataset* ds, const char* path);
RD_API rd_status rd_dataset_size(const rd_dataset* ds, size_t* out);
/* JSON array of {pair_index, kind, message}; empty array when valid. */
RD_API rd_status rd_dataset_validate(const rd_dataset* ds, size_t dim, char** out_json);
RD_API void rd_dataset_free(rd_dataset* ds);

/* ---- reward models ---- */
/* Trains from the train.* keys on the Train split; dim and classes come from
 * data.dim / data.num_classes. out_stats_json receives per-epoch losses. */
RD_API rd_status rd_reward_model_train(const rd_config* cfg, const rd_dataset* ds, rd_reward_model** out,
                                       char** out_stats_json);
RD_API rd_status rd_reward_model_load(const char* path, rd_reward_model** out);
RD_API rd_status rd_reward_model_save(const rd_reward_model* rm, const char* path);
/* {paradigm, dim, num_classes, layer_sizes, parameters} */
RD_API rd_status rd_reward_model_info(const rd_reward_model* rm, char** out_json);
RD_API void rd_reward_model_free(rd_reward_model* rm);

/* ---- scoring backends ---- */
/* normalization: "yes_no_pair" or "full_vocab". */
RD_API rd_status rd_backend_from_reward_model(const rd_reward_model* rm, const char* normalization, rd_backend** out);
/* mode: "hard" or "soft". Soft mode scores with the oracle quality of the
 * standard mixture from data.dim, data.num_classes, data.radius and
 * oracle.tau (default data.quality_tau). */
RD_API rd_status rd_backend_oracle(const rd_config* cfg, const char* mode, rd_backend** out);
/* Remote OpenAI-compatible endpoint from the remote.* keys. */
RD_API rd_status rd_backend_remote(const rd_config* cfg, const char* normalization, rd_backend** out);
/* Wraps a backend so that r(a,b) + r(b,a) = 1. */
RD_API rd_status rd_backend_symmetrize(const rd_backend* inner, rd_backend** out);
RD_API rd_status rd_backend_name(const rd_backend* be, char** out);
/* Scores one request given as JSON {prompt_id, prompt_text, condition,
 * candidate_a, candidate_b?, instruction?}; returns the RewardScore JSON. */
RD_API rd_status rd_backend_score(const rd_backend* be, const char* request_json, char** out_json);
RD_API void rd_backend_free(rd_backend* be);

/* ---- evaluation ---- */
/* split: "train", "id" or "ood". Returns an AccuracyReport JSON. */
RD_API rd_status rd_eval_accuracy(const rd_backend* be, const rd_dataset* ds, const char* split, size_t threads,
                                  char** out_json);
/* Judges chosen (system A) against rejected (system B) per pair; returns
 * {verdicts, tally, gsb}. */
RD_API rd_status rd_judge(const rd_backend* be, const rd_dataset* ds, double tau, char** out_json);
/* Trains one reward model per width (train.* keys) and returns rows of
 * {width, id_accuracy, ood_accuracy}. */
RD_API rd_status rd_scaling_report(const rd_config* cfg, const rd_dataset* ds, const size_t* widths, size_t n_widths,
                                   char** out_json);
RD_API rd_status rd_gsb_score(size_t good, size_t same, size_t bad, double* out);

/* ---- toy generator ---- */
/* Trains on the standard mixture from the flow.* keys (flow.dim,
 * flow.num_classes, flow.radius, flow.stddev, flow.train_points). */
RD_API rd_status rd_flow_train(const rd_config* cfg, rd_flow** out, char** out_stats_json);
RD_API rd_status rd_flow_load(const char* path, rd_flow** out);
RD_API rd_status rd_flow_save(const rd_flow* flow, const char* path);
RD_API rd_status rd_flow_num_classes(const rd_flow* flow, size_t* out);
/* n samples, conditions round-robin, seeds derived from seed. Writes a CSV
 * (x, y, condition, seed) and, if jsonl_path is non-null, candidate lines
 * {prompt_id, prompt_text, condition, candidate}. */
RD_API rd_status rd_flow_export_samples(const rd_flow* flow, size_t n, size_t steps, uint64_t seed, const char* csv_path,
                                        const char* jsonl_path);
/* Mean oracle quality exp(-||x - mu_c||^2 / 2 tau^2) over n samples. */
RD_API rd_status rd_flow_mean_quality(const rd_flow* flow, const rd_config* cfg, size_t n, size_t steps, uint64_t seed,
                                      double* out);
RD_API void rd_flow_free(rd_flow* flow);

/* ---- Best-of-N ---- */
/* Reads the candidates JSONL file written by rd_flow_export_samples and
 * groups it by prompt_id. mode: "top" or "bottom". Returns per-prompt tournament
 * results with the selected ids. */
RD_API rd_status rd_bon_select(const rd_backend* be, const char* candidates_path, const char* mode, size_t k,
                               size_t threads, char** out_json);

/* ---- ReFL ---- */
/* Fine-tunes with the refl.* keys; writes the reward log CSV. Returns
 * {iterations, final_window_mean, final_window_std, aborted, references}. */
RD_API rd_status rd_refl_run(const rd_flow* flow, const rd_backend* be, const rd_config* cfg, const char* log_csv_path,
                             rd_flow** out_flow, char** out_json);
/* Flags collapsed-variance windows in a reward log CSV. */
RD_API rd_status rd_detect_variance_collapse(const char* log_csv_path, size_t window, double threshold, char** out_json);

/* ---- Search over Paths ---- */
RD_API rd_status rd_tts_search(const rd_flow* flow, const rd_backend* verifier, int condition, const rd_config* cfg,
                               const char* audit_jsonl_path, char** out_json);

/* ---- reports ---- */
/* Smoothed reward curve with a variance band. */
RD_API rd_status rd_report_reward_curve(const char* log_csv_path, size_t smoothing_window, const char* title,
                                        const char* svg_path);
/* points_json: array of {label, final_metric, late_variance, width}. */
RD_API rd_status rd_report_bubble_chart(const char* points_json, const char* title, const char* svg_path);
/* rows_json as returned by rd_scaling_report. */
RD_API rd_status rd_report_scaling(const char* rows_json, const char* csv_path, const char* svg_path);

/* ---- utilities ---- */
/* git-style blob SHA-1 of a file, lower-case hex. */
RD_API rd_status rd_hash_file(const char* path, char** out);
/* Fast built-in checks; *out_passed is 1 when all pass. */
RD_API rd_status rd_self_test(int* out_passed, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* REWARDDANCE_H */
