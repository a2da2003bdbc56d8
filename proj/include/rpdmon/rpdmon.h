/* SPDX-License-Identifier: Apache-2.0
 * Copyright 2026 the rpdmon authors
 *
 * rpdmon — streaming reasoning-trajectory monitor, C API.
 *
 * The library tracks per-token Shannon entropy of a reasoning stream,
 * computes the reasoning-path deviation index (window mean over trajectory
 * mean) in constant time per token, and signals early exit from the thinking
 * phase when the index exceeds a threshold at a semantic boundary. It also
 * ships an offline trace lab (replay, sweeps, analytics, synthesis), a
 * chat-completions streaming gateway that applies the policy to live logprob
 * streams, and a scripted mock upstream for integration testing.
 *
 * Conventions:
 *  - All handles are opaque pointers; every *_new has a matching *_free.
 *    Handles are not thread-safe individually; distinct handles may be used
 *    concurrently.
 *  - Functions return rpdmon_status; on failure, rpdmon_last_error() gives a
 *    thread-local human-readable message.
 *  - String getters copy into (buf, cap) with NUL termination and return the
 *    full untruncated length via out_len.
 */

#ifndef RPDMON_H
#define RPDMON_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RPDMON_API __declspec(dllexport)
#else
#define RPDMON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rpdmon_status {
  RPDMON_OK = 0,
  RPDMON_ERR_INVALID_ARGUMENT = 1,
  RPDMON_ERR_INVALID_STATE = 2,
  RPDMON_ERR_PARSE = 3,
  RPDMON_ERR_IO = 4,
  RPDMON_ERR_HTTP = 5,
  RPDMON_ERR_INTERNAL = 6
} rpdmon_status;

RPDMON_API const char* rpdmon_version(void);

/* Thread-local message for the most recent failure on this thread. */
RPDMON_API const char* rpdmon_last_error(void);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */
/* ------------------------------------------------------------------ */

typedef struct rpdmon_config rpdmon_config;

/* Built-in defaults: window 512, lambda 2.0, budget 16384, renormalize
 * tail policy, standard variant, marker "</think>". */
RPDMON_API rpdmon_config* rpdmon_config_new(void);
RPDMON_API void rpdmon_config_free(rpdmon_config* cfg);

/* Flat `key = value` file; see docs/config.md for the key schema. */
RPDMON_API rpdmon_status rpdmon_config_load_file(rpdmon_config* cfg, const char* path);

/* RPDMON_* environment variables, applied over the current values. */
RPDMON_API rpdmon_status rpdmon_config_apply_env(rpdmon_config* cfg);

RPDMON_API rpdmon_status rpdmon_config_set(rpdmon_config* cfg, const char* key, const char* value);
RPDMON_API rpdmon_status rpdmon_config_get(const rpdmon_config* cfg, const char* key, char* buf,
                                           size_t cap, size_t* out_len);

/* Validates the whole config; returns RPDMON_ERR_INVALID_ARGUMENT on bad values. */
RPDMON_API rpdmon_status rpdmon_config_validate(const rpdmon_config* cfg);

/* ------------------------------------------------------------------ */
/* Entropy                                                             */
/* ------------------------------------------------------------------ */

/* full_distribution != 0 requires the probabilities to sum to 1 (1e-6). */
RPDMON_API rpdmon_status rpdmon_shannon_entropy(const double* probs, size_t n,
                                                int full_distribution, double* out_nats);

typedef enum rpdmon_tail_policy {
  RPDMON_TAIL_IGNORE = 0,
  RPDMON_TAIL_RENORMALIZE = 1
} rpdmon_tail_policy;

RPDMON_API rpdmon_status rpdmon_entropy_from_topk_logprobs(const double* logprobs, size_t n,
                                                           rpdmon_tail_policy policy,
                                                           double* out_nats);

/* ------------------------------------------------------------------ */
/* Monitor                                                             */
/* ------------------------------------------------------------------ */

typedef struct rpdmon_monitor rpdmon_monitor;

typedef enum rpdmon_decision_kind {
  RPDMON_DECISION_CONTINUE = 0,
  RPDMON_DECISION_EARLY_EXIT = 1,
  RPDMON_DECISION_NATURAL_END = 2,
  RPDMON_DECISION_BUDGET_EXHAUSTED = 3
} rpdmon_decision_kind;

typedef struct rpdmon_decision {
  int kind; /* rpdmon_decision_kind */
  uint64_t at_step;
  double rpdi;  /* valid iff has_rpdi */
  int has_rpdi; /* set only for early-exit decisions */
} rpdmon_decision;

RPDMON_API rpdmon_monitor* rpdmon_monitor_new(const rpdmon_config* cfg);
RPDMON_API void rpdmon_monitor_free(rpdmon_monitor* m);

/* Steps must be consecutive starting at 1; entropy_nats finite and >= 0.
 * Returns RPDMON_ERR_INVALID_STATE after a terminal decision. */
RPDMON_API rpdmon_status rpdmon_monitor_observe(rpdmon_monitor* m, uint64_t step,
                                                const char* token_text, double entropy_nats,
                                                rpdmon_decision* out);

RPDMON_API rpdmon_status rpdmon_monitor_ltf(const rpdmon_monitor* m, double* out);
RPDMON_API rpdmon_status rpdmon_monitor_gtf(const rpdmon_monitor* m, double* out);
/* *out_defined is 0 when gtf is below the epsilon guard; *out is then unset. */
RPDMON_API rpdmon_status rpdmon_monitor_rpdi(const rpdmon_monitor* m, double* out,
                                             int* out_defined);
RPDMON_API rpdmon_status rpdmon_monitor_rebuild(rpdmon_monitor* m);
RPDMON_API uint64_t rpdmon_monitor_step(const rpdmon_monitor* m);

/* Boundary test against the config's boundary set (suffix match on the raw
 * and trailing-whitespace-stripped token text). Returns 0 or 1. */
RPDMON_API int rpdmon_is_boundary(const rpdmon_config* cfg, const char* token_text);

/* ------------------------------------------------------------------ */
/* Session                                                             */
/* ------------------------------------------------------------------ */

typedef struct rpdmon_session rpdmon_session;

typedef enum rpdmon_action_kind {
  RPDMON_ACTION_KEEP_STREAMING = 0,
  RPDMON_ACTION_ENACT_EXIT = 1,
  RPDMON_ACTION_FINISH = 2
} rpdmon_action_kind;

typedef struct rpdmon_session_action {
  int kind; /* rpdmon_action_kind */
  uint64_t answer_budget;           /* L_max - step; 0 when the budget is exhausted */
  uint64_t effective_answer_budget; /* what to request for the answer */
  int zero_remaining;               /* budget-exhaustion flag */
} rpdmon_session_action;

typedef enum rpdmon_outcome_kind {
  RPDMON_OUTCOME_PENDING = 0,
  RPDMON_OUTCOME_EXITED_EARLY = 1,
  RPDMON_OUTCOME_ENDED_NATURALLY = 2,
  RPDMON_OUTCOME_BUDGET_EXHAUSTED = 3
} rpdmon_outcome_kind;

typedef struct rpdmon_outcome {
  int kind; /* rpdmon_outcome_kind */
  uint64_t step;
  double rpdi;  /* valid iff has_rpdi */
  int has_rpdi;
  uint64_t thinking_tokens;
} rpdmon_outcome;

RPDMON_API rpdmon_session* rpdmon_session_new(const rpdmon_config* cfg, const char* prompt);
RPDMON_API void rpdmon_session_free(rpdmon_session* s);

RPDMON_API rpdmon_status rpdmon_session_feed(rpdmon_session* s, uint64_t step,
                                             const char* token_text, double entropy_nats,
                                             rpdmon_session_action* out);
RPDMON_API rpdmon_status rpdmon_session_feed_logprobs(rpdmon_session* s, uint64_t step,
                                                      const char* token_text,
                                                      const double* logprobs, size_t n,
                                                      rpdmon_session_action* out);

/* Input stream ended without marker or exit: ends the session naturally. */
RPDMON_API rpdmon_status rpdmon_session_finish_input(rpdmon_session* s,
                                                     rpdmon_session_action* out);

RPDMON_API rpdmon_status rpdmon_session_outcome(const rpdmon_session* s, rpdmon_outcome* out);
RPDMON_API rpdmon_status rpdmon_session_continuation_prefix(const rpdmon_session* s, char* buf,
                                                            size_t cap, size_t* out_len);
RPDMON_API rpdmon_status rpdmon_session_reasoning(const rpdmon_session* s, char* buf, size_t cap,
                                                  size_t* out_len);
RPDMON_API rpdmon_status rpdmon_session_note_answer_tokens(rpdmon_session* s, uint64_t n);

/* ------------------------------------------------------------------ */
/* Trace lab                                                           */
/* ------------------------------------------------------------------ */

/* Validates a JSONL trace; parse errors carry the line number. */
RPDMON_API rpdmon_status rpdmon_trace_validate_file(const char* path, uint64_t* out_records);

/* Replays a trace under cfg; optionally writes the per-step ltf/gtf/rpdi
 * series as CSV. */
RPDMON_API rpdmon_status rpdmon_replay_file(const char* trace_path, const rpdmon_config* cfg,
                                            const char* series_csv_path_or_null,
                                            rpdmon_outcome* out);

/* (window, lambda, variant) grid sweep over a trace corpus; writes CSV.
 * variants are "standard", "no-gtf", "no-ltf", "no-btm". */
RPDMON_API rpdmon_status rpdmon_sweep_run(const char* const* trace_paths, size_t n_traces,
                                          const uint64_t* windows, size_t n_windows,
                                          const double* lambdas, size_t n_lambdas,
                                          const char* const* variants, size_t n_variants,
                                          const rpdmon_config* base, int jobs,
                                          const char* csv_out_path);

/* Entropy-contribution percentile bins + top-contributor word table.
 * Any output path may be NULL to skip that artifact. */
RPDMON_API rpdmon_status rpdmon_analyze_run(const char* const* trace_paths, size_t n_traces,
                                            int n_bins, double top_fraction,
                                            const char* bins_csv_path_or_null,
                                            const char* tokens_csv_path_or_null,
                                            const char* report_json_path_or_null,
                                            int* out_all_zero);

/* Fixed token-budget truncation baseline; writes per-trace CSV. */
RPDMON_API rpdmon_status rpdmon_fixed_budget_run(const char* const* trace_paths, size_t n_traces,
                                                 uint64_t budget, const char* csv_out_path,
                                                 double* out_truncation_rate);

/* Deterministic synthetic trace generation. profile_spec is a preset name
 * (flat, spike, natural-end, split-marker, budget, longtail) or a JSON
 * profile object. */
RPDMON_API rpdmon_status rpdmon_synth_run(const char* profile_spec, uint64_t seed,
                                          const char* out_path);

/* ------------------------------------------------------------------ */
/* Gateway                                                             */
/* ------------------------------------------------------------------ */

typedef struct rpdmon_gateway rpdmon_gateway;

typedef struct rpdmon_gateway_stats {
  uint64_t requests;
  uint64_t upstream_cancels;
  uint64_t continuations;
  uint64_t early_exits;
  uint64_t natural_ends;
  uint64_t budget_exhausted;
  uint64_t errors;
} rpdmon_gateway_stats;

RPDMON_API rpdmon_gateway* rpdmon_gateway_new(const rpdmon_config* cfg);
RPDMON_API void rpdmon_gateway_free(rpdmon_gateway* gw);

/* Binds gateway.listen:gateway.port (0 = ephemeral), health-checks the
 * upstream unless skipped, and serves on a background thread. */
RPDMON_API rpdmon_status rpdmon_gateway_start(rpdmon_gateway* gw);
RPDMON_API int rpdmon_gateway_port(const rpdmon_gateway* gw);
RPDMON_API rpdmon_status rpdmon_gateway_stop(rpdmon_gateway* gw);
RPDMON_API rpdmon_status rpdmon_gateway_get_stats(const rpdmon_gateway* gw,
                                                  rpdmon_gateway_stats* out);

/* ------------------------------------------------------------------ */
/* Mock upstream                                                       */
/* ------------------------------------------------------------------ */

typedef struct rpdmon_mock_upstream rpdmon_mock_upstream;

RPDMON_API rpdmon_mock_upstream* rpdmon_mock_upstream_new(void);
RPDMON_API void rpdmon_mock_upstream_free(rpdmon_mock_upstream* mock);

/* model "" registers the fallback trace. */
RPDMON_API rpdmon_status rpdmon_mock_upstream_add_trace(rpdmon_mock_upstream* mock,
                                                        const char* model,
                                                        const char* trace_path);
RPDMON_API rpdmon_status rpdmon_mock_upstream_start(rpdmon_mock_upstream* mock, int port);
RPDMON_API int rpdmon_mock_upstream_port(const rpdmon_mock_upstream* mock);
RPDMON_API rpdmon_status rpdmon_mock_upstream_stop(rpdmon_mock_upstream* mock);
RPDMON_API rpdmon_status rpdmon_mock_upstream_counts(const rpdmon_mock_upstream* mock,
                                                     uint64_t* out_requests,
                                                     uint64_t* out_continuations,
                                                     uint64_t* out_aborted_streams);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RPDMON_H */
