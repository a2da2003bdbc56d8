// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "rpdmon/rpdmon.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "core/analytics.hpp"
#include "core/config.hpp"
#include "core/entropy.hpp"
#include "core/monitor.hpp"
#include "core/replay.hpp"
#include "core/session.hpp"
#include "core/sweep.hpp"
#include "core/synth.hpp"
#include "core/trace.hpp"
#include "gateway/gateway.hpp"
#include "gateway/mock_upstream.hpp"

using nlohmann::json;

struct rpdmon_config {
  rpdmon::Config impl;
};
struct rpdmon_monitor {
  rpdmon::monitor::Monitor impl;
};
struct rpdmon_session {
  rpdmon::session::Session impl;
};
struct rpdmon_gateway {
  rpdmon::gateway::Gateway impl;
  explicit rpdmon_gateway(rpdmon::Config cfg) : impl(std::move(cfg)) {}
};
struct rpdmon_mock_upstream {
  rpdmon::gateway::MockUpstream impl;
};

namespace {

thread_local std::string t_last_error;

rpdmon_status map_status(rpdmon::Status s) {
  switch (s) {
    case rpdmon::Status::Ok: return RPDMON_OK;
    case rpdmon::Status::InvalidArgument: return RPDMON_ERR_INVALID_ARGUMENT;
    case rpdmon::Status::InvalidState: return RPDMON_ERR_INVALID_STATE;
    case rpdmon::Status::ParseError: return RPDMON_ERR_PARSE;
    case rpdmon::Status::IoError: return RPDMON_ERR_IO;
    case rpdmon::Status::HttpError: return RPDMON_ERR_HTTP;
    case rpdmon::Status::Internal: return RPDMON_ERR_INTERNAL;
  }
  return RPDMON_ERR_INTERNAL;
}

template <typename F>
rpdmon_status wrap(F&& f) noexcept {
  try {
    f();
    return RPDMON_OK;
  } catch (const rpdmon::Error& e) {
    t_last_error = e.what();
    return map_status(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return RPDMON_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return RPDMON_ERR_INTERNAL;
  }
}

template <typename T>
T* wrap_new(const char* what, T* (*make)()) noexcept {
  try {
    return make();
  } catch (const std::exception& e) {
    t_last_error = std::string(what) + ": " + e.what();
    return nullptr;
  } catch (...) {
    t_last_error = std::string(what) + ": unknown error";
    return nullptr;
  }
}

rpdmon_status require(bool cond, const char* msg) {
  if (cond) return RPDMON_OK;
  t_last_error = msg;
  return RPDMON_ERR_INVALID_ARGUMENT;
}

rpdmon_status copy_out(const std::string& s, char* buf, size_t cap, size_t* out_len) {
  if (out_len) *out_len = s.size();
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return RPDMON_OK;
}

rpdmon_decision to_c(const rpdmon::monitor::ExitDecision& d) {
  rpdmon_decision out{};
  out.kind = static_cast<int>(d.kind);
  out.at_step = d.at_step;
  out.has_rpdi = d.rpdi.has_value() ? 1 : 0;
  out.rpdi = d.rpdi.value_or(0.0);
  return out;
}

rpdmon_session_action to_c(const rpdmon::session::Action& a) {
  rpdmon_session_action out{};
  out.kind = static_cast<int>(a.kind);
  out.answer_budget = a.answer_budget;
  out.effective_answer_budget = a.effective_answer_budget;
  out.zero_remaining = a.zero_remaining ? 1 : 0;
  return out;
}

rpdmon_outcome to_c(const rpdmon::session::Outcome& o, uint64_t thinking_tokens) {
  rpdmon_outcome out{};
  out.kind = static_cast<int>(o.kind);
  out.step = o.step;
  out.has_rpdi = o.rpdi.has_value() ? 1 : 0;
  out.rpdi = o.rpdi.value_or(0.0);
  out.thinking_tokens = thinking_tokens;
  return out;
}

std::vector<rpdmon::trace::Trace> load_traces(const char* const* paths, size_t n) {
  if (!paths || n == 0) throw rpdmon::Error(rpdmon::Status::InvalidArgument, "no trace paths given");
  std::vector<rpdmon::trace::Trace> traces;
  traces.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (!paths[i]) throw rpdmon::Error(rpdmon::Status::InvalidArgument, "null trace path");
    traces.push_back(rpdmon::trace::read_file(paths[i]));
  }
  return traces;
}

std::ofstream open_out(const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rpdmon::Error(rpdmon::Status::IoError, std::string("cannot write '") + path + "'");
  return out;
}

}  // namespace

extern "C" {

const char* rpdmon_version(void) { return "1.0.0"; }

const char* rpdmon_last_error(void) { return t_last_error.c_str(); }

/* -------------------------- config -------------------------- */

rpdmon_config* rpdmon_config_new(void) {
  return wrap_new<rpdmon_config>("config_new", [] { return new rpdmon_config{}; });
}

void rpdmon_config_free(rpdmon_config* cfg) { delete cfg; }

rpdmon_status rpdmon_config_load_file(rpdmon_config* cfg, const char* path) {
  if (auto rc = require(cfg && path, "config_load_file: null argument")) return rc;
  return wrap([&] { rpdmon::config::load_file(cfg->impl, path); });
}

rpdmon_status rpdmon_config_apply_env(rpdmon_config* cfg) {
  if (auto rc = require(cfg != nullptr, "config_apply_env: null config")) return rc;
  return wrap([&] { rpdmon::config::apply_env(cfg->impl); });
}

rpdmon_status rpdmon_config_set(rpdmon_config* cfg, const char* key, const char* value) {
  if (auto rc = require(cfg && key && value, "config_set: null argument")) return rc;
  return wrap([&] { rpdmon::config::set_key(cfg->impl, key, value); });
}

rpdmon_status rpdmon_config_get(const rpdmon_config* cfg, const char* key, char* buf, size_t cap,
                                size_t* out_len) {
  if (auto rc = require(cfg && key, "config_get: null argument")) return rc;
  return wrap([&] { copy_out(rpdmon::config::get_key(cfg->impl, key), buf, cap, out_len); });
}

rpdmon_status rpdmon_config_validate(const rpdmon_config* cfg) {
  if (auto rc = require(cfg != nullptr, "config_validate: null config")) return rc;
  return wrap([&] { cfg->impl.validate(); });
}

/* -------------------------- entropy -------------------------- */

rpdmon_status rpdmon_shannon_entropy(const double* probs, size_t n, int full_distribution,
                                     double* out_nats) {
  if (auto rc = require(probs && out_nats, "shannon_entropy: null argument")) return rc;
  return wrap([&] {
    *out_nats = rpdmon::entropy::shannon_entropy(
        std::span<const double>(probs, n),
        full_distribution ? rpdmon::entropy::DistKind::Full : rpdmon::entropy::DistKind::TopK);
  });
}

rpdmon_status rpdmon_entropy_from_topk_logprobs(const double* logprobs, size_t n,
                                                rpdmon_tail_policy policy, double* out_nats) {
  if (auto rc = require(logprobs && out_nats, "entropy_from_topk_logprobs: null argument")) return rc;
  return wrap([&] {
    *out_nats = rpdmon::entropy::from_topk_logprobs(
        std::span<const double>(logprobs, n), policy == RPDMON_TAIL_IGNORE
                                                  ? rpdmon::entropy::TailPolicy::IgnoreTail
                                                  : rpdmon::entropy::TailPolicy::Renormalize);
  });
}

/* -------------------------- monitor -------------------------- */

rpdmon_monitor* rpdmon_monitor_new(const rpdmon_config* cfg) {
  if (!cfg) {
    t_last_error = "monitor_new: null config";
    return nullptr;
  }
  try {
    return new rpdmon_monitor{rpdmon::monitor::Monitor(cfg->impl.policy)};
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return nullptr;
  }
}

void rpdmon_monitor_free(rpdmon_monitor* m) { delete m; }

rpdmon_status rpdmon_monitor_observe(rpdmon_monitor* m, uint64_t step, const char* token_text,
                                     double entropy_nats, rpdmon_decision* out) {
  if (auto rc = require(m && token_text && out, "monitor_observe: null argument")) return rc;
  return wrap([&] {
    rpdmon::entropy::TokenObservation obs;
    obs.step = step;
    obs.token_id = -1;
    obs.token_text = token_text;
    obs.entropy_nats = entropy_nats;
    *out = to_c(m->impl.observe(obs));
  });
}

rpdmon_status rpdmon_monitor_ltf(const rpdmon_monitor* m, double* out) {
  if (auto rc = require(m && out, "monitor_ltf: null argument")) return rc;
  return wrap([&] { *out = m->impl.ltf(); });
}

rpdmon_status rpdmon_monitor_gtf(const rpdmon_monitor* m, double* out) {
  if (auto rc = require(m && out, "monitor_gtf: null argument")) return rc;
  return wrap([&] { *out = m->impl.gtf(); });
}

rpdmon_status rpdmon_monitor_rpdi(const rpdmon_monitor* m, double* out, int* out_defined) {
  if (auto rc = require(m && out && out_defined, "monitor_rpdi: null argument")) return rc;
  return wrap([&] {
    const auto r = m->impl.rpdi();
    *out_defined = r.has_value() ? 1 : 0;
    if (r) *out = *r;
  });
}

rpdmon_status rpdmon_monitor_rebuild(rpdmon_monitor* m) {
  if (auto rc = require(m != nullptr, "monitor_rebuild: null monitor")) return rc;
  return wrap([&] { m->impl.rebuild_sums(); });
}

uint64_t rpdmon_monitor_step(const rpdmon_monitor* m) { return m ? m->impl.step() : 0; }

int rpdmon_is_boundary(const rpdmon_config* cfg, const char* token_text) {
  if (!cfg || !token_text) return 0;
  return rpdmon::monitor::is_boundary(token_text, cfg->impl.policy.boundary_set) ? 1 : 0;
}

/* -------------------------- session -------------------------- */

rpdmon_session* rpdmon_session_new(const rpdmon_config* cfg, const char* prompt) {
  if (!cfg) {
    t_last_error = "session_new: null config";
    return nullptr;
  }
  try {
    return new rpdmon_session{
        rpdmon::session::Session(prompt ? prompt : "", cfg->impl.policy)};
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return nullptr;
  }
}

void rpdmon_session_free(rpdmon_session* s) { delete s; }

rpdmon_status rpdmon_session_feed(rpdmon_session* s, uint64_t step, const char* token_text,
                                  double entropy_nats, rpdmon_session_action* out) {
  if (auto rc = require(s && token_text && out, "session_feed: null argument")) return rc;
  return wrap([&] {
    rpdmon::entropy::TokenObservation obs;
    obs.step = step;
    obs.token_id = -1;
    obs.token_text = token_text;
    obs.entropy_nats = entropy_nats;
    *out = to_c(s->impl.feed(obs));
  });
}

rpdmon_status rpdmon_session_feed_logprobs(rpdmon_session* s, uint64_t step,
                                           const char* token_text, const double* logprobs,
                                           size_t n, rpdmon_session_action* out) {
  if (auto rc = require(s && token_text && logprobs && out, "session_feed_logprobs: null argument")) {
    return rc;
  }
  return wrap([&] {
    rpdmon::entropy::TokenObservation obs;
    obs.step = step;
    obs.token_id = -1;
    obs.token_text = token_text;
    obs.entropy_nats = rpdmon::entropy::from_topk_logprobs(std::span<const double>(logprobs, n),
                                                           s->impl.config().tail_policy);
    *out = to_c(s->impl.feed(obs));
  });
}

rpdmon_status rpdmon_session_finish_input(rpdmon_session* s, rpdmon_session_action* out) {
  if (auto rc = require(s != nullptr, "session_finish_input: null session")) return rc;
  return wrap([&] {
    const auto action = s->impl.finish_input();
    if (out) *out = to_c(action);
  });
}

rpdmon_status rpdmon_session_outcome(const rpdmon_session* s, rpdmon_outcome* out) {
  if (auto rc = require(s && out, "session_outcome: null argument")) return rc;
  return wrap([&] { *out = to_c(s->impl.outcome(), s->impl.thinking_tokens()); });
}

rpdmon_status rpdmon_session_continuation_prefix(const rpdmon_session* s, char* buf, size_t cap,
                                                 size_t* out_len) {
  if (auto rc = require(s != nullptr, "session_continuation_prefix: null session")) return rc;
  return wrap([&] {
    const std::string prefix =
        s->impl.prompt() + s->impl.reasoning() + s->impl.config().termination_marker;
    copy_out(prefix, buf, cap, out_len);
  });
}

rpdmon_status rpdmon_session_reasoning(const rpdmon_session* s, char* buf, size_t cap,
                                       size_t* out_len) {
  if (auto rc = require(s != nullptr, "session_reasoning: null session")) return rc;
  return wrap([&] { copy_out(s->impl.reasoning(), buf, cap, out_len); });
}

rpdmon_status rpdmon_session_note_answer_tokens(rpdmon_session* s, uint64_t n) {
  if (auto rc = require(s != nullptr, "session_note_answer_tokens: null session")) return rc;
  return wrap([&] { s->impl.note_answer_tokens(n); });
}

/* -------------------------- trace lab -------------------------- */

rpdmon_status rpdmon_trace_validate_file(const char* path, uint64_t* out_records) {
  if (auto rc = require(path != nullptr, "trace_validate_file: null path")) return rc;
  return wrap([&] {
    const auto t = rpdmon::trace::read_file(path);
    if (out_records) *out_records = t.records.size();
  });
}

rpdmon_status rpdmon_replay_file(const char* trace_path, const rpdmon_config* cfg,
                                 const char* series_csv_path_or_null, rpdmon_outcome* out) {
  if (auto rc = require(trace_path && cfg && out, "replay_file: null argument")) return rc;
  return wrap([&] {
    const auto t = rpdmon::trace::read_file(trace_path);
    const auto r =
        rpdmon::lab::replay(t, cfg->impl.policy, series_csv_path_or_null != nullptr);
    if (series_csv_path_or_null) {
      auto os = open_out(series_csv_path_or_null);
      rpdmon::lab::write_series_csv(r, os);
    }
    *out = to_c(r.outcome, r.thinking_tokens);
  });
}

rpdmon_status rpdmon_sweep_run(const char* const* trace_paths, size_t n_traces,
                               const uint64_t* windows, size_t n_windows, const double* lambdas,
                               size_t n_lambdas, const char* const* variants, size_t n_variants,
                               const rpdmon_config* base, int jobs, const char* csv_out_path) {
  if (auto rc = require(windows && lambdas && variants && base && csv_out_path,
                        "sweep_run: null argument")) {
    return rc;
  }
  return wrap([&] {
    const auto traces = load_traces(trace_paths, n_traces);
    std::vector<rpdmon::Variant> vs;
    for (size_t i = 0; i < n_variants; ++i) vs.push_back(rpdmon::variant_from_string(variants[i]));
    const auto result = rpdmon::lab::sweep(
        traces, std::span<const uint64_t>(windows, n_windows),
        std::span<const double>(lambdas, n_lambdas), vs, base->impl.policy, jobs);
    auto os = open_out(csv_out_path);
    rpdmon::lab::write_sweep_csv(result, os);
  });
}

rpdmon_status rpdmon_analyze_run(const char* const* trace_paths, size_t n_traces, int n_bins,
                                 double top_fraction, const char* bins_csv_path_or_null,
                                 const char* tokens_csv_path_or_null,
                                 const char* report_json_path_or_null, int* out_all_zero) {
  return wrap([&] {
    const auto traces = load_traces(trace_paths, n_traces);
    const auto bins = rpdmon::lab::entropy_contribution_bins(traces, n_bins);
    const auto table = rpdmon::lab::top_contributor_tokens(traces, top_fraction);
    if (out_all_zero) *out_all_zero = bins.all_zero ? 1 : 0;
    if (bins_csv_path_or_null) {
      auto os = open_out(bins_csv_path_or_null);
      rpdmon::lab::write_bins_csv(bins, os);
    }
    if (tokens_csv_path_or_null) {
      auto os = open_out(tokens_csv_path_or_null);
      rpdmon::lab::write_token_table_csv(table, os);
    }
    if (report_json_path_or_null) {
      json top = json::array();
      const size_t head = std::min<size_t>(table.size(), 50);
      for (size_t i = 0; i < head; ++i) {
        top.push_back(json{{"token", table[i].first}, {"count", table[i].second}});
      }
      json report{{"traces", n_traces},
                  {"tokens", bins.total_tokens},
                  {"total_entropy_nats", bins.total_entropy},
                  {"n_bins", n_bins},
                  {"top_fraction", top_fraction},
                  {"all_zero_entropy", bins.all_zero},
                  {"top_tokens", std::move(top)}};
      auto os = open_out(report_json_path_or_null);
      os << report.dump(2) << '\n';
    }
  });
}

rpdmon_status rpdmon_fixed_budget_run(const char* const* trace_paths, size_t n_traces,
                                      uint64_t budget, const char* csv_out_path,
                                      double* out_truncation_rate) {
  if (auto rc = require(csv_out_path != nullptr, "fixed_budget_run: null csv path")) return rc;
  return wrap([&] {
    const auto traces = load_traces(trace_paths, n_traces);
    const auto result = rpdmon::lab::fixed_budget_policy(traces, budget);
    if (out_truncation_rate) *out_truncation_rate = result.truncation_rate;
    auto os = open_out(csv_out_path);
    rpdmon::lab::write_fixed_budget_csv(result, os);
  });
}

rpdmon_status rpdmon_synth_run(const char* profile_spec, uint64_t seed, const char* out_path) {
  if (auto rc = require(profile_spec && out_path, "synth_run: null argument")) return rc;
  return wrap([&] {
    const auto profile = rpdmon::lab::profile_from_spec(profile_spec, seed);
    rpdmon::trace::write_file(rpdmon::lab::generate(profile), out_path);
  });
}

/* -------------------------- gateway -------------------------- */

rpdmon_gateway* rpdmon_gateway_new(const rpdmon_config* cfg) {
  if (!cfg) {
    t_last_error = "gateway_new: null config";
    return nullptr;
  }
  try {
    return new rpdmon_gateway(cfg->impl);
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return nullptr;
  }
}

void rpdmon_gateway_free(rpdmon_gateway* gw) { delete gw; }

rpdmon_status rpdmon_gateway_start(rpdmon_gateway* gw) {
  if (auto rc = require(gw != nullptr, "gateway_start: null gateway")) return rc;
  return wrap([&] { gw->impl.start(); });
}

int rpdmon_gateway_port(const rpdmon_gateway* gw) { return gw ? gw->impl.port() : -1; }

rpdmon_status rpdmon_gateway_stop(rpdmon_gateway* gw) {
  if (auto rc = require(gw != nullptr, "gateway_stop: null gateway")) return rc;
  return wrap([&] { gw->impl.stop(); });
}

rpdmon_status rpdmon_gateway_get_stats(const rpdmon_gateway* gw, rpdmon_gateway_stats* out) {
  if (auto rc = require(gw && out, "gateway_get_stats: null argument")) return rc;
  return wrap([&] {
    const auto s = gw->impl.stats();
    out->requests = s.requests;
    out->upstream_cancels = s.upstream_cancels;
    out->continuations = s.continuations;
    out->early_exits = s.early_exits;
    out->natural_ends = s.natural_ends;
    out->budget_exhausted = s.budget_exhausted;
    out->errors = s.errors;
  });
}

/* -------------------------- mock upstream -------------------------- */

rpdmon_mock_upstream* rpdmon_mock_upstream_new(void) {
  return wrap_new<rpdmon_mock_upstream>("mock_upstream_new",
                                        [] { return new rpdmon_mock_upstream{}; });
}

void rpdmon_mock_upstream_free(rpdmon_mock_upstream* mock) { delete mock; }

rpdmon_status rpdmon_mock_upstream_add_trace(rpdmon_mock_upstream* mock, const char* model,
                                             const char* trace_path) {
  if (auto rc = require(mock && trace_path, "mock_upstream_add_trace: null argument")) return rc;
  return wrap([&] { mock->impl.add_trace_file(model ? model : "", trace_path); });
}

rpdmon_status rpdmon_mock_upstream_start(rpdmon_mock_upstream* mock, int port) {
  if (auto rc = require(mock != nullptr, "mock_upstream_start: null mock")) return rc;
  return wrap([&] { mock->impl.start(port); });
}

int rpdmon_mock_upstream_port(const rpdmon_mock_upstream* mock) {
  return mock ? mock->impl.port() : -1;
}

rpdmon_status rpdmon_mock_upstream_stop(rpdmon_mock_upstream* mock) {
  if (auto rc = require(mock != nullptr, "mock_upstream_stop: null mock")) return rc;
  return wrap([&] { mock->impl.stop(); });
}

rpdmon_status rpdmon_mock_upstream_counts(const rpdmon_mock_upstream* mock,
                                          uint64_t* out_requests, uint64_t* out_continuations,
                                          uint64_t* out_aborted_streams) {
  if (auto rc = require(mock != nullptr, "mock_upstream_counts: null mock")) return rc;
  return wrap([&] {
    const auto log = mock->impl.requests();
    if (out_requests) *out_requests = log.size();
    if (out_continuations) *out_continuations = mock->impl.continuation_requests();
    if (out_aborted_streams) *out_aborted_streams = mock->impl.aborted_streams();
  });
}

} /* extern "C" */
