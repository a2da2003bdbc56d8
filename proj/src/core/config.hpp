#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Configuration for the monitor policy, the upstream connection, and the
 * gateway, plus a flat key=value config file loader.
 *
 * Precedence is resolved by application order: construct defaults, then
 * load_file(), then apply_env(), then per-key set() calls from CLI flags.
 * Later layers overwrite earlier ones key by key.
 *
 * The key schema is documented in docs/config.md. Environment variables map
 * keys to RPDMON_<KEY> with '.' and '-' replaced by '_' and upper-cased
 * (e.g. upstream.base_url -> RPDMON_UPSTREAM_BASE_URL).
 */

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "common.hpp"
#include "entropy.hpp"

namespace rpdmon {

enum class Variant { Standard, NoGtf, NoLtf, NoBtm };

const char* to_string(Variant v);
Variant variant_from_string(std::string_view s);

/// Boundary symbols: sentence/paragraph terminators, suffix-matched against
/// decoded token text. Fully configurable; this is the built-in default.
const std::vector<std::string>& default_boundary_set();

struct PolicyConfig {
  uint64_t window = 512;     // W, sliding-window size in tokens
  double lambda = 2.0;       // exit threshold; strict comparison rpdi > lambda
  std::vector<std::string> boundary_set = default_boundary_set();
  uint64_t budget = 16384;   // L_max, total token budget
  double gtf_epsilon = 1e-9; // rpdi undefined (no trigger) below this gtf
  Variant variant = Variant::Standard;
  entropy::TailPolicy tail_policy = entropy::TailPolicy::Renormalize;
  std::string termination_marker = "</think>";
  uint64_t answer_reserve = 256;     // answer floor when the budget is hit mid-thought
  uint64_t rebuild_interval = 65536; // exact sum rebuild cadence; 0 disables

  // Variant no-ltf forces a single-token window.
  uint64_t effective_window() const { return variant == Variant::NoLtf ? 1 : window; }

  /// Throws Error(InvalidArgument) when a field is out of range.
  void validate() const;
};

struct UpstreamConfig {
  enum class Style { Chat, RawCompletion };

  std::string base_url = "http://127.0.0.1:8000";
  uint64_t logprobs_top_k = 20;
  std::chrono::milliseconds request_timeout{120000};
  Style style = Style::Chat;

  void validate() const;
};

const char* to_string(UpstreamConfig::Style s);
UpstreamConfig::Style upstream_style_from_string(std::string_view s);

struct GatewayConfig {
  std::string listen_address = "127.0.0.1";
  int listen_port = 8080;        // 0 binds an ephemeral port
  bool passthrough = false;      // relay upstream bytes unmodified, no monitoring
  bool skip_health_check = false;
};

struct Config {
  PolicyConfig policy;
  UpstreamConfig upstream;
  GatewayConfig gateway;

  void validate() const;
};

namespace config {

/// Parses a `key = value` file (# comments, blank lines ignored) into cfg.
/// Unknown keys and malformed lines raise Error(ParseError) with the line number.
void load_file(Config& cfg, const std::string& path);
void load_stream(Config& cfg, std::istream& in, const std::string& origin);

/// Applies RPDMON_* environment variables over cfg.
void apply_env(Config& cfg);

/// Sets one key (same schema as the file). Throws on unknown key or bad value.
void set_key(Config& cfg, std::string_view key, std::string_view value);

/// Reads one key back in its file representation.
std::string get_key(const Config& cfg, std::string_view key);

/// All recognized keys, in documentation order.
const std::vector<std::string>& known_keys();

std::string env_var_for_key(std::string_view key);

}  // namespace config

}  // namespace rpdmon
