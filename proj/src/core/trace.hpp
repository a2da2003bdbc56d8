#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * JSONL trace format: one meta object on the first line, then one record per
 * token. See docs/trace-format.md for the field-by-field schema.
 *
 * A record carries the entropy signal directly (entropy_nats), as a top-k
 * logprob list, or both; when both are present they must agree under the
 * tail policy recorded in the meta line. Steps are consecutive from 1 across
 * thinking and answer phases.
 */

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "common.hpp"
#include "entropy.hpp"

namespace rpdmon::trace {

inline constexpr int kSchemaVersion = 1;
// Max |entropy_nats - entropy(top_logprobs)| when a record carries both.
inline constexpr double kEntropyAgreementTolerance = 1e-6;

enum class TokenPhase { Thinking, Answer };

const char* to_string(TokenPhase p);
TokenPhase phase_from_string(std::string_view s);

struct TraceMeta {
  int schema_version = kSchemaVersion;
  std::string model = "synthetic";
  entropy::TailPolicy tail_policy = entropy::TailPolicy::Renormalize;
  std::string tokenizer = "synthetic";
  nlohmann::json extra;  // generator provenance: profile, seed, planted spikes
};

struct TraceRecord {
  uint64_t step = 0;
  std::string token_text;
  std::optional<int32_t> token_id;
  std::optional<double> entropy_nats;
  std::optional<std::vector<std::pair<std::string, double>>> top_logprobs;
  TokenPhase phase = TokenPhase::Thinking;
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRecord> records;

  uint64_t thinking_tokens() const;
};

/// Parses and validates; errors carry the 1-based line number.
Trace read_file(const std::string& path);
Trace parse(std::istream& in, const std::string& origin);

void write_file(const Trace& t, const std::string& path);
void write(const Trace& t, std::ostream& out);

/// Full validation pass (schema, step continuity, entropy agreement).
/// Throws Error(ParseError) with a record-numbered message.
void validate(const Trace& t, const std::string& origin);

/// The entropy signal for one record: entropy_nats when recorded, otherwise
/// computed from top_logprobs under the given policy.
double record_entropy(const TraceRecord& rec, entropy::TailPolicy policy);

/**
 * Builds a top-k logprob list whose renormalized entropy equals target_h.
 *
 * Uses a two-point distribution for target_h <= ln 2 and a head-plus-uniform
 * -tail shape above it, solving for the head mass by bisection. The first
 * entry carries token_text; filler entries use synthetic alt texts. The list
 * sums to 1, so both tail policies agree on it.
 */
std::vector<std::pair<std::string, double>> synthesize_top_logprobs(double target_h,
                                                                    const std::string& token_text);

}  // namespace rpdmon::trace
