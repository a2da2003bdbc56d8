#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Shannon entropy of next-token distributions, in nats.
 *
 * Two input shapes are supported:
 * - full distributions (probabilities over the whole support, must sum to 1)
 * - truncated top-k logprob lists as exposed by serving APIs
 *
 * Top-k lists carry only part of the probability mass, so a tail policy
 * chooses between summing the raw terms (ignore-tail, understates entropy
 * proportional to the missing mass) and rescaling the top-k mass to 1
 * (renormalize, the default).
 *
 * All functions are pure and safe to call concurrently.
 */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace rpdmon::entropy {

enum class DistKind { Full, TopK };
enum class TailPolicy { IgnoreTail, Renormalize };

const char* to_string(TailPolicy p);
TailPolicy tail_policy_from_string(std::string_view s);

struct ProbEntry {
  int32_t token_id = 0;
  double probability = 0.0;
};

struct ProbDistribution {
  std::vector<ProbEntry> entries;
  DistKind kind = DistKind::Full;
};

/// One generated token with its computed uncertainty signal.
struct TokenObservation {
  uint64_t step = 0;  // 1-based generation index
  int32_t token_id = -1;
  std::string token_text;
  double entropy_nats = 0.0;
};

// Probabilities summing to 1 must match within this tolerance (Full kind);
// TopK sums may not exceed 1 by more than it.
inline constexpr double kProbSumTolerance = 1e-6;
// Logprobs may exceed 0 by at most this much (serving APIs emit -0.0 noise).
inline constexpr double kLogprobTolerance = 1e-6;

/**
 * -sum p*ln(p) over entries with p > 0; zero-probability entries contribute
 * exactly 0. Throws Error(InvalidArgument) on an empty entry list, negative
 * probabilities, or a Full distribution whose mass deviates from 1 beyond
 * tolerance.
 */
double shannon_entropy(const ProbDistribution& dist);

/// Same computation on a bare probability array.
double shannon_entropy(std::span<const double> probs, DistKind kind);

/**
 * Entropy of a truncated top-k logprob list under the given tail policy.
 * Logprobs must be <= 0 within tolerance; small positive noise is clamped.
 */
double from_topk_logprobs(std::span<const double> logprobs, TailPolicy policy);

TokenObservation decode_observation(uint64_t step, int32_t token_id, std::string token_text,
                                    const ProbDistribution& dist);
TokenObservation decode_observation(uint64_t step, int32_t token_id, std::string token_text,
                                    std::span<const double> topk_logprobs, TailPolicy policy);

}  // namespace rpdmon::entropy
