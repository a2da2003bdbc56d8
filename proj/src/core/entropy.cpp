// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rpdmon::entropy {

const char* to_string(TailPolicy p) {
  return p == TailPolicy::IgnoreTail ? "ignore-tail" : "renormalize";
}

TailPolicy tail_policy_from_string(std::string_view s) {
  if (s == "ignore-tail") return TailPolicy::IgnoreTail;
  if (s == "renormalize") return TailPolicy::Renormalize;
  throw Error(Status::InvalidArgument, "unknown tail policy: '" + std::string(s) + "'");
}

namespace {

double entropy_of_probs(std::span<const double> probs, DistKind kind) {
  if (probs.empty()) {
    throw Error(Status::InvalidArgument, "entropy: empty distribution");
  }
  KahanAccumulator mass;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(Status::InvalidArgument, "entropy: negative or non-finite probability");
    }
    mass.add(p);
  }
  const double total = mass.value();
  if (kind == DistKind::Full) {
    if (std::abs(total - 1.0) > kProbSumTolerance) {
      throw Error(Status::InvalidArgument,
                  "entropy: full distribution mass " + std::to_string(total) +
                      " deviates from 1 beyond tolerance");
    }
  } else {
    if (total > 1.0 + kProbSumTolerance) {
      throw Error(Status::InvalidArgument,
                  "entropy: top-k mass " + std::to_string(total) + " exceeds 1");
    }
  }

  KahanAccumulator h;
  for (double p : probs) {
    if (p > 0.0) h.add(-p * std::log(p));
  }
  // Entries marginally above 1 (within tolerance) yield tiny negative terms.
  return std::max(h.value(), 0.0);
}

}  // namespace

double shannon_entropy(std::span<const double> probs, DistKind kind) {
  return entropy_of_probs(probs, kind);
}

double shannon_entropy(const ProbDistribution& dist) {
  std::vector<double> probs;
  probs.reserve(dist.entries.size());
  for (const auto& e : dist.entries) probs.push_back(e.probability);
  return entropy_of_probs(probs, dist.kind);
}

double from_topk_logprobs(std::span<const double> logprobs, TailPolicy policy) {
  if (logprobs.empty()) {
    throw Error(Status::InvalidArgument, "entropy: empty logprob list");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (double lp : logprobs) {
    if (std::isnan(lp) || lp > kLogprobTolerance) {
      throw Error(Status::InvalidArgument,
                  "entropy: logprob " + std::to_string(lp) + " above 0");
    }
    max_lp = std::max(max_lp, std::min(lp, 0.0));
  }

  if (policy == TailPolicy::IgnoreTail) {
    // -sum exp(lp)*lp over the unnormalized top-k terms.
    KahanAccumulator h;
    for (double lp : logprobs) {
      const double clamped = std::min(lp, 0.0);
      const double p = std::exp(clamped);
      if (p > 0.0) h.add(-p * clamped);
    }
    return std::max(h.value(), 0.0);
  }

  // Renormalize: p_i = exp(lp_i) / Z. With the log-sum-exp shift m,
  // H = ln Z - (sum exp(lp - m) * lp) / sum exp(lp - m).
  if (!std::isfinite(max_lp)) {
    throw Error(Status::InvalidArgument, "entropy: all logprobs are -inf");
  }
  KahanAccumulator z;
  KahanAccumulator weighted;
  for (double lp : logprobs) {
    const double clamped = std::min(lp, 0.0);
    const double w = std::exp(clamped - max_lp);
    z.add(w);
    if (w > 0.0) weighted.add(w * clamped);
  }
  const double zv = z.value();
  const double log_z = max_lp + std::log(zv);
  return std::max(log_z - weighted.value() / zv, 0.0);
}

TokenObservation decode_observation(uint64_t step, int32_t token_id, std::string token_text,
                                    const ProbDistribution& dist) {
  if (step == 0) throw Error(Status::InvalidArgument, "observation step must be >= 1");
  return TokenObservation{step, token_id, std::move(token_text), shannon_entropy(dist)};
}

TokenObservation decode_observation(uint64_t step, int32_t token_id, std::string token_text,
                                    std::span<const double> topk_logprobs, TailPolicy policy) {
  if (step == 0) throw Error(Status::InvalidArgument, "observation step must be >= 1");
  return TokenObservation{step, token_id, std::move(token_text),
                          from_topk_logprobs(topk_logprobs, policy)};
}

}  // namespace rpdmon::entropy
