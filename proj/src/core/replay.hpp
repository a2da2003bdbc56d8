#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Deterministic offline replay of a policy over a trace.
 *
 * Replay drives a real Session with the trace's thinking-phase records, so
 * offline decisions match online ones by construction. The entropy signal
 * prefers the recorded entropy_nats and falls back to computing from
 * top_logprobs under the config's tail policy. Records after the terminal
 * outcome (and all answer-phase records) are never fed — mirroring the
 * gateway, which cancels the upstream stream at that point.
 */

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "session.hpp"
#include "trace.hpp"

namespace rpdmon::lab {

struct StepStat {
  uint64_t step = 0;
  double entropy = 0.0;
  double ltf = 0.0;
  double gtf = 0.0;
  std::optional<double> rpdi;
};

struct ReplayResult {
  session::Outcome outcome;
  uint64_t thinking_tokens = 0;  // tokens fed before the outcome settled
  std::vector<StepStat> series;  // one row per monitored step
};

ReplayResult replay(const trace::Trace& t, const PolicyConfig& cfg, bool collect_series = true);

void write_series_csv(const ReplayResult& r, std::ostream& out);

}  // namespace rpdmon::lab
