#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Streaming reasoning-path deviation monitor.
 *
 * Tracks per-token entropy with two compensated running sums — one over the
 * whole trajectory, one over a sliding window of the last W tokens backed by
 * a ring buffer — and derives three signals in O(1) per token:
 *
 *   ltf  = window sum / min(step, W)   local transition frequency
 *   gtf  = global sum / step           adaptive global baseline
 *   rpdi = ltf / gtf                   deviation index, ~1 on a steady path
 *
 * Evaluation is boundary-triggered: rpdi is compared against the exit
 * threshold only once warmup completes (step >= W) and only at tokens whose
 * decoded text suffix-matches the boundary set (every token for the no-btm
 * variant). The comparison is strict: rpdi > lambda. A gtf below gtf_epsilon
 * leaves rpdi undefined and never triggers.
 *
 * A monitor is owned by exactly one session at a time; distinct monitors are
 * fully independent.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "entropy.hpp"

namespace rpdmon::monitor {

enum class Phase { Thinking, Answering, Terminated };

enum class DecisionKind { Continue, EarlyExit, NaturalEnd, BudgetExhausted };

const char* to_string(DecisionKind k);

struct ExitDecision {
  DecisionKind kind = DecisionKind::Continue;
  std::optional<double> rpdi;  // present iff kind == EarlyExit
  uint64_t at_step = 0;
};

/// True iff the token text, raw or with trailing whitespace stripped,
/// equals or ends with a member of the boundary set.
bool is_boundary(std::string_view token_text, std::span<const std::string> boundary_set);

class Monitor {
 public:
  explicit Monitor(PolicyConfig cfg);

  /**
   * Feeds one observation and returns the decision for that step.
   *
   * Requires phase() == Thinking and obs.step == step() + 1. The state
   * mutation and decision are atomic from the caller's view: a terminal
   * decision (EarlyExit, BudgetExhausted) moves the monitor to Terminated
   * and further observations are rejected. The budget check precedes the
   * threshold check, so exhaustion wins at the budget step.
   */
  ExitDecision observe(const entropy::TokenObservation& obs);

  /// Window mean entropy. Requires step() >= 1.
  double ltf() const;
  /// Trajectory mean entropy; identically 1 for the no-gtf variant. Requires step() >= 1.
  double gtf() const;
  /// ltf/gtf, or nullopt while gtf < gtf_epsilon. Requires step() >= 1.
  std::optional<double> rpdi() const;

  /// Recomputes the window sum exactly from the ring and folds the global
  /// compensation. Never changes decisions; called automatically every
  /// rebuild_interval observations.
  void rebuild_sums();

  uint64_t step() const { return step_; }
  Phase phase() const { return phase_; }
  double sum_local() const { return local_.value(); }
  double sum_global() const { return global_.value(); }
  const PolicyConfig& config() const { return cfg_; }

  /// Session-controller hook: stops monitoring without a terminal decision
  /// (natural thinking end observed in the text stream).
  void end_thinking(Phase next) { phase_ = next; }

 private:
  PolicyConfig cfg_;
  uint64_t window_;  // effective window (1 for no-ltf)
  uint64_t step_ = 0;
  Phase phase_ = Phase::Thinking;
  KahanAccumulator global_;
  KahanAccumulator local_;
  std::vector<double> ring_;  // capacity window_, slot (step-1) % window_
};

}  // namespace rpdmon::monitor
