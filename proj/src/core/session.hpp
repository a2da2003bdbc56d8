#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Two-phase generation lifecycle around a Monitor.
 *
 * The session accumulates the reasoning text R token by token, watches for
 * the model's own termination marker T in a rolling text window (tokenizers
 * split markers unpredictably, so matching is on text, not token ids), and
 * forwards everything else to the monitor. Natural termination takes
 * precedence: a token that completes T finishes the session before the
 * monitor sees it.
 *
 * On early exit the caller receives the continuation prefix P + R + T and
 * the remaining answer budget L_max - i. When the budget is exhausted
 * mid-thought the advertised remainder is zero (flagged), and the effective
 * request budget falls back to the configured answer reserve so the session
 * can still produce an answer.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "config.hpp"
#include "entropy.hpp"
#include "monitor.hpp"

namespace rpdmon::session {

enum class OutcomeKind { Pending, ExitedEarly, EndedNaturally, BudgetExhausted };

const char* to_string(OutcomeKind k);

struct Outcome {
  OutcomeKind kind = OutcomeKind::Pending;
  uint64_t step = 0;
  std::optional<double> rpdi;  // present iff kind == ExitedEarly
};

enum class ActionKind { KeepStreaming, EnactExit, Finish };

struct Action {
  ActionKind kind = ActionKind::KeepStreaming;
  std::string continuation_prefix;       // P + R + T, set for EnactExit
  uint64_t answer_budget = 0;            // L_max - step; 0 when the budget is exhausted
  uint64_t effective_answer_budget = 0;  // what to actually request upstream
  bool zero_remaining = false;           // true on the budget-exhaustion path
};

/// True iff the marker occurs anywhere in the rolling window text.
bool contains_marker(std::string_view window_text, std::string_view marker);

class Session {
 public:
  Session(std::string prompt, PolicyConfig cfg);

  /// Feeds one thinking-phase token. Requires outcome().kind == Pending and
  /// consecutive steps starting at 1.
  Action feed(const entropy::TokenObservation& obs);

  /// Marks the input stream exhausted without marker or exit; the session
  /// ends naturally at the last fed step.
  Action finish_input();

  /// Counts answer-phase tokens against the advertised answer budget.
  /// They are never observed by the monitor.
  void note_answer_tokens(uint64_t n);

  const Outcome& outcome() const { return outcome_; }
  const std::string& reasoning() const { return reasoning_; }
  const std::string& prompt() const { return prompt_; }
  uint64_t tokens_consumed() const { return tokens_consumed_; }

  /// Thinking-phase tokens fed so far (equals the outcome step once terminal).
  uint64_t thinking_tokens() const {
    return outcome_.kind == OutcomeKind::Pending ? tokens_consumed_ : outcome_.step;
  }
  uint64_t answer_budget_remaining() const { return answer_budget_remaining_; }
  const PolicyConfig& config() const { return monitor_.config(); }
  monitor::Monitor& mon() { return monitor_; }
  const monitor::Monitor& mon() const { return monitor_; }

 private:
  Action enact_exit(uint64_t at_step, bool exhausted);

  std::string prompt_;
  std::string reasoning_;
  std::string marker_tail_;  // last 2*|T| bytes of R
  monitor::Monitor monitor_;
  uint64_t tokens_consumed_ = 0;
  uint64_t answer_budget_remaining_ = 0;
  Outcome outcome_;
};

}  // namespace rpdmon::session
