// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "session.hpp"

#include <cmath>

namespace rpdmon::session {

const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Pending: return "pending";
    case OutcomeKind::ExitedEarly: return "exited-early";
    case OutcomeKind::EndedNaturally: return "ended-naturally";
    case OutcomeKind::BudgetExhausted: return "budget-exhausted";
  }
  return "pending";
}

bool contains_marker(std::string_view window_text, std::string_view marker) {
  if (marker.empty()) return false;
  return window_text.find(marker) != std::string_view::npos;
}

Session::Session(std::string prompt, PolicyConfig cfg)
    : prompt_(std::move(prompt)), monitor_(std::move(cfg)) {}

Action Session::feed(const entropy::TokenObservation& obs) {
  if (outcome_.kind != OutcomeKind::Pending) {
    throw Error(Status::InvalidState, "session: feed after terminal outcome");
  }
  if (obs.step != monitor_.step() + 1) {
    throw Error(Status::InvalidArgument,
                "session: out-of-order step " + std::to_string(obs.step));
  }
  // Validate before touching R so a rejected observation leaves no trace.
  if (!std::isfinite(obs.entropy_nats) || obs.entropy_nats < 0.0) {
    throw Error(Status::InvalidArgument, "session: entropy must be finite and >= 0");
  }

  reasoning_ += obs.token_text;
  tokens_consumed_ += 1;

  const std::string& marker = config().termination_marker;
  if (!marker.empty()) {
    // The rolling window is the previous tail (at most 2*|T| bytes, enough
    // back-context for a marker split across tokens) plus the new chunk.
    std::string window = marker_tail_ + obs.token_text;
    const bool completed = contains_marker(window, marker);
    const size_t keep = 2 * marker.size();
    marker_tail_ = window.size() > keep ? window.substr(window.size() - keep) : std::move(window);
    if (completed) {
      outcome_ = Outcome{OutcomeKind::EndedNaturally, obs.step, std::nullopt};
      monitor_.end_thinking(monitor::Phase::Answering);
      Action a;
      a.kind = ActionKind::Finish;
      return a;
    }
  }

  const monitor::ExitDecision d = monitor_.observe(obs);
  switch (d.kind) {
    case monitor::DecisionKind::EarlyExit:
      outcome_ = Outcome{OutcomeKind::ExitedEarly, d.at_step, d.rpdi};
      return enact_exit(d.at_step, /*exhausted=*/false);
    case monitor::DecisionKind::BudgetExhausted:
      outcome_ = Outcome{OutcomeKind::BudgetExhausted, d.at_step, std::nullopt};
      return enact_exit(d.at_step, /*exhausted=*/true);
    default:
      Action keep;
      keep.kind = ActionKind::KeepStreaming;
      return keep;
  }
}

Action Session::enact_exit(uint64_t at_step, bool exhausted) {
  Action a;
  a.kind = ActionKind::EnactExit;
  a.continuation_prefix = prompt_ + reasoning_ + config().termination_marker;
  if (exhausted) {
    a.answer_budget = 0;
    a.zero_remaining = true;
    a.effective_answer_budget = config().answer_reserve;
  } else {
    a.answer_budget = config().budget - at_step;
    a.zero_remaining = false;
    a.effective_answer_budget = a.answer_budget;
  }
  answer_budget_remaining_ = a.effective_answer_budget;
  return a;
}

Action Session::finish_input() {
  if (outcome_.kind != OutcomeKind::Pending) {
    throw Error(Status::InvalidState, "session: finish_input after terminal outcome");
  }
  outcome_ = Outcome{OutcomeKind::EndedNaturally, monitor_.step(), std::nullopt};
  monitor_.end_thinking(monitor::Phase::Answering);
  Action a;
  a.kind = ActionKind::Finish;
  return a;
}

void Session::note_answer_tokens(uint64_t n) {
  if (outcome_.kind == OutcomeKind::Pending) {
    throw Error(Status::InvalidState, "session: answer tokens before thinking ended");
  }
  if (n > answer_budget_remaining_) {
    throw Error(Status::InvalidArgument, "session: answer budget exceeded");
  }
  answer_budget_remaining_ -= n;
  tokens_consumed_ += n;
}

}  // namespace rpdmon::session
