// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "monitor.hpp"

#include <algorithm>
#include <cmath>

namespace rpdmon::monitor {

const char* to_string(DecisionKind k) {
  switch (k) {
    case DecisionKind::Continue: return "continue";
    case DecisionKind::EarlyExit: return "early-exit";
    case DecisionKind::NaturalEnd: return "natural-end";
    case DecisionKind::BudgetExhausted: return "budget-exhausted";
  }
  return "continue";
}

bool is_boundary(std::string_view token_text, std::span<const std::string> boundary_set) {
  const std::string_view stripped = rstrip(token_text);
  for (const auto& b : boundary_set) {
    if (b.empty()) continue;
    if (token_text.size() >= b.size() && token_text.ends_with(b)) return true;
    if (stripped.size() != token_text.size() && stripped.ends_with(b)) return true;
  }
  return false;
}

Monitor::Monitor(PolicyConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  window_ = cfg_.effective_window();
  ring_.assign(window_, 0.0);
}

ExitDecision Monitor::observe(const entropy::TokenObservation& obs) {
  if (phase_ != Phase::Thinking) {
    throw Error(Status::InvalidState, "monitor: observation after terminal decision");
  }
  if (obs.step != step_ + 1) {
    throw Error(Status::InvalidArgument,
                "monitor: out-of-order step " + std::to_string(obs.step) + " (expected " +
                    std::to_string(step_ + 1) + ")");
  }
  if (!std::isfinite(obs.entropy_nats) || obs.entropy_nats < 0.0) {
    throw Error(Status::InvalidArgument, "monitor: entropy must be finite and >= 0");
  }

  step_ = obs.step;
  const size_t slot = static_cast<size_t>((step_ - 1) % window_);
  const bool evict = step_ > window_;
  const double leaving = evict ? ring_[slot] : 0.0;
  ring_[slot] = obs.entropy_nats;

  global_.add(obs.entropy_nats);
  local_.add(obs.entropy_nats);
  if (evict) local_.add(-leaving);

  if (cfg_.rebuild_interval != 0 && step_ % cfg_.rebuild_interval == 0) {
    rebuild_sums();
  }

  if (step_ >= cfg_.budget) {
    phase_ = Phase::Terminated;
    return ExitDecision{DecisionKind::BudgetExhausted, std::nullopt, step_};
  }

  const bool evaluate =
      step_ >= window_ &&
      (cfg_.variant == Variant::NoBtm || is_boundary(obs.token_text, cfg_.boundary_set));
  if (evaluate) {
    const double g = gtf();
    if (g >= cfg_.gtf_epsilon) {
      const double r = ltf() / g;
      if (r > cfg_.lambda) {
        phase_ = Phase::Terminated;
        return ExitDecision{DecisionKind::EarlyExit, r, step_};
      }
    }
  }
  return ExitDecision{DecisionKind::Continue, std::nullopt, step_};
}

double Monitor::ltf() const {
  if (step_ < 1) throw Error(Status::InvalidState, "monitor: ltf requires at least one step");
  return local_.value() / static_cast<double>(std::min(step_, window_));
}

double Monitor::gtf() const {
  if (step_ < 1) throw Error(Status::InvalidState, "monitor: gtf requires at least one step");
  if (cfg_.variant == Variant::NoGtf) return 1.0;
  return global_.value() / static_cast<double>(step_);
}

std::optional<double> Monitor::rpdi() const {
  const double g = gtf();
  if (g < cfg_.gtf_epsilon) return std::nullopt;
  return ltf() / g;
}

void Monitor::rebuild_sums() {
  // Window sum recomputed exactly from the ring, oldest to newest; the
  // global accumulator is already a running compensated total, so the
  // rebuild just folds its compensation term.
  const uint64_t held = std::min(step_, window_);
  KahanAccumulator fresh;
  for (uint64_t age = held; age >= 1; --age) {
    const uint64_t s = step_ - age + 1;
    fresh.add(ring_[static_cast<size_t>((s - 1) % window_)]);
  }
  local_ = fresh;
  global_.reset(global_.value());
}

}  // namespace rpdmon::monitor
