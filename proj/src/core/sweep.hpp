#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Parameter sweeps and the fixed token-budget comparison policy.
 *
 * Each (window, lambda, variant) cell replays every trace with a fresh
 * config — correctness over speed; cells are independent and run on a small
 * thread pool when jobs > 1, with output ordering independent of scheduling.
 */

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "replay.hpp"

namespace rpdmon::lab {

struct SweepCell {
  uint64_t window = 0;
  double lambda = 0.0;
  Variant variant = Variant::Standard;
  size_t traces = 0;
  size_t n_early_exit = 0;
  size_t n_natural_end = 0;
  size_t n_budget_exhausted = 0;
  double exit_rate = 0.0;          // n_early_exit / traces
  double mean_exit_step = 0.0;     // over early-exited traces; 0 when none
  double mean_thinking_len = 0.0;  // tokens fed until the outcome settled
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

SweepResult sweep(std::span<const trace::Trace> traces, std::span<const uint64_t> windows,
                  std::span<const double> lambdas, std::span<const Variant> variants,
                  const PolicyConfig& base, int jobs = 1);

void write_sweep_csv(const SweepResult& r, std::ostream& out);

struct FixedBudgetRow {
  size_t trace_index = 0;
  uint64_t thinking_len = 0;
  bool truncated = false;
  uint64_t stop_step = 0;  // min(thinking_len, budget)
};

struct FixedBudgetResult {
  uint64_t budget = 0;
  std::vector<FixedBudgetRow> rows;
  double truncation_rate = 0.0;
};

/// Truncate-at-budget baseline for side-by-side reporting.
FixedBudgetResult fixed_budget_policy(std::span<const trace::Trace> traces, uint64_t budget);

void write_fixed_budget_csv(const FixedBudgetResult& r, std::ostream& out);

}  // namespace rpdmon::lab
