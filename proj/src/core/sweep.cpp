// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "sweep.hpp"

#include <atomic>
#include <ostream>
#include <thread>

namespace rpdmon::lab {

SweepResult sweep(std::span<const trace::Trace> traces, std::span<const uint64_t> windows,
                  std::span<const double> lambdas, std::span<const Variant> variants,
                  const PolicyConfig& base, int jobs) {
  if (traces.empty()) throw Error(Status::InvalidArgument, "sweep: empty trace set");
  if (windows.empty() || lambdas.empty() || variants.empty()) {
    throw Error(Status::InvalidArgument, "sweep: empty parameter grid");
  }

  SweepResult result;
  result.cells.resize(windows.size() * lambdas.size() * variants.size());
  size_t idx = 0;
  for (uint64_t w : windows) {
    for (double l : lambdas) {
      for (Variant v : variants) {
        SweepCell& cell = result.cells[idx++];
        cell.window = w;
        cell.lambda = l;
        cell.variant = v;
      }
    }
  }

  const auto run_cell = [&](SweepCell& cell) {
    PolicyConfig cfg = base;
    cfg.window = cell.window;
    cfg.lambda = cell.lambda;
    cfg.variant = cell.variant;
    cfg.validate();

    KahanAccumulator exit_steps;
    KahanAccumulator thinking;
    for (const auto& t : traces) {
      const ReplayResult r = replay(t, cfg, /*collect_series=*/false);
      thinking.add(static_cast<double>(r.thinking_tokens));
      switch (r.outcome.kind) {
        case session::OutcomeKind::ExitedEarly:
          cell.n_early_exit += 1;
          exit_steps.add(static_cast<double>(r.outcome.step));
          break;
        case session::OutcomeKind::EndedNaturally:
          cell.n_natural_end += 1;
          break;
        case session::OutcomeKind::BudgetExhausted:
          cell.n_budget_exhausted += 1;
          break;
        default:
          break;
      }
    }
    cell.traces = traces.size();
    cell.exit_rate = static_cast<double>(cell.n_early_exit) / static_cast<double>(traces.size());
    cell.mean_exit_step =
        cell.n_early_exit ? exit_steps.value() / static_cast<double>(cell.n_early_exit) : 0.0;
    cell.mean_thinking_len = thinking.value() / static_cast<double>(traces.size());
  };

  const int workers = std::max(1, jobs);
  if (workers == 1 || result.cells.size() <= 1) {
    for (auto& cell : result.cells) run_cell(cell);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back([&, i] {
        try {
          for (size_t j = next.fetch_add(1); j < result.cells.size(); j = next.fetch_add(1)) {
            run_cell(result.cells[j]);
          }
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult& r, std::ostream& out) {
  out << "window,lambda,variant,traces,exit_rate,mean_exit_step,mean_thinking_len,"
         "n_early_exit,n_natural_end,n_budget_exhausted\n";
  char buf[256];
  for (const auto& c : r.cells) {
    std::snprintf(buf, sizeof(buf), "%llu,%.12g,%s,%zu,%.12g,%.12g,%.12g,%zu,%zu,%zu\n",
                  static_cast<unsigned long long>(c.window), c.lambda, to_string(c.variant),
                  c.traces, c.exit_rate, c.mean_exit_step, c.mean_thinking_len, c.n_early_exit,
                  c.n_natural_end, c.n_budget_exhausted);
    out << buf;
  }
}

FixedBudgetResult fixed_budget_policy(std::span<const trace::Trace> traces, uint64_t budget) {
  if (budget < 1) throw Error(Status::InvalidArgument, "fixed-budget: budget must be >= 1");
  FixedBudgetResult result;
  result.budget = budget;
  size_t truncated = 0;
  for (size_t i = 0; i < traces.size(); ++i) {
    FixedBudgetRow row;
    row.trace_index = i;
    row.thinking_len = traces[i].thinking_tokens();
    row.truncated = row.thinking_len > budget;
    row.stop_step = row.truncated ? budget : row.thinking_len;
    truncated += row.truncated ? 1 : 0;
    result.rows.push_back(row);
  }
  result.truncation_rate =
      traces.empty() ? 0.0 : static_cast<double>(truncated) / static_cast<double>(traces.size());
  return result;
}

void write_fixed_budget_csv(const FixedBudgetResult& r, std::ostream& out) {
  out << "trace_index,thinking_len,truncated,stop_step\n";
  for (const auto& row : r.rows) {
    out << row.trace_index << ',' << row.thinking_len << ',' << (row.truncated ? 1 : 0) << ','
        << row.stop_step << '\n';
  }
}

}  // namespace rpdmon::lab
