// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "analytics.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

namespace rpdmon::lab {

namespace {

struct TokenEntry {
  double entropy;
  uint32_t trace_index;
  uint64_t step;
  const std::string* text;

  bool operator<(const TokenEntry& o) const {
    if (entropy != o.entropy) return entropy < o.entropy;
    if (trace_index != o.trace_index) return trace_index < o.trace_index;
    return step < o.step;
  }
};

std::vector<TokenEntry> collect_sorted(std::span<const trace::Trace> traces) {
  if (traces.empty()) throw Error(Status::InvalidArgument, "analytics: empty corpus");
  std::vector<TokenEntry> entries;
  size_t total = 0;
  for (const auto& t : traces) total += t.records.size();
  entries.reserve(total);
  for (uint32_t ti = 0; ti < traces.size(); ++ti) {
    for (const auto& rec : traces[ti].records) {
      if (rec.phase != trace::TokenPhase::Thinking) continue;
      entries.push_back(TokenEntry{trace::record_entropy(rec, traces[ti].meta.tail_policy), ti,
                                   rec.step, &rec.token_text});
    }
  }
  if (entries.empty()) throw Error(Status::InvalidArgument, "analytics: no thinking-phase tokens");
  std::sort(entries.begin(), entries.end());
  return entries;
}

}  // namespace

bool is_complete_word(std::string_view token) {
  const std::string_view w = strip(token);
  if (w.empty()) return false;
  for (char c : w) {
    const char lower = static_cast<char>(c | 0x20);
    if (lower < 'a' || lower > 'z') return false;
  }
  return true;
}

BinShares entropy_contribution_bins(std::span<const trace::Trace> traces, int n_bins) {
  if (n_bins < 1) throw Error(Status::InvalidArgument, "analytics: n_bins must be >= 1");
  const std::vector<TokenEntry> entries = collect_sorted(traces);
  const size_t n = entries.size();

  BinShares result;
  result.total_tokens = n;
  result.shares.assign(static_cast<size_t>(n_bins), 0.0);

  std::vector<double> bin_sums(static_cast<size_t>(n_bins), 0.0);
  KahanAccumulator total;
  for (int b = 0; b < n_bins; ++b) {
    const size_t lo = n * static_cast<size_t>(b) / static_cast<size_t>(n_bins);
    const size_t hi = n * static_cast<size_t>(b + 1) / static_cast<size_t>(n_bins);
    KahanAccumulator sum;
    for (size_t i = lo; i < hi; ++i) sum.add(entries[i].entropy);
    bin_sums[static_cast<size_t>(b)] = sum.value();
    total.add(sum.value());
  }
  result.total_entropy = total.value();
  if (result.total_entropy <= 0.0) {
    result.all_zero = true;
    return result;
  }
  for (int b = 0; b < n_bins; ++b) {
    result.shares[static_cast<size_t>(b)] = bin_sums[static_cast<size_t>(b)] / result.total_entropy;
  }
  return result;
}

std::vector<std::pair<std::string, uint64_t>> top_contributor_tokens(
    std::span<const trace::Trace> traces, double top_fraction) {
  if (top_fraction < 0.0 || top_fraction > 1.0) {
    throw Error(Status::InvalidArgument, "analytics: top_fraction must be in [0, 1]");
  }
  const std::vector<TokenEntry> entries = collect_sorted(traces);
  const size_t n = entries.size();
  const size_t k = std::min(
      n, static_cast<size_t>(std::llround(top_fraction * static_cast<double>(n))));

  std::unordered_map<std::string, uint64_t> counts;
  for (size_t i = n - k; i < n; ++i) {
    const std::string_view w = strip(*entries[i].text);
    if (!is_complete_word(w)) continue;
    counts[std::string(w)] += 1;
  }

  std::vector<std::pair<std::string, uint64_t>> table(counts.begin(), counts.end());
  std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return table;
}

void write_bins_csv(const BinShares& b, std::ostream& out) {
  out << "bin,share\n";
  char buf[64];
  for (size_t i = 0; i < b.shares.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i + 1, b.shares[i]);
    out << buf;
  }
}

void write_token_table_csv(std::span<const std::pair<std::string, uint64_t>> table,
                           std::ostream& out) {
  out << "token,count\n";
  for (const auto& [token, count] : table) {
    out << nlohmann::json(token).dump() << ',' << count << '\n';
  }
}

}  // namespace rpdmon::lab
