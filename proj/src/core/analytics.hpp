#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Entropy-distribution analytics over trace corpora.
 *
 * Thinking-phase tokens only. Sorting ties are broken by (entropy, trace
 * index, step) so bins and top-contributor selections are reproducible.
 */

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trace.hpp"

namespace rpdmon::lab {

struct BinShares {
  std::vector<double> shares;  // per-bin share of total entropy, ascending bins
  bool all_zero = false;       // corpus had no positive-entropy token
  size_t total_tokens = 0;
  double total_entropy = 0.0;
};

/**
 * Sorts tokens ascending by entropy, splits them into n_bins equal-count
 * bins (sizes differ by at most one), and reports each bin's share of the
 * total entropy. Shares sum to 1 unless the corpus is all-zero, in which
 * case every share is 0 and the warning flag is set.
 */
BinShares entropy_contribution_bins(std::span<const trace::Trace> traces, int n_bins = 100);

/**
 * Frequency table of the token texts among the top_fraction of tokens by
 * entropy contribution, filtered to complete words (alphabetic after
 * trimming whitespace), descending by count.
 */
std::vector<std::pair<std::string, uint64_t>> top_contributor_tokens(
    std::span<const trace::Trace> traces, double top_fraction = 0.20);

bool is_complete_word(std::string_view token);

void write_bins_csv(const BinShares& b, std::ostream& out);
void write_token_table_csv(std::span<const std::pair<std::string, uint64_t>> table,
                           std::ostream& out);

}  // namespace rpdmon::lab
