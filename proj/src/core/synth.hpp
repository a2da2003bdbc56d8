#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Deterministic synthetic trace generation for fixtures and fuzzing.
 *
 * A profile describes a thinking trajectory: a low-entropy baseline with
 * jitter, optional high-entropy spike regions dense in transition tokens
 * ("Wait", "But"), boundary tokens on a fixed cadence, an optional natural
 * termination marker, and an optional answer phase. Planted spike regions
 * are recorded in the trace meta so oracles can check against them.
 *
 * Generation is reproducible byte for byte for a given profile and seed:
 * randomness comes from a fixed 64-bit engine with hand-rolled uniform
 * scaling (std distributions are implementation-defined).
 */

#include <cstdint>
#include <string>
#include <vector>

#include "trace.hpp"

namespace rpdmon::lab {

struct SpikeRegion {
  uint64_t start = 0;   // 1-based step of the first spike token
  uint64_t length = 0;  // number of consecutive spike tokens
  double amplitude = 4.0;
};

struct SynthProfile {
  std::string name = "custom";
  uint64_t seed = 1;
  uint64_t thinking_tokens = 2000;
  double baseline_entropy = 0.3;
  double jitter = 0.1;  // relative, applied to baseline and spikes
  std::vector<SpikeRegion> spikes;
  uint64_t boundary_every = 25;  // boundary token cadence; 0 = never
  bool natural_marker = false;   // emit the marker at the end of thinking
  bool split_marker = false;     // emit the marker across two tokens
  uint64_t answer_tokens = 0;    // answer-phase records after the marker
  bool emit_entropy = true;
  bool emit_top_logprobs = true;
  std::string marker = "</think>";

  // Long-tail mixture mode (used by the analytics corpus): when hi_fraction
  // is positive, every token independently draws from the high-entropy pool
  // with this probability instead of following the spike schedule.
  double hi_fraction = 0.0;
  double hi_entropy = 5.0;

  void validate() const;
};

/// Built-in presets: flat, spike, natural-end, split-marker, budget, longtail.
SynthProfile make_profile(const std::string& name, uint64_t seed);
const std::vector<std::string>& profile_names();

/// Parses either a preset name or a JSON profile object (field names match
/// the struct members).
SynthProfile profile_from_spec(const std::string& name_or_json, uint64_t seed);

trace::Trace generate(const SynthProfile& profile);

}  // namespace rpdmon::lab
