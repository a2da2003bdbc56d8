#pragma once

// The golden fixture set: profile spec + seed per committed trace. Shared by
// the generator tool and the verification tests so the fixtures stay
// regenerable byte for byte.

#include <cstdint>
#include <string>
#include <vector>

namespace fixtures {

struct FixtureDef {
  std::string file;
  std::string profile_spec;  // preset name or JSON profile
  uint64_t seed;
};

inline const std::vector<FixtureDef>& defs() {
  static const std::vector<FixtureDef> kDefs = [] {
    std::vector<FixtureDef> out;
    const std::string latespike =
        R"({"base":"spike","name":"latespike","thinking_tokens":3000,)"
        R"("spikes":[{"start":800,"length":400,"amplitude":5.0}],"answer_tokens":60})";
    for (uint64_t seed = 11; seed <= 18; ++seed) {
      out.push_back({"spike_s" + std::to_string(seed) + ".jsonl", "spike", seed});
    }
    for (uint64_t seed = 21; seed <= 24; ++seed) {
      out.push_back({"flat_s" + std::to_string(seed) + ".jsonl", "flat", seed});
    }
    for (uint64_t seed = 31; seed <= 34; ++seed) {
      out.push_back({"natural_s" + std::to_string(seed) + ".jsonl", "natural-end", seed});
    }
    for (uint64_t seed = 41; seed <= 42; ++seed) {
      out.push_back({"splitmark_s" + std::to_string(seed) + ".jsonl", "split-marker", seed});
    }
    for (uint64_t seed = 51; seed <= 52; ++seed) {
      out.push_back({"budget_s" + std::to_string(seed) + ".jsonl", "budget", seed});
    }
    for (uint64_t seed = 61; seed <= 64; ++seed) {
      out.push_back({"latespike_s" + std::to_string(seed) + ".jsonl", latespike, seed});
    }
    return out;
  }();
  return kDefs;
}

}  // namespace fixtures
