// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "synth.hpp"

#include <cmath>

namespace rpdmon::lab {

using nlohmann::json;
using trace::TokenPhase;
using trace::Trace;
using trace::TraceRecord;

namespace {

// splitmix64: stable across platforms and standard-library versions.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  uint64_t bounded(uint64_t n) { return next() % n; }
};

const std::vector<std::string>& filler_tokens() {
  static const std::vector<std::string> kFiller = {
      " the", " we",    " so",    " then",  " value", " of",    " is",  " equal",
      " to",  " gives", " hence", " let",   " x",     " y",     " sum", " term",
      " and", " thus",  " now",   " since", " first", " next",  " get", " have",
  };
  return kFiller;
}

const std::vector<std::string>& transition_tokens() {
  static const std::vector<std::string> kTransition = {" Wait", " Wait", " Wait", " But",
                                                       " But", " However", " Alternatively"};
  return kTransition;
}

}  // namespace

void SynthProfile::validate() const {
  if (thinking_tokens == 0) {
    throw Error(Status::InvalidArgument, "synth: thinking_tokens must be >= 1");
  }
  if (baseline_entropy < 0.0 || jitter < 0.0 || jitter >= 1.0) {
    throw Error(Status::InvalidArgument, "synth: baseline must be >= 0 and jitter in [0, 1)");
  }
  if (hi_fraction < 0.0 || hi_fraction > 1.0) {
    throw Error(Status::InvalidArgument, "synth: hi_fraction must be in [0, 1]");
  }
  if (!emit_entropy && !emit_top_logprobs) {
    throw Error(Status::InvalidArgument, "synth: records need entropy or logprobs");
  }
  for (const auto& s : spikes) {
    if (s.start == 0 || s.length == 0 || s.amplitude < 0.0) {
      throw Error(Status::InvalidArgument, "synth: spike regions need start >= 1, length >= 1");
    }
  }
}

const std::vector<std::string>& profile_names() {
  static const std::vector<std::string> kNames = {"flat",         "spike",  "natural-end",
                                                  "split-marker", "budget", "longtail"};
  return kNames;
}

SynthProfile make_profile(const std::string& name, uint64_t seed) {
  SynthProfile p;
  p.name = name;
  p.seed = seed;
  if (name == "flat") {
    p.thinking_tokens = 1500;
    p.natural_marker = true;
    p.answer_tokens = 60;
  } else if (name == "spike") {
    // Flat prefix, then a boundary-terminated burst of transition tokens:
    // the overthinking shape the monitor is built to catch.
    p.thinking_tokens = 2200;
    p.spikes = {{1200, 220, 4.0}};
    p.answer_tokens = 60;
  } else if (name == "natural-end") {
    p.thinking_tokens = 1200;
    p.spikes = {{900, 40, 1.2}};  // mild wobble, below the exit threshold
    p.natural_marker = true;
    p.answer_tokens = 80;
  } else if (name == "split-marker") {
    p.thinking_tokens = 1000;
    p.natural_marker = true;
    p.split_marker = true;
    p.answer_tokens = 40;
  } else if (name == "budget") {
    p.thinking_tokens = 20000;
    p.emit_top_logprobs = false;  // keep the fixture small
  } else if (name == "longtail") {
    p.thinking_tokens = 1'200'000;
    p.baseline_entropy = 0.01;
    p.jitter = 0.08;
    p.hi_fraction = 0.05;
    p.hi_entropy = 5.0;
    p.emit_top_logprobs = false;
  } else {
    throw Error(Status::InvalidArgument, "synth: unknown profile '" + name + "'");
  }
  return p;
}

SynthProfile profile_from_spec(const std::string& name_or_json, uint64_t seed) {
  const std::string_view trimmed = strip(name_or_json);
  if (trimmed.empty() || trimmed.front() != '{') {
    return make_profile(std::string(trimmed), seed);
  }
  json j = json::parse(trimmed, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Status::ParseError, "synth: malformed profile JSON");
  }
  SynthProfile p;
  if (j.contains("base")) p = make_profile(j.at("base").get<std::string>(), seed);
  p.seed = seed;
  p.name = j.value("name", p.name);
  p.thinking_tokens = j.value("thinking_tokens", p.thinking_tokens);
  p.baseline_entropy = j.value("baseline_entropy", p.baseline_entropy);
  p.jitter = j.value("jitter", p.jitter);
  p.boundary_every = j.value("boundary_every", p.boundary_every);
  p.natural_marker = j.value("natural_marker", p.natural_marker);
  p.split_marker = j.value("split_marker", p.split_marker);
  p.answer_tokens = j.value("answer_tokens", p.answer_tokens);
  p.emit_entropy = j.value("emit_entropy", p.emit_entropy);
  p.emit_top_logprobs = j.value("emit_top_logprobs", p.emit_top_logprobs);
  p.marker = j.value("marker", p.marker);
  p.hi_fraction = j.value("hi_fraction", p.hi_fraction);
  p.hi_entropy = j.value("hi_entropy", p.hi_entropy);
  if (j.contains("spikes")) {
    p.spikes.clear();
    for (const auto& s : j.at("spikes")) {
      p.spikes.push_back(SpikeRegion{s.at("start").get<uint64_t>(), s.at("length").get<uint64_t>(),
                                     s.value("amplitude", 4.0)});
    }
  }
  return p;
}

Trace generate(const SynthProfile& profile) {
  profile.validate();
  Rng rng(profile.seed);

  Trace t;
  t.meta.model = "synthetic";
  t.meta.tokenizer = "synthetic";
  t.meta.extra = json{{"profile", profile.name}, {"seed", profile.seed}};
  if (!profile.spikes.empty()) {
    json spikes = json::array();
    for (const auto& s : profile.spikes) {
      spikes.push_back(json{{"start", s.start}, {"length", s.length}, {"amplitude", s.amplitude}});
    }
    t.meta.extra["spikes"] = std::move(spikes);
  }

  const auto in_spike = [&profile](uint64_t step) -> const SpikeRegion* {
    for (const auto& s : profile.spikes) {
      if (step >= s.start && step < s.start + s.length) return &s;
    }
    return nullptr;
  };

  uint64_t step = 0;
  const auto push = [&](std::string text, double entropy, TokenPhase phase) {
    TraceRecord rec;
    rec.step = ++step;
    rec.token_text = std::move(text);
    rec.phase = phase;
    rec.token_id = static_cast<int32_t>(rng.bounded(50000));
    if (profile.emit_entropy) rec.entropy_nats = entropy;
    if (profile.emit_top_logprobs) {
      rec.top_logprobs = trace::synthesize_top_logprobs(entropy, rec.token_text);
    }
    t.records.push_back(std::move(rec));
  };

  const auto jittered = [&](double center) {
    if (profile.jitter <= 0.0 || center <= 0.0) return center;
    return center * (1.0 + profile.jitter * (2.0 * rng.unit() - 1.0));
  };

  for (uint64_t i = 1; i <= profile.thinking_tokens; ++i) {
    const SpikeRegion* spike = in_spike(i);
    const bool hi = profile.hi_fraction > 0.0 ? rng.unit() < profile.hi_fraction
                                              : spike != nullptr;
    const double center = spike ? spike->amplitude
                                : (hi ? profile.hi_entropy : profile.baseline_entropy);
    const double h = jittered(center);

    std::string text;
    if (profile.boundary_every != 0 && i % profile.boundary_every == 0) {
      text = ". ";
    } else if (hi || spike) {
      text = transition_tokens()[rng.bounded(transition_tokens().size())];
    } else {
      text = filler_tokens()[rng.bounded(filler_tokens().size())];
    }
    push(std::move(text), h, TokenPhase::Thinking);
  }

  if (profile.natural_marker && !profile.marker.empty()) {
    if (profile.split_marker && profile.marker.size() >= 2) {
      const size_t cut = profile.marker.size() / 2;
      push(profile.marker.substr(0, cut), 0.05, TokenPhase::Thinking);
      push(profile.marker.substr(cut), 0.05, TokenPhase::Thinking);
    } else {
      push(profile.marker, 0.05, TokenPhase::Thinking);
    }
  }

  for (uint64_t i = 0; i < profile.answer_tokens; ++i) {
    const std::string text =
        i + 1 == profile.answer_tokens ? "42." : filler_tokens()[rng.bounded(filler_tokens().size())];
    push(text, jittered(profile.baseline_entropy * 0.5), TokenPhase::Answer);
  }

  return t;
}

}  // namespace rpdmon::lab
