// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "trace.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rpdmon::trace {

using nlohmann::json;

const char* to_string(TokenPhase p) { return p == TokenPhase::Thinking ? "thinking" : "answer"; }

TokenPhase phase_from_string(std::string_view s) {
  if (s == "thinking") return TokenPhase::Thinking;
  if (s == "answer") return TokenPhase::Answer;
  throw Error(Status::ParseError, "unknown phase: '" + std::string(s) + "'");
}

uint64_t Trace::thinking_tokens() const {
  uint64_t n = 0;
  for (const auto& r : records) {
    if (r.phase == TokenPhase::Thinking) ++n;
  }
  return n;
}

namespace {

[[noreturn]] void fail_at(const std::string& origin, size_t line_no, const std::string& msg) {
  throw Error(Status::ParseError, origin + ":" + std::to_string(line_no) + ": " + msg);
}

TraceMeta parse_meta(const json& j, const std::string& origin) {
  TraceMeta meta;
  meta.schema_version = j.value("schema_version", 0);
  if (meta.schema_version != kSchemaVersion) {
    fail_at(origin, 1,
            "unsupported schema_version " + std::to_string(meta.schema_version) + " (expected " +
                std::to_string(kSchemaVersion) + ")");
  }
  meta.model = j.value("model", "unknown");
  meta.tokenizer = j.value("tokenizer", "unknown");
  if (j.contains("tail_policy")) {
    meta.tail_policy = entropy::tail_policy_from_string(j.at("tail_policy").get<std::string>());
  }
  meta.extra = json::object();
  for (auto& [key, value] : j.items()) {
    if (key != "schema_version" && key != "model" && key != "tokenizer" && key != "tail_policy") {
      meta.extra[key] = value;
    }
  }
  return meta;
}

TraceRecord parse_record(const json& j, const std::string& origin, size_t line_no) {
  TraceRecord rec;
  if (!j.contains("step") || !j.at("step").is_number_unsigned()) {
    fail_at(origin, line_no, "record missing unsigned 'step'");
  }
  rec.step = j.at("step").get<uint64_t>();
  if (!j.contains("token_text") || !j.at("token_text").is_string()) {
    fail_at(origin, line_no, "record missing string 'token_text'");
  }
  rec.token_text = j.at("token_text").get<std::string>();
  if (j.contains("token_id")) rec.token_id = j.at("token_id").get<int32_t>();
  if (j.contains("entropy_nats")) {
    if (!j.at("entropy_nats").is_number()) fail_at(origin, line_no, "'entropy_nats' must be a number");
    rec.entropy_nats = j.at("entropy_nats").get<double>();
  }
  if (j.contains("top_logprobs")) {
    const auto& arr = j.at("top_logprobs");
    if (!arr.is_array()) fail_at(origin, line_no, "'top_logprobs' must be an array");
    std::vector<std::pair<std::string, double>> lps;
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number()) {
        fail_at(origin, line_no, "'top_logprobs' entries must be [text, logprob] pairs");
      }
      lps.emplace_back(e[0].get<std::string>(), e[1].get<double>());
    }
    rec.top_logprobs = std::move(lps);
  }
  if (j.contains("phase")) {
    try {
      rec.phase = phase_from_string(j.at("phase").get<std::string>());
    } catch (const Error& e) {
      fail_at(origin, line_no, e.what());
    }
  }
  return rec;
}

}  // namespace

double record_entropy(const TraceRecord& rec, entropy::TailPolicy policy) {
  if (rec.entropy_nats) return *rec.entropy_nats;
  if (rec.top_logprobs) {
    std::vector<double> lps;
    lps.reserve(rec.top_logprobs->size());
    for (const auto& [_, lp] : *rec.top_logprobs) lps.push_back(lp);
    return entropy::from_topk_logprobs(lps, policy);
  }
  throw Error(Status::InvalidArgument,
              "record " + std::to_string(rec.step) + " has neither entropy_nats nor top_logprobs");
}

void validate(const Trace& t, const std::string& origin) {
  uint64_t expected_step = 1;
  size_t line_no = 1;  // meta is line 1
  bool answer_seen = false;
  for (const auto& rec : t.records) {
    ++line_no;
    if (rec.step != expected_step) {
      fail_at(origin, line_no,
              "step " + std::to_string(rec.step) + " breaks the consecutive sequence (expected " +
                  std::to_string(expected_step) + ")");
    }
    ++expected_step;
    if (rec.phase == TokenPhase::Answer) {
      answer_seen = true;
    } else if (answer_seen) {
      fail_at(origin, line_no, "thinking record after the answer phase began");
    }
    if (!rec.entropy_nats && !rec.top_logprobs) {
      fail_at(origin, line_no, "record needs entropy_nats or top_logprobs");
    }
    if (rec.entropy_nats && (!std::isfinite(*rec.entropy_nats) || *rec.entropy_nats < 0.0)) {
      fail_at(origin, line_no, "entropy_nats must be finite and >= 0");
    }
    if (rec.top_logprobs && rec.top_logprobs->empty()) {
      fail_at(origin, line_no, "top_logprobs must be non-empty when present");
    }
    if (rec.entropy_nats && rec.top_logprobs) {
      std::vector<double> lps;
      for (const auto& [_, lp] : *rec.top_logprobs) lps.push_back(lp);
      double h;
      try {
        h = entropy::from_topk_logprobs(lps, t.meta.tail_policy);
      } catch (const Error& e) {
        fail_at(origin, line_no, e.what());
      }
      if (std::abs(h - *rec.entropy_nats) > kEntropyAgreementTolerance) {
        std::ostringstream os;
        os << "entropy_nats " << *rec.entropy_nats << " disagrees with top_logprobs entropy " << h
           << " under tail policy " << entropy::to_string(t.meta.tail_policy);
        fail_at(origin, line_no, os.str());
      }
    }
  }
}

Trace parse(std::istream& in, const std::string& origin) {
  Trace t;
  std::string line;
  size_t line_no = 0;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail_at(origin, line_no, "malformed JSON");
    if (!have_meta) {
      if (!j.contains("schema_version")) {
        fail_at(origin, line_no, "first line must be the meta object (schema_version)");
      }
      t.meta = parse_meta(j, origin);
      have_meta = true;
      continue;
    }
    t.records.push_back(parse_record(j, origin, line_no));
  }
  if (!have_meta) fail_at(origin, 1, "empty trace (no meta line)");
  validate(t, origin);
  return t;
}

Trace read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Status::IoError, "trace: cannot open '" + path + "'");
  return parse(in, path);
}

void write(const Trace& t, std::ostream& out) {
  json meta{{"schema_version", t.meta.schema_version},
            {"model", t.meta.model},
            {"tail_policy", entropy::to_string(t.meta.tail_policy)},
            {"tokenizer", t.meta.tokenizer}};
  if (t.meta.extra.is_object()) {
    for (auto& [key, value] : t.meta.extra.items()) meta[key] = value;
  }
  out << meta.dump() << '\n';
  for (const auto& rec : t.records) {
    json j{{"step", rec.step}, {"token_text", rec.token_text}, {"phase", to_string(rec.phase)}};
    if (rec.token_id) j["token_id"] = *rec.token_id;
    if (rec.entropy_nats) j["entropy_nats"] = *rec.entropy_nats;
    if (rec.top_logprobs) {
      json arr = json::array();
      for (const auto& [text, lp] : *rec.top_logprobs) arr.push_back(json::array({text, lp}));
      j["top_logprobs"] = std::move(arr);
    }
    out << j.dump() << '\n';
  }
}

void write_file(const Trace& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Status::IoError, "trace: cannot write '" + path + "'");
  write(t, out);
}

std::vector<std::pair<std::string, double>> synthesize_top_logprobs(double target_h,
                                                                    const std::string& token_text) {
  if (!std::isfinite(target_h) || target_h < 0.0) {
    throw Error(Status::InvalidArgument, "synthesize_top_logprobs: entropy must be finite and >= 0");
  }
  if (target_h < 1e-12) {
    return {{token_text, 0.0}};
  }

  // Head mass q plus m-1 equal tail entries; H(q) = -q ln q - (1-q) ln((1-q)/(m-1))
  // decreases from ln m at q = 1/m to 0 as q -> 1, so bisection on q finds the
  // unique solution once m is large enough that ln m > target_h.
  size_t m = 2;
  if (target_h >= std::log(2.0) * 0.9999) {
    m = static_cast<size_t>(std::ceil(std::exp(target_h))) + 1;
  }
  if (m > 65536) {
    throw Error(Status::InvalidArgument,
                "synthesize_top_logprobs: entropy " + std::to_string(target_h) +
                    " needs an implausibly large support");
  }

  const auto h_of = [m](double q) {
    const double tail = (1.0 - q) / static_cast<double>(m - 1);
    double h = 0.0;
    if (q > 0.0) h -= q * std::log(q);
    if (tail > 0.0) h -= (1.0 - q) * std::log(tail);
    return h;
  };

  double lo = 1.0 / static_cast<double>(m);  // H = ln m >= target
  double hi = 1.0 - 1e-16;                   // H ~ 0
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (h_of(mid) >= target_h) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double q = 0.5 * (lo + hi);
  const double tail = (1.0 - q) / static_cast<double>(m - 1);

  std::vector<std::pair<std::string, double>> out;
  out.reserve(m);
  out.emplace_back(token_text, std::log(q));
  for (size_t i = 1; i < m; ++i) {
    out.emplace_back("~alt" + std::to_string(i), std::log(tail));
  }
  return out;
}

}  // namespace rpdmon::trace
