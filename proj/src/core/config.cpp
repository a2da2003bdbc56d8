// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace rpdmon {

using nlohmann::json;

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Standard: return "standard";
    case Variant::NoGtf: return "no-gtf";
    case Variant::NoLtf: return "no-ltf";
    case Variant::NoBtm: return "no-btm";
  }
  return "standard";
}

Variant variant_from_string(std::string_view s) {
  if (s == "standard") return Variant::Standard;
  if (s == "no-gtf") return Variant::NoGtf;
  if (s == "no-ltf") return Variant::NoLtf;
  if (s == "no-btm") return Variant::NoBtm;
  throw Error(Status::InvalidArgument, "unknown variant: '" + std::string(s) + "'");
}

const char* to_string(UpstreamConfig::Style s) {
  return s == UpstreamConfig::Style::Chat ? "chat" : "raw-completion";
}

UpstreamConfig::Style upstream_style_from_string(std::string_view s) {
  if (s == "chat") return UpstreamConfig::Style::Chat;
  if (s == "raw-completion") return UpstreamConfig::Style::RawCompletion;
  throw Error(Status::InvalidArgument, "unknown upstream style: '" + std::string(s) + "'");
}

const std::vector<std::string>& default_boundary_set() {
  static const std::vector<std::string> kDefault = {"\n\n", ".\n\n", ". ", ".", "?", "!", ";"};
  return kDefault;
}

void PolicyConfig::validate() const {
  if (window < 1) throw Error(Status::InvalidArgument, "config: window must be >= 1");
  if (!(lambda > 0.0)) throw Error(Status::InvalidArgument, "config: lambda must be > 0");
  if (!(gtf_epsilon > 0.0)) throw Error(Status::InvalidArgument, "config: gtf_epsilon must be > 0");
  if (budget < 1) throw Error(Status::InvalidArgument, "config: budget must be >= 1");
  if (variant == Variant::Standard && budget <= window) {
    throw Error(Status::InvalidArgument,
                "config: budget must exceed window for the standard variant");
  }
}

void UpstreamConfig::validate() const {
  if (logprobs_top_k < 1) throw Error(Status::InvalidArgument, "config: upstream.top_k must be >= 1");
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw Error(Status::InvalidArgument, "config: upstream.base_url must be an http(s) URL");
  }
}

void Config::validate() const {
  policy.validate();
  upstream.validate();
  if (gateway.listen_port < 0 || gateway.listen_port > 65535) {
    throw Error(Status::InvalidArgument, "config: gateway.port out of range");
  }
}

namespace config {

namespace {

uint64_t parse_u64(std::string_view key, std::string_view value) {
  try {
    size_t pos = 0;
    const std::string s(value);
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(Status::InvalidArgument,
                "config: key '" + std::string(key) + "' expects an unsigned integer, got '" +
                    std::string(value) + "'");
  }
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    size_t pos = 0;
    const std::string s(value);
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(Status::InvalidArgument, "config: key '" + std::string(key) +
                                             "' expects a number, got '" + std::string(value) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(Status::InvalidArgument, "config: key '" + std::string(key) +
                                           "' expects a boolean, got '" + std::string(value) + "'");
}

std::vector<std::string> parse_string_list(std::string_view key, std::string_view value) {
  json j = json::parse(value, nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw Error(Status::InvalidArgument, "config: key '" + std::string(key) +
                                             "' expects a JSON array of strings");
  }
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) {
      throw Error(Status::InvalidArgument,
                  "config: key '" + std::string(key) + "' expects strings only");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string dump_string_list(const std::vector<std::string>& v) {
  return json(v).dump();
}

// JSON string encoding keeps control characters (e.g. "\n" in markers)
// representable in the flat file format.
std::string dump_string(const std::string& s) { return json(s).dump(); }

std::string parse_string(std::string_view key, std::string_view value) {
  if (!value.empty() && value.front() == '"') {
    json j = json::parse(value, nullptr, false);
    if (j.is_discarded() || !j.is_string()) {
      throw Error(Status::InvalidArgument,
                  "config: key '" + std::string(key) + "' has a malformed quoted string");
    }
    return j.get<std::string>();
  }
  return std::string(value);
}

struct KeyHandler {
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
  static const std::vector<std::pair<std::string, KeyHandler>> kTable = {
      {"window",
       {[](Config& c, std::string_view v) { c.policy.window = parse_u64("window", v); },
        [](const Config& c) { return std::to_string(c.policy.window); }}},
      {"lambda",
       {[](Config& c, std::string_view v) { c.policy.lambda = parse_double("lambda", v); },
        [](const Config& c) { return std::to_string(c.policy.lambda); }}},
      {"budget",
       {[](Config& c, std::string_view v) { c.policy.budget = parse_u64("budget", v); },
        [](const Config& c) { return std::to_string(c.policy.budget); }}},
      {"gtf_epsilon",
       {[](Config& c, std::string_view v) { c.policy.gtf_epsilon = parse_double("gtf_epsilon", v); },
        [](const Config& c) {
          std::ostringstream os;
          os << c.policy.gtf_epsilon;
          return os.str();
        }}},
      {"variant",
       {[](Config& c, std::string_view v) { c.policy.variant = variant_from_string(v); },
        [](const Config& c) { return std::string(to_string(c.policy.variant)); }}},
      {"tail_policy",
       {[](Config& c, std::string_view v) {
          c.policy.tail_policy = entropy::tail_policy_from_string(v);
        },
        [](const Config& c) { return std::string(entropy::to_string(c.policy.tail_policy)); }}},
      {"termination_marker",
       {[](Config& c, std::string_view v) {
          c.policy.termination_marker = parse_string("termination_marker", v);
        },
        [](const Config& c) { return dump_string(c.policy.termination_marker); }}},
      {"boundary_set",
       {[](Config& c, std::string_view v) {
          c.policy.boundary_set = parse_string_list("boundary_set", v);
        },
        [](const Config& c) { return dump_string_list(c.policy.boundary_set); }}},
      {"answer_reserve",
       {[](Config& c, std::string_view v) { c.policy.answer_reserve = parse_u64("answer_reserve", v); },
        [](const Config& c) { return std::to_string(c.policy.answer_reserve); }}},
      {"rebuild_interval",
       {[](Config& c, std::string_view v) {
          c.policy.rebuild_interval = parse_u64("rebuild_interval", v);
        },
        [](const Config& c) { return std::to_string(c.policy.rebuild_interval); }}},
      {"upstream.base_url",
       {[](Config& c, std::string_view v) { c.upstream.base_url = parse_string("upstream.base_url", v); },
        [](const Config& c) { return c.upstream.base_url; }}},
      {"upstream.top_k",
       {[](Config& c, std::string_view v) { c.upstream.logprobs_top_k = parse_u64("upstream.top_k", v); },
        [](const Config& c) { return std::to_string(c.upstream.logprobs_top_k); }}},
      {"upstream.timeout_ms",
       {[](Config& c, std::string_view v) {
          c.upstream.request_timeout = std::chrono::milliseconds(parse_u64("upstream.timeout_ms", v));
        },
        [](const Config& c) { return std::to_string(c.upstream.request_timeout.count()); }}},
      {"upstream.style",
       {[](Config& c, std::string_view v) { c.upstream.style = upstream_style_from_string(v); },
        [](const Config& c) { return std::string(to_string(c.upstream.style)); }}},
      {"gateway.listen",
       {[](Config& c, std::string_view v) { c.gateway.listen_address = parse_string("gateway.listen", v); },
        [](const Config& c) { return c.gateway.listen_address; }}},
      {"gateway.port",
       {[](Config& c, std::string_view v) {
          c.gateway.listen_port = static_cast<int>(parse_u64("gateway.port", v));
        },
        [](const Config& c) { return std::to_string(c.gateway.listen_port); }}},
      {"gateway.passthrough",
       {[](Config& c, std::string_view v) { c.gateway.passthrough = parse_bool("gateway.passthrough", v); },
        [](const Config& c) { return std::string(c.gateway.passthrough ? "true" : "false"); }}},
      {"gateway.skip_health_check",
       {[](Config& c, std::string_view v) {
          c.gateway.skip_health_check = parse_bool("gateway.skip_health_check", v);
        },
        [](const Config& c) { return std::string(c.gateway.skip_health_check ? "true" : "false"); }}},
  };
  return kTable;
}

const KeyHandler* find_key(std::string_view key) {
  for (const auto& [k, h] : key_table()) {
    if (k == key) return &h;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> keys;
    for (const auto& [k, _] : key_table()) keys.push_back(k);
    return keys;
  }();
  return kKeys;
}

void set_key(Config& cfg, std::string_view key, std::string_view value) {
  const KeyHandler* h = find_key(key);
  if (!h) throw Error(Status::InvalidArgument, "config: unknown key '" + std::string(key) + "'");
  h->set(cfg, value);
}

std::string get_key(const Config& cfg, std::string_view key) {
  const KeyHandler* h = find_key(key);
  if (!h) throw Error(Status::InvalidArgument, "config: unknown key '" + std::string(key) + "'");
  return h->get(cfg);
}

void load_stream(Config& cfg, std::istream& in, const std::string& origin) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = strip(line);
    if (v.empty() || v.front() == '#') continue;
    const size_t eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Status::ParseError,
                  origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = strip(v.substr(0, eq));
    const std::string_view value = strip(v.substr(eq + 1));
    try {
      set_key(cfg, key, value);
    } catch (const Error& e) {
      throw Error(Status::ParseError, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void load_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Status::IoError, "config: cannot open '" + path + "'");
  load_stream(cfg, in, path);
}

std::string env_var_for_key(std::string_view key) {
  std::string var = "RPDMON_";
  for (char c : key) {
    if (c == '.' || c == '-') {
      var += '_';
    } else {
      var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return var;
}

void apply_env(Config& cfg) {
  for (const auto& key : known_keys()) {
    const std::string var = env_var_for_key(key);
    if (const char* v = std::getenv(var.c_str())) {
      try {
        set_key(cfg, key, v);
      } catch (const Error& e) {
        throw Error(Status::InvalidArgument, var + ": " + e.what());
      }
    }
  }
}

}  // namespace config

}  // namespace rpdmon
