// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "sse.hpp"

#include <ctime>

namespace rpdmon::gateway {

using nlohmann::json;

bool SseParser::feed(std::string_view bytes, const std::function<bool(const std::string&)>& on_data) {
  buffer_.append(bytes);
  for (;;) {
    size_t end = buffer_.find("\n\n");
    size_t skip = 2;
    const size_t crlf = buffer_.find("\r\n\r\n");
    if (crlf != std::string::npos && (end == std::string::npos || crlf < end)) {
      end = crlf;
      skip = 4;
    }
    if (end == std::string::npos) return true;

    const std::string event = buffer_.substr(0, end);
    buffer_.erase(0, end + skip);

    // Join the data lines of this event; ignore other fields and comments.
    std::string data;
    size_t pos = 0;
    while (pos < event.size()) {
      size_t eol = event.find('\n', pos);
      if (eol == std::string::npos) eol = event.size();
      std::string_view line(event.data() + pos, eol - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.rfind("data:", 0) == 0) {
        std::string_view v = line.substr(5);
        if (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        if (!data.empty()) data += '\n';
        data.append(v);
      }
      pos = eol + 1;
    }
    if (!data.empty() && !on_data(data)) return false;
  }
}

std::string sse_event(const std::string& payload) { return "data: " + payload + "\n\n"; }

std::string sse_done() { return "data: [DONE]\n\n"; }

UpstreamToken parse_upstream_chunk(const std::string& payload, UpstreamConfig::Style style) {
  json j = json::parse(payload, nullptr, false);
  if (j.is_discarded()) {
    throw Error(Status::ParseError, "upstream: malformed chunk JSON");
  }
  UpstreamToken tok;
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    return tok;  // keep-alive or unknown control chunk
  }
  const json& choice = j["choices"][0];
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    tok.finish_reason = choice["finish_reason"].get<std::string>();
  }

  if (style == UpstreamConfig::Style::Chat) {
    if (choice.contains("delta") && choice["delta"].contains("content") &&
        choice["delta"]["content"].is_string()) {
      tok.text = choice["delta"]["content"].get<std::string>();
      tok.has_content = true;
    }
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array() &&
        !choice["logprobs"]["content"].empty()) {
      tok.raw_logprobs = choice["logprobs"];
      const json& entry = choice["logprobs"]["content"][0];
      if (entry.contains("top_logprobs") && entry["top_logprobs"].is_array() &&
          !entry["top_logprobs"].empty()) {
        for (const auto& lp : entry["top_logprobs"]) {
          tok.top_logprobs.emplace_back(lp.value("token", ""), lp.at("logprob").get<double>());
        }
        tok.has_logprobs = true;
      } else if (entry.contains("logprob") && entry["logprob"].is_number()) {
        tok.top_logprobs.emplace_back(entry.value("token", ""), entry["logprob"].get<double>());
        tok.has_logprobs = true;
      }
    }
  } else {
    if (choice.contains("text") && choice["text"].is_string()) {
      tok.text = choice["text"].get<std::string>();
      tok.has_content = true;
    }
    if (choice.contains("logprobs") && choice["logprobs"].is_object()) {
      const json& lp = choice["logprobs"];
      tok.raw_logprobs = lp;
      if (lp.contains("top_logprobs") && lp["top_logprobs"].is_array() &&
          !lp["top_logprobs"].empty() && lp["top_logprobs"][0].is_object()) {
        for (const auto& [text, v] : lp["top_logprobs"][0].items()) {
          tok.top_logprobs.emplace_back(text, v.get<double>());
        }
        tok.has_logprobs = !tok.top_logprobs.empty();
      } else if (lp.contains("token_logprobs") && lp["token_logprobs"].is_array() &&
                 !lp["token_logprobs"].empty() && lp["token_logprobs"][0].is_number()) {
        tok.top_logprobs.emplace_back(tok.text, lp["token_logprobs"][0].get<double>());
        tok.has_logprobs = true;
      }
    }
  }
  return tok;
}

json make_client_chunk(const std::string& request_id, const std::string& model,
                       const std::string& content, const std::optional<std::string>& finish_reason,
                       const json& logprobs) {
  json delta = json::object();
  if (!content.empty() || !finish_reason) delta["content"] = content;
  json choice{{"index", 0}, {"delta", std::move(delta)}};
  choice["finish_reason"] = finish_reason ? json(*finish_reason) : json(nullptr);
  if (!logprobs.is_null()) choice["logprobs"] = logprobs;
  return json{{"id", request_id},
              {"object", "chat.completion.chunk"},
              {"created", static_cast<int64_t>(std::time(nullptr))},
              {"model", model},
              {"choices", json::array({std::move(choice)})}};
}

}  // namespace rpdmon::gateway
