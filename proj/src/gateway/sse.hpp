#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Server-sent-event framing plus the chat-completions chunk formats used on
 * both sides of the gateway. The upstream parser accepts the streaming chunk
 * shapes of chat (`delta.content` + `logprobs.content[]`) and raw completion
 * (`text` + `logprobs.top_logprobs[]`) endpoints.
 */

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "core/common.hpp"
#include "core/config.hpp"

namespace rpdmon::gateway {

/// Incremental SSE decoder: feed raw bytes, get complete `data:` payloads.
class SseParser {
 public:
  /// Returns false from the callback to stop parsing (propagated to caller).
  bool feed(std::string_view bytes, const std::function<bool(const std::string&)>& on_data);

 private:
  std::string buffer_;
};

std::string sse_event(const std::string& payload);
std::string sse_done();

/// One upstream streaming chunk, normalized across completion styles.
struct UpstreamToken {
  std::string text;
  std::vector<std::pair<std::string, double>> top_logprobs;
  nlohmann::json raw_logprobs;  // verbatim, for client passthrough
  std::optional<std::string> finish_reason;
  bool has_content = false;
  bool has_logprobs = false;
};

/// Parses one upstream chunk payload; throws Error(ParseError) on malformed JSON.
UpstreamToken parse_upstream_chunk(const std::string& payload, UpstreamConfig::Style style);

/// Chat-completions chunk for the downstream client.
nlohmann::json make_client_chunk(const std::string& request_id, const std::string& model,
                                 const std::string& content,
                                 const std::optional<std::string>& finish_reason,
                                 const nlohmann::json& logprobs = nullptr);

}  // namespace rpdmon::gateway
