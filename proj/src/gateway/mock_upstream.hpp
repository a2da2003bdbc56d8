#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Scripted mock inference server that replays trace files over the same
 * chat-completions/raw-completion streaming contract the gateway expects
 * from a real upstream.
 *
 * The initial request for a model streams that model's trace records in
 * order (thinking phase, then any answer phase, one SSE chunk per record,
 * logprobs included when requested). A continuation request — detected by
 * `continue_final_message`, a trailing assistant message, or a raw prompt
 * containing the termination marker — streams the answer-phase records only,
 * or a canned answer when the trace has none.
 *
 * Every request is appended to an interaction log, including whether the
 * client aborted the stream mid-flight, so tests can assert on the exact
 * cancel/continuation traffic the gateway produced.
 */

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "core/trace.hpp"

namespace httplib {
class Server;
}

namespace rpdmon::gateway {

struct MockRequest {
  std::string endpoint;        // "/v1/chat/completions" or "/v1/completions"
  std::string model;
  bool is_continuation = false;
  bool logprobs_requested = false;
  uint64_t max_tokens = 0;
  uint64_t chunks_sent = 0;
  bool aborted = false;        // stream write failed (client cancelled)
  bool completed = false;      // [DONE] delivered
  std::string prompt_tail;     // last bytes of the prompt/messages, for assertions
  std::string authorization;   // forwarded credential header, verbatim
};

class MockUpstream {
 public:
  MockUpstream();
  ~MockUpstream();

  MockUpstream(const MockUpstream&) = delete;
  MockUpstream& operator=(const MockUpstream&) = delete;

  /// Registers a trace under a model name ("" sets the fallback).
  void add_trace(const std::string& model, trace::Trace t);
  void add_trace_file(const std::string& model, const std::string& path);

  /// When set, logprobs are omitted even if the request asks for them.
  void set_omit_logprobs(bool v) { omit_logprobs_ = v; }

  /// When set, emitted logprobs are invalid (positive), for error-path tests.
  void set_corrupt_logprobs(bool v) { corrupt_logprobs_ = v; }

  void start(int port = 0);  // 0 binds an ephemeral port
  void stop();
  int port() const { return port_; }
  std::string base_url() const;

  std::vector<MockRequest> requests() const;
  size_t continuation_requests() const;
  size_t aborted_streams() const;

 private:
  void handle_completion(const std::string& endpoint, bool chat, const std::string& body,
                         std::string& out_error, int& out_status, size_t& out_request_index);

  std::unique_ptr<httplib::Server> server_;
  std::thread listen_thread_;
  int port_ = 0;
  bool omit_logprobs_ = false;
  bool corrupt_logprobs_ = false;

  mutable std::mutex mutex_;
  std::map<std::string, trace::Trace> traces_;
  std::vector<MockRequest> log_;
};

}  // namespace rpdmon::gateway
