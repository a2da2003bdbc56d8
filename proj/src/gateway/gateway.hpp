#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

/**
 * Streaming chat-completions gateway with reasoning-path monitoring.
 *
 * Each client request runs an isolated Session. The gateway forwards the
 * request upstream with per-token logprobs enabled, computes entropy from
 * the top-k lists under the configured tail policy, and feeds the monitor.
 * On early exit it cancels the in-flight upstream stream and issues one
 * continuation request whose prompt is exactly P + R + T with max_tokens set
 * to the remaining answer budget — the protocol-level equivalent of
 * injecting the termination marker. The client-visible text on that path is
 * (thinking tokens) + T + (answer tokens).
 *
 * Clients opt into per-token annotation events with the
 * `X-Monitor-Annotations: true` header or a `"monitor_annotations": true`
 * body field; the wire format is otherwise drop-in compatible.
 *
 * Upstream work runs on a per-request worker thread feeding a bounded event
 * queue drained by the response writer, so connect failures before any byte
 * is streamed surface as a plain 502 with a structured body.
 */

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "core/config.hpp"

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace rpdmon::gateway {

struct GatewayStats {
  uint64_t requests = 0;
  uint64_t upstream_cancels = 0;
  uint64_t continuations = 0;
  uint64_t early_exits = 0;
  uint64_t natural_ends = 0;
  uint64_t budget_exhausted = 0;
  uint64_t errors = 0;
};

class Gateway {
 public:
  explicit Gateway(Config cfg);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds, health-checks the upstream (unless skipped), and starts serving
  /// on a background thread. Throws Error(HttpError) on bind or health failure.
  void start();

  /// Stops accepting and drains in-flight sessions.
  void stop();

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  GatewayStats stats() const;
  const Config& config() const { return cfg_; }

 private:
  void handle_passthrough(const httplib::Request& req, httplib::Response& res, bool stream);

  struct Counters {
    std::atomic<uint64_t> requests{0};
    std::atomic<uint64_t> upstream_cancels{0};
    std::atomic<uint64_t> continuations{0};
    std::atomic<uint64_t> early_exits{0};
    std::atomic<uint64_t> natural_ends{0};
    std::atomic<uint64_t> budget_exhausted{0};
    std::atomic<uint64_t> errors{0};
  };

  Config cfg_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listen_thread_;
  int port_ = 0;
  std::unique_ptr<Counters> counters_;
};

}  // namespace rpdmon::gateway
