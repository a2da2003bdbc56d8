// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "gateway.hpp"

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

#include "httplib.h"
#include "json.hpp"

#include "core/entropy.hpp"
#include "core/session.hpp"
#include "sse.hpp"

namespace rpdmon::gateway {

using nlohmann::json;

namespace {

struct Event {
  enum class Kind { Payload, End, Fail };
  Kind kind = Kind::Payload;
  std::string payload;  // JSON payload (no SSE framing) or Fail body
  int status = 0;       // Fail only
};

class EventQueue {
 public:
  void push(Event e) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(e));
    }
    cv_.notify_one();
  }

  Event pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty(); });
    Event e = std::move(queue_.front());
    queue_.pop_front();
    return e;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Event> queue_;
};

struct ProxyTask {
  EventQueue queue;
  std::atomic<bool> client_gone{false};
  std::thread worker;

  ~ProxyTask() {
    client_gone.store(true);
    if (worker.joinable()) worker.join();
  }
};

std::string flatten_messages(const json& messages) {
  std::string out;
  for (const auto& m : messages) {
    out += m.value("role", "user");
    out += ": ";
    out += m.value("content", "");
    out += "\n";
  }
  out += "assistant: ";
  return out;
}

json error_body(const std::string& code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}, {"type", "gateway_error"}}}};
}

std::unique_ptr<httplib::Client> make_upstream_client(const UpstreamConfig& up) {
  auto cli = std::make_unique<httplib::Client>(up.base_url);
  const auto timeout = up.request_timeout;
  cli->set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                        (timeout % std::chrono::seconds(1)).count() * 1000);
  cli->set_write_timeout(30, 0);
  cli->set_connection_timeout(5, 0);
  return cli;
}

/// Everything one proxied request needs, run on the worker thread.
class ProxyWorker {
 public:
  ProxyWorker(std::shared_ptr<ProxyTask> task, Config cfg, json client_body, std::string auth,
              bool annotations, std::function<void(const char*)> bump)
      : task_(std::move(task)),
        cfg_(std::move(cfg)),
        client_body_(std::move(client_body)),
        auth_(std::move(auth)),
        annotations_(annotations),
        bump_(std::move(bump)) {}

  void run() {
    try {
      run_inner();
    } catch (const Error& e) {
      fail(e.code() == Status::HttpError ? 502 : 500, "internal", e.what());
    } catch (const std::exception& e) {
      fail(500, "internal", e.what());
    }
  }

 private:
  void push_payload(json j) {
    pushed_any_ = true;
    task_->queue.push(Event{Event::Kind::Payload, j.dump(), 0});
  }

  void fail(int status, const std::string& code, const std::string& message) {
    bump_("errors");
    if (!pushed_any_) {
      task_->queue.push(Event{Event::Kind::Fail, error_body(code, message).dump(), status});
    } else {
      push_payload(error_body(code, message));
      task_->queue.push(Event{Event::Kind::End, "", 0});
    }
    failed_ = true;
  }

  void push_content(const std::string& text, const json& logprobs = nullptr) {
    push_payload(make_client_chunk(request_id_, model_, text, std::nullopt,
                                   client_wants_logprobs_ ? logprobs : json(nullptr)));
  }

  void push_observe_annotation(const session::Session& sess, double entropy) {
    if (!annotations_) return;
    const auto& mon = sess.mon();
    json a{{"object", "monitor.annotation"}, {"event", "observe"},
           {"step", mon.step()},           {"entropy", entropy},
           {"ltf", mon.ltf()},             {"gtf", mon.gtf()}};
    const auto r = mon.rpdi();
    a["rpdi"] = r ? json(*r) : json(nullptr);
    push_payload(std::move(a));
  }

  void push_result_annotation(const session::Session& sess, uint64_t continuations) {
    if (!annotations_) return;
    const auto& out = sess.outcome();
    json a{{"object", "monitor.result"},
           {"outcome", to_string(out.kind)},
           {"exit_step", out.step},
           {"thinking_tokens", sess.thinking_tokens()},
           {"answer_tokens", sess.tokens_consumed() - sess.thinking_tokens()},
           {"continuations", continuations}};
    a["rpdi"] = out.rpdi ? json(*out.rpdi) : json(nullptr);
    push_payload(std::move(a));
  }

  json build_thinking_request() const {
    json body;
    body["model"] = model_;
    body["stream"] = true;
    body["max_tokens"] = cfg_.policy.budget;
    if (cfg_.upstream.style == UpstreamConfig::Style::Chat) {
      body["messages"] = client_body_.value("messages", json::array());
      body["logprobs"] = true;
      body["top_logprobs"] = cfg_.upstream.logprobs_top_k;
    } else {
      body["prompt"] = prompt_;
      body["logprobs"] = cfg_.upstream.logprobs_top_k;
    }
    return body;
  }

  json build_continuation_request(const session::Action& action) const {
    json body;
    body["model"] = model_;
    body["stream"] = true;
    body["max_tokens"] = action.effective_answer_budget;
    if (cfg_.upstream.style == UpstreamConfig::Style::Chat) {
      json messages = client_body_.value("messages", json::array());
      messages.push_back(json{{"role", "assistant"},
                              {"content", session_->reasoning() + cfg_.policy.termination_marker}});
      body["messages"] = std::move(messages);
      body["continue_final_message"] = true;
      body["add_generation_prompt"] = false;
    } else {
      body["prompt"] = action.continuation_prefix;
    }
    return body;
  }

  static const char* upstream_path(UpstreamConfig::Style style) {
    return style == UpstreamConfig::Style::Chat ? "/v1/chat/completions" : "/v1/completions";
  }

  httplib::Request make_post(const json& body) const {
    httplib::Request req;
    req.method = "POST";
    req.path = upstream_path(cfg_.upstream.style);
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", "text/event-stream");
    if (!auth_.empty()) req.set_header("Authorization", auth_);
    req.body = body.dump();
    return req;
  }

  void run_inner() {
    model_ = client_body_.value("model", "default");
    client_wants_logprobs_ = client_body_.value("logprobs", false);
    prompt_ = flatten_messages(client_body_.value("messages", json::array()));
    session_.emplace(prompt_, cfg_.policy);

    auto cli = make_upstream_client(cfg_.upstream);

    SseParser parser;
    std::optional<session::Action> exit_action;
    bool natural_passthrough = false;
    bool cancelled_for_exit = false;

    httplib::Request req = make_post(build_thinking_request());
    req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) -> bool {
      if (task_->client_gone.load(std::memory_order_relaxed)) return false;
      return parser.feed(std::string_view(data, len), [&](const std::string& payload) -> bool {
        if (payload == "[DONE]") return true;
        const UpstreamToken tok = parse_upstream_chunk(payload, cfg_.upstream.style);
        if (!tok.has_content || tok.text.empty()) return true;

        if (natural_passthrough) {
          // Monitoring stopped at the model's own marker; relay the rest.
          push_content(tok.text, tok.raw_logprobs);
          return true;
        }

        if (!tok.has_logprobs) {
          fail(502, "missing_logprobs",
               "upstream stream chunk carries no logprobs.top_logprobs; "
               "enable logprobs on the upstream or use passthrough mode");
          return false;
        }

        std::vector<double> lps;
        lps.reserve(tok.top_logprobs.size());
        for (const auto& [_, lp] : tok.top_logprobs) lps.push_back(lp);

        session::Action action;
        try {
          entropy::TokenObservation obs;
          obs.step = session_->mon().step() + 1;
          obs.token_id = -1;
          obs.token_text = tok.text;
          obs.entropy_nats = entropy::from_topk_logprobs(lps, cfg_.policy.tail_policy);
          action = session_->feed(obs);
          last_entropy_ = obs.entropy_nats;
        } catch (const Error& e) {
          fail(502, "bad_upstream_logprobs", e.what());
          return false;
        }
        push_content(tok.text, tok.raw_logprobs);

        switch (action.kind) {
          case session::ActionKind::KeepStreaming:
            push_observe_annotation(*session_, last_entropy_);
            return true;
          case session::ActionKind::Finish:
            natural_passthrough = true;
            if (annotations_) {
              push_payload(json{{"object", "monitor.annotation"},
                                {"event", "natural_end"},
                                {"step", session_->outcome().step}});
            }
            return true;
          case session::ActionKind::EnactExit:
            push_observe_annotation(*session_, last_entropy_);
            exit_action = action;
            return false;  // cancel the in-flight upstream stream
        }
        return true;
      });
    };

    const httplib::Result result = cli->send(req);
    if (failed_ || task_->client_gone.load()) {
      if (!failed_) task_->queue.push(Event{Event::Kind::End, "", 0});
      return;
    }

    if (exit_action) {
      cancelled_for_exit = true;
      bump_("upstream_cancels");
    } else if (!result || (result.error() != httplib::Error::Success &&
                           result.error() != httplib::Error::Canceled)) {
      fail(502, "upstream_unreachable",
           "upstream request failed: " + httplib::to_string(result.error()));
      return;
    } else if (result->status != 200) {
      fail(502, "upstream_status",
           "upstream returned HTTP " + std::to_string(result->status) + ": " + result->body);
      return;
    }

    uint64_t continuations = 0;
    if (cancelled_for_exit) {
      const session::Action& action = *exit_action;
      const auto& out = session_->outcome();
      bump_(out.kind == session::OutcomeKind::ExitedEarly ? "early_exits" : "budget_exhausted");

      // Inject the termination marker into the client-visible stream.
      push_content(cfg_.policy.termination_marker);
      if (annotations_) {
        json a{{"object", "monitor.annotation"},
               {"event", out.kind == session::OutcomeKind::ExitedEarly ? "early_exit"
                                                                       : "budget_exhausted"},
               {"step", out.step},
               {"answer_budget", action.answer_budget},
               {"effective_answer_budget", action.effective_answer_budget},
               {"zero_remaining", action.zero_remaining}};
        a["rpdi"] = out.rpdi ? json(*out.rpdi) : json(nullptr);
        push_payload(std::move(a));
      }

      bump_("continuations");
      continuations = 1;
      auto cont_cli = make_upstream_client(cfg_.upstream);
      SseParser cont_parser;
      httplib::Request cont_req = make_post(build_continuation_request(action));
      cont_req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) -> bool {
        if (task_->client_gone.load(std::memory_order_relaxed)) return false;
        return cont_parser.feed(std::string_view(data, len), [&](const std::string& payload) {
          if (payload == "[DONE]") return true;
          const UpstreamToken tok = parse_upstream_chunk(payload, cfg_.upstream.style);
          if (tok.has_content && !tok.text.empty()) {
            session_->note_answer_tokens(1);
            push_content(tok.text);
          }
          return true;
        });
      };
      const httplib::Result cont_result = cont_cli->send(cont_req);
      if (task_->client_gone.load()) {
        task_->queue.push(Event{Event::Kind::End, "", 0});
        return;
      }
      if (!cont_result || cont_result->status != 200) {
        // Continuation rejected: surface the partial reasoning for diagnosis.
        bump_("errors");
        json err = error_body("continuation_failed",
                              cont_result ? "upstream rejected continuation with HTTP " +
                                                std::to_string(cont_result->status)
                                          : "upstream connection failed during continuation");
        err["error"]["exit_step"] = out.step;
        err["error"]["reasoning"] = session_->reasoning();
        push_payload(std::move(err));
        task_->queue.push(Event{Event::Kind::End, "", 0});
        return;
      }
    } else if (session_->outcome().kind == session::OutcomeKind::Pending) {
      // Upstream finished without marker, exit, or budget: the model simply
      // stopped thinking; treat the stream end as a natural end.
      session_->finish_input();
      bump_("natural_ends");
    } else {
      bump_("natural_ends");
    }

    push_payload(make_client_chunk(request_id_, model_, "", std::string("stop")));
    push_result_annotation(*session_, continuations);
    task_->queue.push(Event{Event::Kind::End, "", 0});
  }

  std::shared_ptr<ProxyTask> task_;
  Config cfg_;
  json client_body_;
  std::string auth_;
  bool annotations_ = false;
  std::function<void(const char*)> bump_;

  std::string model_ = "default";
  std::string prompt_;
  std::string request_id_ = "gwcmpl-1";
  bool client_wants_logprobs_ = false;
  bool pushed_any_ = false;
  bool failed_ = false;
  double last_entropy_ = 0.0;
  std::optional<session::Session> session_;
};

}  // namespace

Gateway::Gateway(Config cfg)
    : cfg_(std::move(cfg)),
      server_(std::make_unique<httplib::Server>()),
      counters_(std::make_unique<Counters>()) {
  cfg_.validate();
}

Gateway::~Gateway() { stop(); }

GatewayStats Gateway::stats() const {
  GatewayStats s;
  s.requests = counters_->requests.load();
  s.upstream_cancels = counters_->upstream_cancels.load();
  s.continuations = counters_->continuations.load();
  s.early_exits = counters_->early_exits.load();
  s.natural_ends = counters_->natural_ends.load();
  s.budget_exhausted = counters_->budget_exhausted.load();
  s.errors = counters_->errors.load();
  return s;
}

void Gateway::start() {
  if (!cfg_.gateway.skip_health_check) {
    auto cli = make_upstream_client(cfg_.upstream);
    cli->set_read_timeout(3, 0);
    cli->set_connection_timeout(3, 0);
    const auto res = cli->Get("/v1/models");
    if (!res || res->status != 200) {
      throw Error(Status::HttpError,
                  "gateway: upstream health check failed at " + cfg_.upstream.base_url +
                      "/v1/models" + (res ? " (HTTP " + std::to_string(res->status) + ")" : ""));
    }
  }

  auto bump = [counters = counters_.get()](const char* name) {
    const std::string_view n(name);
    if (n == "upstream_cancels") counters->upstream_cancels.fetch_add(1);
    else if (n == "continuations") counters->continuations.fetch_add(1);
    else if (n == "early_exits") counters->early_exits.fetch_add(1);
    else if (n == "natural_ends") counters->natural_ends.fetch_add(1);
    else if (n == "budget_exhausted") counters->budget_exhausted.fetch_add(1);
    else if (n == "errors") counters->errors.fetch_add(1);
  };

  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });

  server_->Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    const GatewayStats s = stats();
    res.set_content(json{{"requests", s.requests},
                         {"upstream_cancels", s.upstream_cancels},
                         {"continuations", s.continuations},
                         {"early_exits", s.early_exits},
                         {"natural_ends", s.natural_ends},
                         {"budget_exhausted", s.budget_exhausted},
                         {"errors", s.errors}}
                        .dump(),
                    "application/json");
  });

  server_->Post("/v1/chat/completions", [this, bump](const httplib::Request& req,
                                                     httplib::Response& res) {
    counters_->requests.fetch_add(1);

    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      res.set_content(error_body("bad_request", "malformed JSON body").dump(), "application/json");
      return;
    }
    const bool stream = body.value("stream", false);
    const std::string auth = req.get_header_value("Authorization");

    if (cfg_.gateway.passthrough) {
      handle_passthrough(req, res, stream);
      return;
    }

    const bool annotations = body.value("monitor_annotations", false) ||
                             req.get_header_value("X-Monitor-Annotations") == "true" ||
                             req.get_header_value("X-Monitor-Annotations") == "1";

    const std::string model = body.value("model", "default");
    auto task = std::make_shared<ProxyTask>();
    auto worker = std::make_shared<ProxyWorker>(task, cfg_, std::move(body), auth, annotations, bump);
    task->worker = std::thread([worker] { worker->run(); });

    Event first = task->queue.pop();
    if (first.kind == Event::Kind::Fail) {
      res.status = first.status;
      res.set_content(first.payload, "application/json");
      task->worker.join();
      return;
    }

    if (!stream) {
      // Assemble the full completion from the event stream.
      std::string content;
      json monitor_result;
      Event e = std::move(first);
      for (;;) {
        if (e.kind == Event::Kind::End) break;
        if (e.kind == Event::Kind::Payload) {
          const json j = json::parse(e.payload, nullptr, false);
          if (!j.is_discarded()) {
            if (j.value("object", "") == "chat.completion.chunk") {
              const auto& choices = j["choices"];
              if (!choices.empty() && choices[0].contains("delta") &&
                  choices[0]["delta"].contains("content")) {
                content += choices[0]["delta"]["content"].get<std::string>();
              }
            } else if (j.value("object", "") == "monitor.result") {
              monitor_result = j;
            } else if (j.contains("error")) {
              monitor_result = j;  // surfaced below
            }
          }
        }
        e = task->queue.pop();
      }
      task->worker.join();
      json out{{"id", "gwcmpl-1"},
               {"object", "chat.completion"},
               {"model", model},
               {"choices", json::array({json{{"index", 0},
                                             {"message", {{"role", "assistant"}, {"content", content}}},
                                             {"finish_reason", "stop"}}})}};
      if (!monitor_result.is_null()) out["monitor"] = monitor_result;
      res.set_content(out.dump(), "application/json");
      return;
    }

    auto pending = std::make_shared<std::optional<Event>>(std::move(first));
    res.set_chunked_content_provider(
        "text/event-stream",
        [task, pending](size_t, httplib::DataSink& sink) {
          Event e = pending->has_value() ? std::move(**pending) : task->queue.pop();
          pending->reset();
          if (e.kind == Event::Kind::End) {
            const std::string done = sse_done();
            sink.write(done.data(), done.size());
            sink.done();
            return true;
          }
          const std::string bytes = sse_event(e.payload);
          if (!sink.write(bytes.data(), bytes.size())) {
            task->client_gone.store(true);
            return false;
          }
          return true;
        },
        [task](bool) {
          task->client_gone.store(true);
          if (task->worker.joinable()) task->worker.join();
        });
  });

  if (cfg_.gateway.listen_port == 0) {
    port_ = server_->bind_to_any_port(cfg_.gateway.listen_address);
    if (port_ <= 0) throw Error(Status::HttpError, "gateway: bind failed");
  } else {
    if (!server_->bind_to_port(cfg_.gateway.listen_address, cfg_.gateway.listen_port)) {
      throw Error(Status::HttpError, "gateway: cannot bind " + cfg_.gateway.listen_address + ":" +
                                         std::to_string(cfg_.gateway.listen_port));
    }
    port_ = cfg_.gateway.listen_port;
  }
  listen_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Gateway::handle_passthrough(const httplib::Request& req, httplib::Response& res, bool stream) {
  auto cli = make_upstream_client(cfg_.upstream);
  httplib::Request up;
  up.method = "POST";
  up.path = cfg_.upstream.style == UpstreamConfig::Style::Chat ? "/v1/chat/completions"
                                                               : "/v1/completions";
  up.set_header("Content-Type", "application/json");
  const std::string auth = req.get_header_value("Authorization");
  if (!auth.empty()) up.set_header("Authorization", auth);
  up.body = req.body;

  if (!stream) {
    const auto result = cli->send(up);
    if (!result) {
      res.status = 502;
      res.set_content(error_body("upstream_unreachable", "upstream request failed").dump(),
                      "application/json");
      return;
    }
    res.status = result->status;
    std::string content_type = result->get_header_value("Content-Type");
    if (content_type.empty()) content_type = "application/json";
    res.set_content(result->body, content_type);
    return;
  }

  // Relay the upstream byte stream unmodified.
  auto chunks = std::make_shared<std::deque<std::string>>();
  auto state = std::make_shared<std::mutex>();
  auto cv = std::make_shared<std::condition_variable>();
  auto done_flag = std::make_shared<bool>(false);
  auto failed_flag = std::make_shared<bool>(false);
  auto client_gone = std::make_shared<std::atomic<bool>>(false);

  auto worker = std::make_shared<std::thread>([=, cfg = cfg_]() mutable {
    httplib::Request up2 = up;
    auto cli2 = make_upstream_client(cfg.upstream);
    up2.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
      if (client_gone->load()) return false;
      {
        std::lock_guard lock(*state);
        chunks->emplace_back(data, len);
      }
      cv->notify_one();
      return true;
    };
    const auto result = cli2->send(up2);
    {
      std::lock_guard lock(*state);
      *done_flag = true;
      if (!result || (result.error() != httplib::Error::Success &&
                      result.error() != httplib::Error::Canceled)) {
        *failed_flag = true;
      }
    }
    cv->notify_one();
  });

  res.set_chunked_content_provider(
      "text/event-stream",
      [=](size_t, httplib::DataSink& sink) {
        std::unique_lock lock(*state);
        cv->wait(lock, [&] { return !chunks->empty() || *done_flag; });
        if (chunks->empty()) {
          sink.done();
          return true;
        }
        const std::string chunk = std::move(chunks->front());
        chunks->pop_front();
        lock.unlock();
        if (!sink.write(chunk.data(), chunk.size())) {
          client_gone->store(true);
          return false;
        }
        return true;
      },
      [=](bool) {
        client_gone->store(true);
        if (worker->joinable()) worker->join();
      });
}

void Gateway::stop() {
  if (listen_thread_.joinable()) {
    server_->stop();
    listen_thread_.join();
  }
}

}  // namespace rpdmon::gateway
