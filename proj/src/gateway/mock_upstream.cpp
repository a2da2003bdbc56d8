// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "mock_upstream.hpp"

#include <memory>

#include "httplib.h"
#include "json.hpp"

#include "sse.hpp"

namespace rpdmon::gateway {

using nlohmann::json;
using trace::TokenPhase;
using trace::Trace;
using trace::TraceRecord;

namespace {

const std::vector<std::string>& canned_answer() {
  static const std::vector<std::string> kAnswer = {" The", " answer", " is", " 42", "."};
  return kAnswer;
}

json logprobs_for(const TraceRecord& rec, bool chat, bool corrupt) {
  std::vector<std::pair<std::string, double>> lps;
  if (rec.top_logprobs) {
    lps = *rec.top_logprobs;
  } else {
    lps = trace::synthesize_top_logprobs(rec.entropy_nats.value_or(0.0), rec.token_text);
  }
  if (corrupt) {
    for (auto& [_, lp] : lps) lp = 0.5;
  }
  if (chat) {
    json top = json::array();
    for (const auto& [text, lp] : lps) top.push_back(json{{"token", text}, {"logprob", lp}});
    json entry{{"token", rec.token_text}, {"logprob", lps.front().second}, {"top_logprobs", top}};
    return json{{"content", json::array({std::move(entry)})}};
  }
  json top = json::object();
  for (const auto& [text, lp] : lps) top[text] = lp;
  return json{{"tokens", json::array({rec.token_text})},
              {"token_logprobs", json::array({lps.front().second})},
              {"top_logprobs", json::array({std::move(top)})}};
}

json chunk_for(bool chat, const std::string& model, const std::string& text, const json& logprobs,
               const json& finish) {
  if (chat) {
    json choice{{"index", 0}, {"delta", json{{"content", text}}}, {"finish_reason", finish}};
    if (!logprobs.is_null()) choice["logprobs"] = logprobs;
    return json{{"id", "mockcmpl-1"},
                {"object", "chat.completion.chunk"},
                {"model", model},
                {"choices", json::array({std::move(choice)})}};
  }
  json choice{{"index", 0}, {"text", text}, {"finish_reason", finish}};
  if (!logprobs.is_null()) choice["logprobs"] = logprobs;
  return json{{"id", "mockcmpl-1"},
              {"object", "text_completion"},
              {"model", model},
              {"choices", json::array({std::move(choice)})}};
}

}  // namespace

MockUpstream::MockUpstream() : server_(std::make_unique<httplib::Server>()) {}

MockUpstream::~MockUpstream() { stop(); }

void MockUpstream::add_trace(const std::string& model, Trace t) {
  std::lock_guard lock(mutex_);
  traces_[model] = std::move(t);
}

void MockUpstream::add_trace_file(const std::string& model, const std::string& path) {
  add_trace(model, trace::read_file(path));
}

std::vector<MockRequest> MockUpstream::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

size_t MockUpstream::continuation_requests() const {
  std::lock_guard lock(mutex_);
  size_t n = 0;
  for (const auto& r : log_) n += r.is_continuation ? 1 : 0;
  return n;
}

size_t MockUpstream::aborted_streams() const {
  std::lock_guard lock(mutex_);
  size_t n = 0;
  for (const auto& r : log_) n += r.aborted ? 1 : 0;
  return n;
}

std::string MockUpstream::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void MockUpstream::start(int port) {
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });
  server_->Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
    json models = json::array();
    {
      std::lock_guard lock(mutex_);
      for (const auto& [name, _] : traces_) {
        models.push_back(json{{"id", name.empty() ? "default" : name}, {"object", "model"}});
      }
    }
    res.set_content(json{{"object", "list"}, {"data", std::move(models)}}.dump(),
                    "application/json");
  });

  const auto completion_handler = [this](bool chat) {
    return [this, chat](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) {
        res.status = 400;
        res.set_content(json{{"error", {{"message", "malformed JSON"}}}}.dump(), "application/json");
        return;
      }
      if (!body.value("stream", false)) {
        res.status = 400;
        res.set_content(json{{"error", {{"message", "mock upstream only serves stream=true"}}}}.dump(),
                        "application/json");
        return;
      }

      const std::string model = body.value("model", "");
      // logprobs is a boolean on chat endpoints, a top-k count on completion
      // endpoints.
      bool logprobs_requested = body.contains("top_logprobs");
      if (body.contains("logprobs")) {
        const json& lp = body["logprobs"];
        if (lp.is_boolean()) logprobs_requested |= lp.get<bool>();
        if (lp.is_number()) logprobs_requested |= lp.get<int64_t>() > 0;
      }
      if (omit_logprobs_) logprobs_requested = false;
      uint64_t max_tokens = 0;
      if (body.contains("max_tokens") && body["max_tokens"].is_number()) {
        max_tokens = body["max_tokens"].get<uint64_t>();
      }

      std::string prompt_text;
      bool is_continuation = false;
      if (chat) {
        is_continuation = body.value("continue_final_message", false);
        if (body.contains("messages") && body["messages"].is_array() &&
            !body["messages"].empty()) {
          const json& last = body["messages"].back();
          if (last.value("role", "") == "assistant") is_continuation = true;
          prompt_text = last.value("content", "");
        }
      } else {
        prompt_text = body.value("prompt", "");
        is_continuation = prompt_text.find("</think>") != std::string::npos;
      }

      Trace t;
      {
        std::lock_guard lock(mutex_);
        auto it = traces_.find(model);
        if (it == traces_.end()) it = traces_.find("");
        if (it == traces_.end()) {
          res.status = 404;
          res.set_content(json{{"error", {{"message", "no trace for model '" + model + "'"}}}}.dump(),
                          "application/json");
          return;
        }
        t = it->second;
      }

      size_t req_index;
      {
        std::lock_guard lock(mutex_);
        MockRequest r;
        r.endpoint = chat ? "/v1/chat/completions" : "/v1/completions";
        r.model = model;
        r.is_continuation = is_continuation;
        r.logprobs_requested = logprobs_requested;
        r.max_tokens = max_tokens;
        r.prompt_tail = prompt_text.size() > 64 ? prompt_text.substr(prompt_text.size() - 64)
                                                : prompt_text;
        r.authorization = req.get_header_value("Authorization");
        log_.push_back(std::move(r));
        req_index = log_.size() - 1;
      }

      // Pre-render the chunk stream for this request.
      auto chunks = std::make_shared<std::vector<std::string>>();
      if (!is_continuation) {
        for (const auto& rec : t.records) {
          const json lp = logprobs_requested ? logprobs_for(rec, chat, corrupt_logprobs_) : json(nullptr);
          chunks->push_back(sse_event(chunk_for(chat, model, rec.token_text, lp, nullptr).dump()));
        }
      } else {
        bool any = false;
        for (const auto& rec : t.records) {
          if (rec.phase != TokenPhase::Answer) continue;
          any = true;
          const json lp = logprobs_requested ? logprobs_for(rec, chat, corrupt_logprobs_) : json(nullptr);
          chunks->push_back(sse_event(chunk_for(chat, model, rec.token_text, lp, nullptr).dump()));
        }
        if (!any) {
          for (const auto& text : canned_answer()) {
            chunks->push_back(sse_event(chunk_for(chat, model, text, nullptr, nullptr).dump()));
          }
        }
      }
      if (max_tokens > 0 && chunks->size() > max_tokens) {
        chunks->resize(max_tokens);
      }
      chunks->push_back(sse_event(chunk_for(chat, model, "", nullptr, json("stop")).dump()));
      chunks->push_back(sse_done());

      // httplib reports a byte offset; the cursor tracks whole chunks. The
      // releaser is the authoritative abort detector: the write loop can stop
      // on a dead socket without the provider ever seeing a failed write.
      auto cursor = std::make_shared<size_t>(0);
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, chunks, cursor, req_index](size_t /*offset*/, httplib::DataSink& sink) {
            if (*cursor >= chunks->size()) {
              std::lock_guard lock(mutex_);
              log_[req_index].completed = true;
              sink.done();
              return true;
            }
            const std::string& chunk = (*chunks)[(*cursor)++];
            if (!sink.write(chunk.data(), chunk.size())) {
              return false;
            }
            {
              std::lock_guard lock(mutex_);
              log_[req_index].chunks_sent += 1;
            }
            return true;
          },
          [this, req_index](bool /*success*/) {
            std::lock_guard lock(mutex_);
            if (!log_[req_index].completed) log_[req_index].aborted = true;
          });
    };
  };

  server_->Post("/v1/chat/completions", completion_handler(true));
  server_->Post("/v1/completions", completion_handler(false));

  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error(Status::HttpError, "mock upstream: bind failed");
  } else {
    if (!server_->bind_to_port("127.0.0.1", port)) {
      throw Error(Status::HttpError, "mock upstream: cannot bind port " + std::to_string(port));
    }
    port_ = port;
  }
  listen_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockUpstream::stop() {
  if (listen_thread_.joinable()) {
    server_->stop();
    listen_thread_.join();
  }
}

}  // namespace rpdmon::gateway
