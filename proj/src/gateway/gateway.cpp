#include "loopinv/gateway.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace loopinv {

using json = nlohmann::ordered_json;

namespace {

std::int64_t estimate_tokens(std::size_t chars) { return static_cast<std::int64_t>((chars + 3) / 4); }

class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(Transcript t) {
    for (auto& e : t.entries) by_digest_.emplace(e.digest, std::move(e));
  }
  Completion complete(Role, const std::vector<ChatMessage>&, const std::string& digest) override {
    auto it = by_digest_.find(digest);
    if (it == by_digest_.end()) throw ReplayMiss(digest);
    return {it->second.response, it->second.tokens_in, it->second.tokens_out, it->second.latency_ms};
  }
  bool virtual_time() const override { return true; }
  std::string name() const override { return "replay"; }

 private:
  std::map<std::string, TranscriptEntry> by_digest_;
};

class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::map<Role, std::vector<std::string>> responses) : responses_(std::move(responses)) {}
  Completion complete(Role role, const std::vector<ChatMessage>& messages, const std::string&) override {
    auto& queue = responses_[role];
    std::size_t& next = next_[role];
    if (next >= queue.size()) {
      throw GatewayError(std::string("script exhausted for ") + role_name(role) + " after " +
                         std::to_string(queue.size()) + " responses");
    }
    Completion c;
    c.text = queue[next++];
    std::size_t chars = 0;
    for (const auto& m : messages) chars += m.text.size();
    c.tokens_in = estimate_tokens(chars);
    c.tokens_out = estimate_tokens(c.text.size());
    c.latency_ms = 0;
    return c;
  }
  bool virtual_time() const override { return true; }
  std::string name() const override { return "scripted"; }

 private:
  std::map<Role, std::vector<std::string>> responses_;
  std::map<Role, std::size_t> next_;
};

class LiveBackend : public ChatBackend {
 public:
  explicit LiveBackend(LiveConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw GatewayError("live backend needs a base URL");
    if (cfg_.model.empty()) throw GatewayError("live backend needs a model name");
    std::string url = cfg_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = url;
    } else {
      host_ = url.substr(0, path_start);
      prefix_ = url.substr(path_start);
    }
  }

  Completion complete(Role, const std::vector<ChatMessage>& messages, const std::string&) override {
    json body;
    body["model"] = cfg_.model;
    body["messages"] = json::array();
    for (const auto& m : messages) body["messages"].push_back({{"role", m.speaker}, {"content", m.text}});
    if (cfg_.temperature) body["temperature"] = *cfg_.temperature;

    httplib::Client client(host_);
    auto secs = std::chrono::duration<double>(cfg_.timeout_seconds);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
    client.set_connection_timeout(std::chrono::seconds(10));
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    std::string last_error;
    double backoff = cfg_.backoff_seconds;
    for (int attempt = 1; attempt <= cfg_.max_tries; ++attempt) {
      auto start = std::chrono::steady_clock::now();
      auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
      bool retriable = true;
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status == 200) {
        return decode(res->body, ms.count());
      } else {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        retriable = res->status == 408 || res->status == 429 || res->status >= 500;
      }
      if (!retriable || attempt == cfg_.max_tries) break;
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff = std::min(backoff * 2, 8.0);
    }
    throw GatewayError("provider request failed: " + last_error);
  }
  std::string name() const override { return "live"; }

 private:
  static Completion decode(const std::string& text, std::int64_t ms) {
    Completion c;
    try {
      json j = json::parse(text);
      c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("usage")) {
        c.tokens_in = j["usage"].value("prompt_tokens", std::int64_t{0});
        c.tokens_out = j["usage"].value("completion_tokens", std::int64_t{0});
      }
    } catch (const json::exception& ex) {
      throw GatewayError(std::string("unexpected provider response: ") + ex.what());
    }
    c.latency_ms = ms;
    return c;
  }

  LiveConfig cfg_;
  std::string host_;
  std::string prefix_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_live_backend(LiveConfig cfg) { return std::make_unique<LiveBackend>(std::move(cfg)); }
std::unique_ptr<ChatBackend> make_replay_backend(Transcript t) { return std::make_unique<ReplayBackend>(std::move(t)); }
std::unique_ptr<ChatBackend> make_scripted_backend(std::map<Role, std::vector<std::string>> responses) {
  return std::make_unique<ScriptedBackend>(std::move(responses));
}

std::map<Role, std::vector<std::string>> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GatewayError("cannot read script " + path);
  std::map<Role, std::vector<std::string>> out;
  try {
    json j = json::parse(in);
    for (Role r : {Role::Synthesizer, Role::Formalizer}) {
      if (j.contains(role_name(r))) out[r] = j[role_name(r)].get<std::vector<std::string>>();
    }
  } catch (const json::exception& ex) {
    throw GatewayError("bad script " + path + ": " + ex.what());
  }
  return out;
}

Gateway::Gateway(std::unique_ptr<ChatBackend> backend) : backend_(std::move(backend)) {}
Gateway::~Gateway() = default;

void Gateway::record_to(const std::string& path) {
  bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  sink_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app);
  if (!*sink_) throw TranscriptError("cannot open " + path + " for recording");
  if (fresh) *sink_ << transcript_header_line() << "\n" << std::flush;
}

std::string Gateway::send(ChatSession& session, const PromptBundle& prompt) {
  if (prompt.text.find_first_not_of(" \t\r\n") == std::string::npos) throw GatewayError("refusing to send an empty prompt");
  const std::string base = request_digest(session.role(), prompt.text);
  const int n = ++seen_[base];
  const std::string digest = n == 1 ? base : request_digest(session.role(), prompt.text, n);

  std::vector<ChatMessage> messages = session.messages_;
  messages.push_back({"user", prompt.text});
  Completion c = backend_->complete(session.role(), messages, digest);

  session.messages_ = std::move(messages);
  session.messages_.push_back({"assistant", c.text});
  TokenCount used{c.tokens_in, c.tokens_out};
  session.tokens_ += used;
  totals_ += used;
  virtual_ms_ += c.latency_ms;

  TranscriptEntry e{digest, session.role(), prompt.text, c.text, c.tokens_in, c.tokens_out, c.latency_ms};
  if (sink_) *sink_ << transcript_entry_line(e) << "\n" << std::flush;
  recorded_.entries.push_back(std::move(e));
  return c.text;
}

}  // namespace loopinv
