#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopinv/prompt.h"

namespace loopinv {

enum class Role { Synthesizer, Formalizer };

const char* role_name(Role r);
std::optional<Role> parse_role(const std::string& s);

struct ChatMessage {
  std::string speaker;  // "user" or "assistant"
  std::string text;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct TokenCount {
  std::int64_t input = 0;
  std::int64_t output = 0;

  std::int64_t total() const { return input + output; }
  TokenCount& operator+=(const TokenCount& o) {
    input += o.input;
    output += o.output;
    return *this;
  }
  friend bool operator==(const TokenCount&, const TokenCount&) = default;
};

class ChatSession {
 public:
  explicit ChatSession(Role role) : role_(role) {}
  Role role() const { return role_; }
  const std::vector<ChatMessage>& messages() const { return messages_; }
  const TokenCount& token_count() const { return tokens_; }

 private:
  friend class Gateway;
  Role role_;
  std::vector<ChatMessage> messages_;
  TokenCount tokens_;
};

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A replayed request whose digest is not in the transcript.
class ReplayMiss : public GatewayError {
 public:
  explicit ReplayMiss(std::string digest)
      : GatewayError("replay miss: no transcript entry for digest " + digest), digest_(std::move(digest)) {}
  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

class TranscriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TranscriptEntry {
  std::string digest;
  Role role = Role::Synthesizer;
  std::string prompt;
  std::string response;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t latency_ms = 0;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

/// Line-delimited JSON: a header line, then one record per exchange.
struct Transcript {
  static constexpr int kVersion = 1;
  std::vector<TranscriptEntry> entries;

  std::string serialize() const;
  static Transcript parse(const std::string& text, const std::string& origin = "<transcript>");
  void save(const std::string& path) const;
  friend bool operator==(const Transcript&, const Transcript&) = default;
};

std::string transcript_header_line();
std::string transcript_entry_line(const TranscriptEntry& e);
Transcript load_transcript(const std::string& path);

/// sha256 over the role name, a NUL, and the prompt, in hex. The n-th repeat
/// (n >= 2) of the same request within a run also hashes a NUL and n.
std::string request_digest(Role role, const std::string& prompt, int occurrence = 1);

struct Completion {
  std::string text;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  std::int64_t latency_ms = 0;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// `messages` ends with the new user message.
  virtual Completion complete(Role role, const std::vector<ChatMessage>& messages, const std::string& digest) = 0;
  /// True when latencies are reported rather than measured, so run time can
  /// be accounted from them.
  virtual bool virtual_time() const { return false; }
  virtual std::string name() const = 0;
};

struct LiveConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key;
  std::optional<double> temperature;
  double timeout_seconds = 120.0;
  int max_tries = 3;
  double backoff_seconds = 1.0;  // doubled per retry, capped at 8 s
};

/// OpenAI-style POST {base_url}/chat/completions.
std::unique_ptr<ChatBackend> make_live_backend(LiveConfig cfg);
std::unique_ptr<ChatBackend> make_replay_backend(Transcript t);
/// Answers from fixed per-role response lists, in order. Token counts are
/// estimated as ceil(chars / 4).
std::unique_ptr<ChatBackend> make_scripted_backend(std::map<Role, std::vector<std::string>> responses);
/// Script file: JSON object {"synthesizer": [...], "formalizer": [...]}.
std::map<Role, std::vector<std::string>> load_script(const std::string& path);

/// Owns a backend, assigns digests, meters tokens, and optionally appends
/// every exchange to a transcript file.
class Gateway {
 public:
  explicit Gateway(std::unique_ptr<ChatBackend> backend);
  ~Gateway();

  /// Appends to `path`, writing the header first when the file is new or empty.
  void record_to(const std::string& path);

  std::string send(ChatSession& session, const PromptBundle& prompt);

  const TokenCount& totals() const { return totals_; }
  bool virtual_time() const { return backend_->virtual_time(); }
  double virtual_seconds() const { return static_cast<double>(virtual_ms_) / 1000.0; }
  const Transcript& recorded() const { return recorded_; }
  std::string backend_name() const { return backend_->name(); }

 private:
  std::unique_ptr<ChatBackend> backend_;
  std::map<std::string, int> seen_;
  TokenCount totals_;
  std::int64_t virtual_ms_ = 0;
  Transcript recorded_;
  std::unique_ptr<std::ofstream> sink_;
};

}  // namespace loopinv
