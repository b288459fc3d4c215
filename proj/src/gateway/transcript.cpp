#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"
#include "loopinv/gateway.h"

namespace loopinv {

using json = nlohmann::ordered_json;

const char* role_name(Role r) { return r == Role::Synthesizer ? "synthesizer" : "formalizer"; }

std::optional<Role> parse_role(const std::string& s) {
  if (s == "synthesizer") return Role::Synthesizer;
  if (s == "formalizer") return Role::Formalizer;
  return std::nullopt;
}

std::string request_digest(Role role, const std::string& prompt, int occurrence) {
  std::string data = role_name(role);
  data.push_back('\0');
  data += prompt;
  if (occurrence > 1) {
    data.push_back('\0');
    data += std::to_string(occurrence);
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw GatewayError("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return out.str();
}

std::string transcript_header_line() {
  json h;
  h["format"] = "loopinv-transcript";
  h["version"] = Transcript::kVersion;
  return h.dump();
}

std::string transcript_entry_line(const TranscriptEntry& e) {
  json j;
  j["digest"] = e.digest;
  j["role"] = role_name(e.role);
  j["prompt"] = e.prompt;
  j["response"] = e.response;
  j["tokens_in"] = e.tokens_in;
  j["tokens_out"] = e.tokens_out;
  j["latency_ms"] = e.latency_ms;
  return j.dump();
}

std::string Transcript::serialize() const {
  std::string out = transcript_header_line() + "\n";
  for (const auto& e : entries) out += transcript_entry_line(e) + "\n";
  return out;
}

Transcript Transcript::parse(const std::string& text, const std::string& origin) {
  Transcript t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  std::set<std::string> digests;
  auto fail = [&](const std::string& msg) { throw TranscriptError(origin + ":" + std::to_string(lineno) + ": " + msg); };

  if (!text.empty() && text.back() != '\n') {
    lineno = static_cast<int>(std::count(text.begin(), text.end(), '\n')) + 1;
    fail("truncated record (no trailing newline)");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      fail(std::string("malformed record: ") + ex.what());
    }
    if (!j.is_object()) fail("record is not an object");
    if (!header) {
      if (j.value("format", "") != "loopinv-transcript") fail("missing transcript header");
      if (!j.contains("version") || !j["version"].is_number_integer()) fail("header has no version");
      if (j["version"].get<int>() != kVersion) {
        fail("unsupported transcript version " + j["version"].dump() + " (expected " + std::to_string(kVersion) + ")");
      }
      header = true;
      continue;
    }
    TranscriptEntry e;
    try {
      e.digest = j.at("digest").get<std::string>();
      auto role = parse_role(j.at("role").get<std::string>());
      if (!role) fail("unknown role " + j.at("role").dump());
      e.role = *role;
      e.prompt = j.value("prompt", "");
      e.response = j.at("response").get<std::string>();
      e.tokens_in = j.value("tokens_in", std::int64_t{0});
      e.tokens_out = j.value("tokens_out", std::int64_t{0});
      e.latency_ms = j.value("latency_ms", std::int64_t{0});
    } catch (const json::exception& ex) {
      fail(std::string("bad record: ") + ex.what());
    }
    if (!digests.insert(e.digest).second) fail("duplicate digest " + e.digest);
    t.entries.push_back(std::move(e));
  }
  if (!header) fail("empty transcript");
  return t;
}

void Transcript::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TranscriptError("cannot write " + path);
  out << serialize();
}

Transcript load_transcript(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TranscriptError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Transcript::parse(ss.str(), path);
}

}  // namespace loopinv
