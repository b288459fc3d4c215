#include "config_file.h"

#include <fstream>
#include <sstream>

namespace loopinv::cli {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::map<std::string, std::string>& ConfigFile::known_keys() {
  static const std::map<std::string, std::string> keys{
      {"solver", "solver executable"},
      {"solver_timeout", "per-query solver timeout, seconds"},
      {"solver_sessions", "solver processes kept in the pool"},
      {"base_url", "chat-completion endpoint base URL"},
      {"model", "provider model name"},
      {"api_key", "provider API key"},
      {"temperature", "sampling temperature passed to the provider"},
      {"token_budget", "token budget per run"},
      {"time_budget", "wall-clock budget per run, seconds"},
      {"max_rounds", "feedback round limit"},
      {"seed", "rng seed"},
      {"jobs", "parallel runs in bench"},
      {"prompt_dir", "directory of prompt template overrides"},
  };
  return keys;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) throw ConfigError(origin + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> ConfigFile::get_double(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": '" + key + "' is not a number: " + *v);
  }
}

std::optional<long long> ConfigFile::get_int(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    long long i = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": '" + key + "' is not an integer: " + *v);
  }
}

}  // namespace loopinv::cli
