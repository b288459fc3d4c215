#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace loopinv::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines; `#` starts a comment. Unknown keys are errors.
class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile parse(const std::string& text, const std::string& origin);

  std::optional<std::string> get(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;
  const std::string& origin() const { return origin_; }

  static const std::map<std::string, std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace loopinv::cli
