#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace loopinv::detail {

/// A child process with piped stdin and stdout (stderr is merged into stdout).
class Subprocess {
 public:
  Subprocess(const std::string& path, const std::vector<std::string>& args);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  /// False when the write failed (child gone).
  bool write(const std::string& data);

  /// Reads until a line equal to `marker` arrives. Returns everything before
  /// that line, or nullopt on EOF or when `deadline` passes.
  std::optional<std::string> read_until(const std::string& marker,
                                        std::chrono::steady_clock::time_point deadline);

  bool alive() const { return pid_ > 0; }
  void kill();

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

}  // namespace loopinv::detail
