#include "util/subprocess.h"

#include <cerrno>
#include <csignal>
#include <algorithm>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace loopinv::detail {

Subprocess::Subprocess(const std::string& path, const std::vector<std::string>& args) {
  // A dead child must surface as a failed write, not as SIGPIPE.
  static const bool sigpipe_ignored = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) throw std::runtime_error("pipe: " + std::string(std::strerror(errno)));
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw std::runtime_error("pipe: " + std::string(std::strerror(errno)));
  }
  // Report exec failure through a close-on-exec pipe.
  int status_pipe[2];
  if (pipe2(status_pipe, O_CLOEXEC) != 0) throw std::runtime_error("pipe2 failed");

  std::vector<std::string> argv_store;
  argv_store.push_back(path);
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    dup2(from_child[1], STDERR_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    close(status_pipe[0]);
    execvp(argv[0], argv.data());
    int err = errno;
    ssize_t ignored = ::write(status_pipe[1], &err, sizeof err);
    (void)ignored;
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  close(status_pipe[1]);
  int err = 0;
  ssize_t n = ::read(status_pipe[0], &err, sizeof err);
  close(status_pipe[0]);
  if (n == sizeof err) {
    close(to_child[1]);
    close(from_child[0]);
    waitpid(pid, nullptr, 0);
    throw std::runtime_error("cannot execute '" + path + "': " + std::strerror(err));
  }
  pid_ = pid;
  in_fd_ = to_child[1];
  out_fd_ = from_child[0];
  fcntl(out_fd_, F_SETFL, fcntl(out_fd_, F_GETFL) | O_NONBLOCK);
}

Subprocess::~Subprocess() { kill(); }

bool Subprocess::write(const std::string& data) {
  if (pid_ <= 0) return false;
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> Subprocess::read_until(const std::string& marker,
                                                  std::chrono::steady_clock::time_point deadline) {
  if (pid_ <= 0) return std::nullopt;
  for (;;) {
    // Look for the marker as a complete line.
    std::size_t line_start = 0;
    while (line_start < buffer_.size()) {
      std::size_t nl = buffer_.find('\n', line_start);
      if (nl == std::string::npos) break;
      std::string_view line(buffer_.data() + line_start, nl - line_start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line == marker) {
        std::string out = buffer_.substr(0, line_start);
        buffer_.erase(0, nl + 1);
        return out;
      }
      line_start = nl + 1;
    }
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::nullopt;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd pfd{out_fd_, POLLIN, 0};
    int r = poll(&pfd, 1, static_cast<int>(std::max<long long>(1, ms)));
    if (r < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (r == 0) continue;
    char chunk[4096];
    ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    } else if (n == 0) {
      return std::nullopt;  // EOF: the child exited
    } else if (errno != EAGAIN && errno != EINTR) {
      return std::nullopt;
    }
  }
}

void Subprocess::kill() {
  if (pid_ <= 0) return;
  if (in_fd_ >= 0) close(in_fd_);
  if (out_fd_ >= 0) close(out_fd_);
  in_fd_ = out_fd_ = -1;
  ::kill(pid_, SIGKILL);
  waitpid(pid_, nullptr, 0);
  pid_ = -1;
  buffer_.clear();
}

}  // namespace loopinv::detail
