#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <vector>

#include "seesaw/envs/environment.hpp"
#include "seesaw/envs/line_protocol.hpp"

namespace seesaw::envs {

/// Owns one child process speaking the line protocol over its stdin/stdout.
class ChildProcess {
 public:
  ChildProcess(const std::string& path, const std::vector<std::string>& args) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
      throw Error(std::string("socketpair: ") + std::strerror(errno));
    std::vector<std::string> argv_store{path};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw Error(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execv(path.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    if (fd_ >= 0) {
      static constexpr char quit[] = "quit\n";
      (void)::send(fd_, quit, sizeof quit - 1, MSG_NOSIGNAL);
      ::close(fd_);
    }
    if (pid_ > 0) {
      // Give a well-behaved child a moment to exit on its own.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        ::usleep(2000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  /// Sends one request line and returns the reply line (without '\n').
  std::string request(const std::string& line, std::chrono::milliseconds timeout) {
    const std::string msg = line + '\n';
    std::size_t sent = 0;
    while (sent < msg.size()) {
      const ssize_t n = ::send(fd_, msg.data() + sent, msg.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EnvFailure("environment process closed its input");
      }
      sent += static_cast<std::size_t>(n);
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string out = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return out;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw Timeout("no reply to '" + line.substr(0, 20) + "' within " + std::to_string(timeout.count()) + " ms");
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r == 0) continue;
      char chunk[65536];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw EnvFailure("environment process exited");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
};

/// Proxies reset/step to an external environment executable. If the child
/// dies, the current episode fails with EnvFailure and the next reset starts
/// a new child.
class ExternalEnv final : public Environment {
 public:
  explicit ExternalEnv(std::string path, std::vector<std::string> args = {},
                       std::chrono::milliseconds timeout = std::chrono::seconds(10))
      : path_(std::move(path)), args_(std::move(args)), timeout_(timeout) {
    start();
  }

  const EnvSpec& spec() const override { return spec_; }

  Frame reset(std::uint64_t seed) override {
    if (!child_) start();
    done_ = true;
    try {
      Frame f = protocol::parse_frame(child_->request("reset " + std::to_string(seed), timeout_), spec_.height,
                                      spec_.width);
      done_ = false;
      return f;
    } catch (const EnvFailure&) {
      child_.reset();
      throw;
    } catch (const Timeout&) {
      child_.reset();
      throw;
    }
  }

  StepResult step(int action) override {
    if (done_) throw EpisodeOver("step after episode end; call reset first");
    if (action < 0 || action >= spec_.actions) throw BadAction("action " + std::to_string(action) + " out of range");
    try {
      StepResult r = protocol::parse_step(child_->request("step " + std::to_string(action), timeout_), spec_.height,
                                          spec_.width);
      done_ = r.done;
      return r;
    } catch (const EnvFailure&) {
      child_.reset();
      done_ = true;
      throw;
    } catch (const Timeout&) {
      child_.reset();
      done_ = true;
      throw;
    }
  }

 private:
  void start() {
    child_ = std::make_unique<ChildProcess>(path_, args_);
    try {
      EnvSpec s = protocol::parse_spec(child_->request("hello", timeout_));
      if (started_ && !(s == spec_)) throw ProtocolError("environment changed its spec after restart");
      spec_ = std::move(s);
      started_ = true;
    } catch (...) {
      child_.reset();
      throw;
    }
  }

  std::string path_;
  std::vector<std::string> args_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<ChildProcess> child_;
  EnvSpec spec_;
  bool started_ = false;
  bool done_ = true;
};

}  // namespace seesaw::envs
