#include "mcfs/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include "mcfs/errors.hpp"

namespace mcfs {

namespace {

[[noreturn]] void exec_child(const std::vector<std::string>& argv) {
  std::vector<char*> args;
  args.reserve(argv.size() + 1);
  for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  ::execvp(args[0], args.data());
  ::_exit(127);
}

void make_cloexec(int fd) { ::fcntl(fd, F_SETFD, FD_CLOEXEC); }

// Drains available bytes; returns false once the fd reaches EOF.
bool drain(int fd, std::string& sink) {
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      sink.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) return false;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
    if (errno == EINTR) continue;
    return false;
  }
}

int wait_exit_code(int pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) throw ContractError("run_process: empty argv");

  int out_pipe[2], err_pipe[2];
  if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    throw Error("pipe creation failed");
  }

  int pid = ::fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    exec_child(argv);
  }

  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  ProcessResult result;
  auto deadline = std::chrono::steady_clock::now() + timeout;
  bool out_open = true, err_open = true;
  while (out_open || err_open) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      break;
    }
    struct pollfd fds[2];
    nfds_t nfds = 0;
    if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
    if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
    int rc = ::poll(fds, nfds, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) continue;  // re-check the deadline
    for (nfds_t i = 0; i < nfds; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP))) continue;
      if (fds[i].fd == out_pipe[0]) {
        out_open = drain(out_pipe[0], result.out);
      } else {
        err_open = drain(err_pipe[0], result.err);
      }
    }
  }

  if (result.timed_out) {
    ::kill(pid, SIGKILL);
  }
  result.exit_code = wait_exit_code(pid);
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);
  return result;
}

LineProcess::LineProcess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ContractError("LineProcess: empty argv");
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw Error("pipe creation failed");
  }
  int pid = ::fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    exec_child(argv);
  }
  pid_ = pid;
  in_fd_ = to_child[1];
  out_fd_ = from_child[0];
  ::close(to_child[0]);
  ::close(from_child[1]);
  make_cloexec(in_fd_);
  make_cloexec(out_fd_);
  ::fcntl(out_fd_, F_SETFL, O_NONBLOCK);
}

LineProcess::~LineProcess() {
  if (in_fd_ >= 0) ::close(in_fd_);
  if (out_fd_ >= 0) ::close(out_fd_);
  if (pid_ > 0) {
    // Give the child a moment to exit after stdin closes, then force it.
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      int rc = ::waitpid(pid_, &status, WNOHANG);
      if (rc == pid_ || rc < 0) return;
      ::usleep(2000);
    }
    ::kill(pid_, SIGKILL);
    wait_exit_code(pid_);
  }
}

bool LineProcess::alive() const {
  if (pid_ <= 0) return false;
  return ::kill(pid_, 0) == 0;
}

void LineProcess::send_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BridgeError("write to child failed: " +
                        std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

bool LineProcess::read_line(std::string& line,
                            std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return false;
    struct pollfd fd = {out_fd_, POLLIN, 0};
    int rc = ::poll(&fd, 1, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (rc == 0) return false;
    if (!drain(out_fd_, buffer_) && buffer_.find('\n') == std::string::npos) {
      return false;  // EOF without a complete line
    }
  }
}

}  // namespace mcfs
