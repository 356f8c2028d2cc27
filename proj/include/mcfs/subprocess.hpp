// Minimal child-process helpers: one-shot run with timeout and captured
// output, and a long-lived line-oriented pipe pair for the model bridge.
#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace mcfs {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
  std::string err;
};

// Runs argv[0] with the given arguments, waits up to `timeout`, and captures
// stdout/stderr. On timeout the child is killed and timed_out is set.
ProcessResult run_process(const std::vector<std::string>& argv,
                          std::chrono::milliseconds timeout);

// Long-lived child with line-buffered stdin/stdout, used for request/response
// protocols. Not copyable; the destructor closes the pipes and reaps the
// child, killing it if it does not exit promptly.
class LineProcess {
 public:
  explicit LineProcess(const std::vector<std::string>& argv);
  ~LineProcess();
  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  bool alive() const;
  void send_line(const std::string& line);
  // Reads one newline-terminated line; returns false on timeout or EOF.
  bool read_line(std::string& line, std::chrono::milliseconds timeout);

 private:
  int pid_ = -1;
  int in_fd_ = -1;   // write end towards the child's stdin
  int out_fd_ = -1;  // read end of the child's stdout
  std::string buffer_;
};

}  // namespace mcfs
