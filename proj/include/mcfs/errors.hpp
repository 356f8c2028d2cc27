// Error hierarchy shared across the library. Contract violations (API misuse)
// and data-level failures both derive from Error so callers can catch one base.
#pragma once

#include <stdexcept>
#include <string>

namespace mcfs {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed DIMACS or config input. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Precondition violated by the caller.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error("contract violation: " + what) {}
};

// A path or search branch reached a satisfying assignment on an instance
// that was supposed to be unsatisfiable.
class SatisfiableInstanceError : public Error {
 public:
  explicit SatisfiableInstanceError(const std::string& what)
      : Error("satisfiable instance: " + what) {}
};

// Depth-limited search left open subproblems and had no subsolver to finish.
class IncompleteSearchError : public Error {
 public:
  explicit IncompleteSearchError(const std::string& what)
      : Error("incomplete search: " + what) {}
};

// External subsolver process failures, one variant per failure mode.
class SubsolverError : public Error {
 public:
  enum class Kind { timeout, exit_code, parse };

  SubsolverError(Kind kind, const std::string& what, std::string raw_output)
      : Error(what), kind_(kind), raw_output_(std::move(raw_output)) {}
  Kind kind() const { return kind_; }
  const std::string& raw_output() const { return raw_output_; }

 private:
  Kind kind_;
  std::string raw_output_;
};

// Model bridge protocol failures (malformed response, timeout, bad sums).
class BridgeError : public Error {
 public:
  explicit BridgeError(const std::string& what)
      : Error("bridge error: " + what) {}
};

// Inconsistent training data or stored model contents.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data error: " + what) {}
};

}  // namespace mcfs
