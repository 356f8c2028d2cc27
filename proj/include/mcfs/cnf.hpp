// CNF formula representation and DIMACS input/output.
//
// Literals use the DIMACS signed-integer encoding. Clauses are literal sets:
// construction sorts, removes duplicate literals, and rejects tautologies
// (parse drops tautological clauses instead of rejecting the file). Formulas
// keep clause order; duplicate clauses are permitted and preserved.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mcfs/errors.hpp"

namespace mcfs {

// One literal. enc > 0 is the positive literal of variable enc, enc < 0 the
// negation of variable -enc. enc == 0 is reserved and invalid.
struct Lit {
  std::int32_t enc = 0;

  Lit() = default;
  explicit Lit(std::int32_t e) : enc(e) {}
  static Lit make(std::int32_t var, bool positive) {
    return Lit(positive ? var : -var);
  }

  std::int32_t var() const { return enc >= 0 ? enc : -enc; }
  bool positive() const { return enc > 0; }
  Lit negated() const { return Lit(-enc); }

  friend bool operator==(Lit a, Lit b) { return a.enc == b.enc; }
  friend bool operator!=(Lit a, Lit b) { return a.enc != b.enc; }
  // Order: by variable, negative polarity before positive.
  friend bool operator<(Lit a, Lit b) {
    if (a.var() != b.var()) return a.var() < b.var();
    return a.enc < b.enc;
  }
};

class Clause {
 public:
  Clause() = default;

  // Sorts and deduplicates. Throws ContractError on a tautology or a zero
  // literal; callers that must tolerate tautologies check is_tautology first.
  explicit Clause(std::vector<Lit> lits);

  static bool is_tautology(const std::vector<Lit>& lits);

  bool empty() const { return lits_.empty(); }
  std::size_t size() const { return lits_.size(); }
  const std::vector<Lit>& lits() const { return lits_; }
  bool contains(Lit l) const;

  friend bool operator==(const Clause& a, const Clause& b) {
    return a.lits_ == b.lits_;
  }
  friend bool operator<(const Clause& a, const Clause& b);

 private:
  std::vector<Lit> lits_;  // sorted, unique
};

class Formula {
 public:
  Formula() = default;
  Formula(int num_variables, std::vector<Clause> clauses);

  int num_variables() const { return num_variables_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  bool empty() const { return clauses_.empty(); }

  // Stable fingerprint of (num_variables, clause list); used as the instance
  // identity inside state keys.
  std::uint64_t digest() const { return digest_; }

  // Sorted variables that occur in at least one clause.
  std::vector<int> variables_in_use() const;

 private:
  int num_variables_ = 0;
  std::vector<Clause> clauses_;
  std::uint64_t digest_ = 0;
};

// Parses DIMACS CNF. Comment lines start with 'c'; the header line is
// "p cnf <variables> <clauses>". Clauses are zero-terminated and may span
// lines. The parsed clause count must match the header. Tautological clauses
// are dropped after counting; duplicate literals inside a clause are merged.
// Errors (ParseError, with line number): missing or malformed header, literal
// out of range, missing terminating zero, clause count mismatch.
Formula parse_dimacs(std::istream& in);
Formula parse_dimacs_string(const std::string& text);
Formula parse_dimacs_file(const std::string& path);

// Byte-stable DIMACS writer: header line, then one clause per line with
// literals in stored order and a trailing " 0". Newline endings throughout.
void write_dimacs(const Formula& f, std::ostream& out);
std::string write_dimacs_string(const Formula& f);
void write_dimacs_file(const Formula& f, const std::string& path);

}  // namespace mcfs
