#include "mcfs/cnf.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mcfs {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_step(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffULL;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

Clause::Clause(std::vector<Lit> lits) : lits_(std::move(lits)) {
  for (Lit l : lits_) {
    if (l.enc == 0) throw ContractError("clause literal must be nonzero");
  }
  std::sort(lits_.begin(), lits_.end());
  lits_.erase(std::unique(lits_.begin(), lits_.end()), lits_.end());
  for (std::size_t i = 0; i + 1 < lits_.size(); ++i) {
    if (lits_[i].var() == lits_[i + 1].var()) {
      throw ContractError("clause is a tautology over variable " +
                          std::to_string(lits_[i].var()));
    }
  }
}

bool Clause::is_tautology(const std::vector<Lit>& lits) {
  std::vector<Lit> sorted = lits;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i].var() == sorted[i + 1].var() &&
        sorted[i].enc != sorted[i + 1].enc) {
      return true;
    }
  }
  return false;
}

bool Clause::contains(Lit l) const {
  return std::binary_search(lits_.begin(), lits_.end(), l);
}

bool operator<(const Clause& a, const Clause& b) {
  return std::lexicographical_compare(
      a.lits_.begin(), a.lits_.end(), b.lits_.begin(), b.lits_.end(),
      [](Lit x, Lit y) { return x.enc < y.enc; });
}

Formula::Formula(int num_variables, std::vector<Clause> clauses)
    : num_variables_(num_variables), clauses_(std::move(clauses)) {
  if (num_variables_ < 0) throw ContractError("negative variable count");
  std::uint64_t h = kFnvOffset;
  h = fnv_step(h, static_cast<std::uint64_t>(num_variables_));
  for (const Clause& c : clauses_) {
    h = fnv_step(h, 0x9e3779b97f4a7c15ULL);  // clause separator
    for (Lit l : c.lits()) {
      if (l.var() > num_variables_) {
        throw ContractError("literal variable " + std::to_string(l.var()) +
                            " exceeds declared count " +
                            std::to_string(num_variables_));
      }
      h = fnv_step(h, static_cast<std::uint64_t>(
                          static_cast<std::int64_t>(l.enc)));
    }
  }
  digest_ = h;
}

std::vector<int> Formula::variables_in_use() const {
  std::vector<char> seen(static_cast<std::size_t>(num_variables_) + 1, 0);
  for (const Clause& c : clauses_) {
    for (Lit l : c.lits()) seen[static_cast<std::size_t>(l.var())] = 1;
  }
  std::vector<int> vars;
  for (int v = 1; v <= num_variables_; ++v) {
    if (seen[static_cast<std::size_t>(v)]) vars.push_back(v);
  }
  return vars;
}

Formula parse_dimacs(std::istream& in) {
  int line_no = 0;
  bool have_header = false;
  int declared_vars = 0;
  long long declared_clauses = 0;
  long long parsed_clauses = 0;
  std::vector<Clause> clauses;
  std::vector<Lit> current;
  bool clause_open = false;
  int clause_start_line = 0;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == 'c') continue;
    if (line[0] == 'p') {
      if (have_header) throw ParseError(line_no, "duplicate header line");
      std::istringstream hs(line);
      std::string p, fmt;
      hs >> p >> fmt >> declared_vars >> declared_clauses;
      if (hs.fail() || fmt != "cnf" || declared_vars < 0 ||
          declared_clauses < 0) {
        throw ParseError(line_no, "malformed header, expected 'p cnf V C'");
      }
      std::string extra;
      if (hs >> extra) {
        throw ParseError(line_no, "trailing tokens after header");
      }
      have_header = true;
      continue;
    }
    if (!have_header) {
      throw ParseError(line_no, "clause data before 'p cnf' header");
    }
    std::istringstream ls(line);
    long long tok;
    while (ls >> tok) {
      if (tok == 0) {
        ++parsed_clauses;
        if (!Clause::is_tautology(current)) {
          clauses.emplace_back(current);
        }
        current.clear();
        clause_open = false;
        continue;
      }
      long long mag = tok < 0 ? -tok : tok;
      if (mag > declared_vars) {
        throw ParseError(line_no,
                         "literal " + std::to_string(tok) +
                             " out of range for " +
                             std::to_string(declared_vars) + " variables");
      }
      if (!clause_open) {
        clause_open = true;
        clause_start_line = line_no;
      }
      current.push_back(Lit(static_cast<std::int32_t>(tok)));
    }
    if (!ls.eof()) {
      throw ParseError(line_no, "non-numeric token in clause data");
    }
  }
  if (clause_open) {
    throw ParseError(clause_start_line == 0 ? line_no : clause_start_line,
                     "clause missing terminating 0");
  }
  if (!have_header) {
    throw ParseError(line_no == 0 ? 1 : line_no, "missing 'p cnf' header");
  }
  if (parsed_clauses != declared_clauses) {
    throw ParseError(line_no == 0 ? 1 : line_no,
                     "header declares " + std::to_string(declared_clauses) +
                         " clauses but file contains " +
                         std::to_string(parsed_clauses));
  }
  return Formula(declared_vars, std::move(clauses));
}

Formula parse_dimacs_string(const std::string& text) {
  std::istringstream in(text);
  return parse_dimacs(in);
}

Formula parse_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  return parse_dimacs(in);
}

void write_dimacs(const Formula& f, std::ostream& out) {
  out << "p cnf " << f.num_variables() << ' ' << f.clauses().size() << '\n';
  for (const Clause& c : f.clauses()) {
    for (Lit l : c.lits()) out << l.enc << ' ';
    out << "0\n";
  }
}

std::string write_dimacs_string(const Formula& f) {
  std::ostringstream out;
  write_dimacs(f, out);
  return out.str();
}

void write_dimacs_file(const Formula& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open file for writing: " + path);
  write_dimacs(f, out);
}

}  // namespace mcfs
