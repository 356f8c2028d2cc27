#include "mcfs/gen.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "mcfs/errors.hpp"
#include "mcfs/rng.hpp"

namespace mcfs {

int r3sat_clause_count(int v) {
  if (v < 3) throw ContractError("3-SAT generation requires at least 3 variables");
  double x = static_cast<double>(v);
  return static_cast<int>(
      std::lround(4.258 * x + 58.26 * std::pow(x, -2.0 / 3.0)));
}

Formula gen_r3sat(int v, std::uint64_t seed) {
  int target = r3sat_clause_count(v);
  Rng rng(seed);

  std::set<Clause> seen;
  std::vector<Clause> clauses;
  clauses.reserve(static_cast<std::size_t>(target));
  while (static_cast<int>(clauses.size()) < target) {
    // Three distinct variables without replacement, fair-coin polarities.
    int a = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    int b = a;
    while (b == a) {
      b = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    }
    int c = a;
    while (c == a || c == b) {
      c = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    }
    std::vector<Lit> lits{Lit::make(a, rng.coin()), Lit::make(b, rng.coin()),
                          Lit::make(c, rng.coin())};
    Clause clause(std::move(lits));
    if (!seen.insert(clause).second) continue;  // duplicate: resample
    clauses.push_back(std::move(clause));
  }
  return Formula(v, std::move(clauses));
}

}  // namespace mcfs
