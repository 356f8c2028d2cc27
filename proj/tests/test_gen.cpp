#include "doctest.h"

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mcfs/cnf.hpp"
#include "mcfs/errors.hpp"
#include "mcfs/gen.hpp"
#include "mcfs/harness.hpp"
#include "mcfs/oracle.hpp"

using namespace mcfs;

TEST_CASE("clause count follows the fitted phase-transition curve") {
  CHECK(r3sat_clause_count(300) == 1279);
  CHECK(r3sat_clause_count(20) == 93);
  // Spot-check the formula directly for a couple more sizes.
  for (int v : {3, 10, 50, 128}) {
    double x = static_cast<double>(v);
    auto expect = static_cast<std::size_t>(
        std::lround(4.258 * x + 58.26 * std::pow(x, -2.0 / 3.0)));
    CHECK(r3sat_clause_count(v) == expect);
  }
  CHECK_THROWS_AS(r3sat_clause_count(2), ContractError);
}

TEST_CASE("generated instances are well-formed 3-CNF") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    Formula f = gen_r3sat(12, seed);
    CHECK(f.num_variables() == 12);
    CHECK(f.clauses().size() == r3sat_clause_count(12));
    std::set<Clause> seen;
    for (const Clause& c : f.clauses()) {
      REQUIRE(c.size() == 3);  // three distinct variables after dedup
      std::set<int> vars;
      for (Lit l : c.lits()) {
        CHECK(l.var() >= 1);
        CHECK(l.var() <= 12);
        vars.insert(l.var());
      }
      CHECK(vars.size() == 3);
      CHECK(seen.insert(c).second);  // no duplicate clauses
    }
  }
}

TEST_CASE("generation is a pure function of (variables, seed)") {
  Formula a = gen_r3sat(20, 42);
  Formula b = gen_r3sat(20, 42);
  CHECK(write_dimacs_string(a) == write_dimacs_string(b));
  CHECK(a.digest() == b.digest());
  Formula c = gen_r3sat(20, 43);
  CHECK(write_dimacs_string(a) != write_dimacs_string(c));
}

TEST_CASE("training sets contain only verified unsatisfiable instances") {
  InstanceSet set = make_training_set(8, 6, 500);
  REQUIRE(set.size() == 6);
  REQUIRE(set.meta.size() == 6);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK_FALSE(brute_force_sat(set.formulas[i]));
    CHECK(set.meta[i].variables == 8);
    CHECK(set.meta[i].id ==
          "v8-s" + std::to_string(set.meta[i].seed));
    // The recorded seed regenerates the same instance.
    CHECK(write_dimacs_string(gen_r3sat(8, set.meta[i].seed)) ==
          write_dimacs_string(set.formulas[i]));
  }
  // Every candidate was either rejected as satisfiable or collected.
  CHECK(set.attempts >= 6);
  double rejected = static_cast<double>(set.attempts - 6);
  CHECK(set.rejection_rate ==
        doctest::Approx(rejected / static_cast<double>(set.attempts)));
}

TEST_CASE("training set generation is deterministic and size zero works") {
  InstanceSet a = make_training_set(8, 3, 11);
  InstanceSet b = make_training_set(8, 3, 11);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.formulas[i].digest() == b.formulas[i].digest());
    CHECK(a.meta[i].id == b.meta[i].id);
  }
  InstanceSet empty = make_training_set(8, 0, 11);
  CHECK(empty.size() == 0);
  CHECK(empty.attempts == 0);
}

TEST_CASE("exhausting the candidate budget reports progress") {
  InstanceSet partial;
  CHECK_THROWS_AS(make_training_set(8, 1000, 5, 20, &partial), DataError);
  CHECK(partial.size() < 1000);
  CHECK(partial.attempts == 20);
  for (const Formula& f : partial.formulas) {
    CHECK_FALSE(brute_force_sat(f));
  }
}
