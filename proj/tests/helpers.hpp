// Shared test fixtures and reference oracles.
//
// The expectation oracles here enumerate every coin sequence of the sampling
// scheme directly (transition + policy walk, probability-weighted), so they
// verify the estimators along an independent route from the samplers they
// check.
#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "mcfs/cnf.hpp"
#include "mcfs/dpll.hpp"
#include "mcfs/knuth.hpp"
#include "mcfs/oracle.hpp"
#include "mcfs/policy.hpp"
#include "mcfs/rng.hpp"
#include "mcfs/state.hpp"

namespace mcfs_test {

using namespace mcfs;

// Smallest instance with a planted short proof: branching variable 1 (or,
// symmetrically, 2) conflicts immediately on both sides, giving the 3-node
// proof tree.
inline Formula planted_core() {
  std::vector<Clause> cs;
  cs.emplace_back(std::vector<Lit>{Lit(1), Lit(2)});
  cs.emplace_back(std::vector<Lit>{Lit(1), Lit(-2)});
  cs.emplace_back(std::vector<Lit>{Lit(-1), Lit(2)});
  cs.emplace_back(std::vector<Lit>{Lit(-1), Lit(-2)});
  return Formula(2, std::move(cs));
}

// The planted core plus `pads` padding variables 3..2+pads. Each padding
// variable occurs in both polarities (so pure-literal elimination cannot
// strip it) and padding decisions never propagate into the core. Branching
// a core variable first still yields the 3-node tree; branching all pads
// first costs at least 2^pads nodes.
inline Formula planted_padded(int pads) {
  Formula core = planted_core();
  std::vector<Clause> cs = core.clauses();
  for (int i = 0; i < pads; ++i) {
    int p = 3 + i;
    cs.emplace_back(std::vector<Lit>{Lit(p), Lit(1), Lit(2)});
    cs.emplace_back(std::vector<Lit>{Lit(-p), Lit(1), Lit(2)});
  }
  return Formula(2 + pads, std::move(cs));
}

// Unsatisfiable 3-variable instance whose fixed-order proof tree is the
// asymmetric 5-node shape: root; conflict at depth 1 on the x1=false side;
// one more decision on the x1=true side with two conflict leaves at depth 2.
inline Formula asymmetric5() {
  std::vector<Clause> cs;
  cs.emplace_back(std::vector<Lit>{Lit(1), Lit(2)});
  cs.emplace_back(std::vector<Lit>{Lit(1), Lit(-2)});
  cs.emplace_back(std::vector<Lit>{Lit(-1), Lit(2), Lit(3)});
  cs.emplace_back(std::vector<Lit>{Lit(-1), Lit(2), Lit(-3)});
  cs.emplace_back(std::vector<Lit>{Lit(-1), Lit(-2), Lit(3)});
  cs.emplace_back(std::vector<Lit>{Lit(-1), Lit(-2), Lit(-3)});
  return Formula(3, std::move(cs));
}

// Contradictory unit pair: propagation conflicts at the root, zero decisions.
inline Formula units_conflict() {
  std::vector<Clause> cs;
  cs.emplace_back(std::vector<Lit>{Lit(1)});
  cs.emplace_back(std::vector<Lit>{Lit(-1)});
  return Formula(1, std::move(cs));
}

// Random width-k CNF with distinct variables per clause and coin-flip
// polarities. Duplicate clauses are allowed here; the tests that need
// unsatisfiable instances filter with the brute-force oracle.
inline Formula random_kcnf(Rng& rng, int vars, int clauses, int width = 3) {
  std::vector<Clause> cs;
  cs.reserve(static_cast<std::size_t>(clauses));
  for (int i = 0; i < clauses; ++i) {
    std::vector<int> pool;
    for (int v = 1; v <= vars; ++v) pool.push_back(v);
    std::vector<Lit> lits;
    for (int j = 0; j < width && !pool.empty(); ++j) {
      std::size_t idx = static_cast<std::size_t>(rng.below(pool.size()));
      int v = pool[idx];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
      lits.push_back(Lit::make(v, rng.coin()));
    }
    cs.emplace_back(std::move(lits));
  }
  return Formula(vars, std::move(cs));
}

// Draws random 3-CNF instances until `count` unsatisfiable ones (verified by
// the truth-table oracle) have been collected.
inline std::vector<Formula> random_unsat_set(Rng& rng, int count, int min_vars,
                                             int max_vars,
                                             double clause_ratio = 5.0) {
  std::vector<Formula> out;
  while (static_cast<int>(out.size()) < count) {
    int vars = min_vars + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(max_vars - min_vars + 1)));
    int clauses = static_cast<int>(std::lround(clause_ratio * vars));
    Formula f = random_kcnf(rng, vars, clauses);
    if (!brute_force_sat(f)) out.push_back(f);
  }
  return out;
}

namespace detail {

struct EnumContext {
  BranchingPolicy* policy = nullptr;
  std::optional<int> ell;
  const SubsolverHandle* subsolver = nullptr;
  DpllOptions opts;
  double node_sum = 0.0;
  double leaf_sum = 0.0;
};

// Walks every coin sequence, materializing each complete path and weighting
// its estimate by 2^-length.
inline void enum_paths(EnumContext& ctx, const SubproblemState& state,
                       std::vector<PathStep>& steps) {
  auto finish = [&](PathTerminal terminal, std::uint64_t t_sub) {
    KnuthPath path;
    path.decisions = steps;
    path.terminal = terminal;
    path.t_sub = t_sub;
    double prob = std::ldexp(1.0, -path.length());
    ctx.node_sum += prob * node_estimate_from_path(path);
    ctx.leaf_sum += prob * leaf_estimate_from_path(path);
  };
  if (state.status() == Status::conflict) {
    finish(PathTerminal::conflict, 0);
    return;
  }
  if (state.status() == Status::satisfied) {
    throw SatisfiableInstanceError("enumeration hit a satisfying branch");
  }
  if (ctx.ell && state.decision_depth() >= *ctx.ell) {
    finish(PathTerminal::subsolver,
           ctx.subsolver->solve(state, ctx.opts).tree_size);
    return;
  }
  int var = ctx.policy->choose(state);
  for (bool coin : {false, true}) {
    steps.push_back(PathStep{state_key(state), var, coin});
    enum_paths(ctx, transition(state, Lit::make(var, coin), ctx.opts.simplify),
               steps);
    steps.pop_back();
  }
}

inline EnumContext run_enum(const Formula& f, BranchingPolicy& policy,
                            std::optional<int> ell,
                            const SubsolverHandle* subsolver,
                            const DpllOptions& opts) {
  EnumContext ctx;
  ctx.policy = &policy;
  ctx.ell = ell;
  ctx.subsolver = subsolver;
  ctx.opts = opts;
  std::vector<PathStep> steps;
  enum_paths(ctx, simplify(SubproblemState::from_formula(f), opts.simplify),
             steps);
  return ctx;
}

}  // namespace detail

// Exact expectation of the node estimator under the path-sampling scheme:
// sum over all complete paths of 2^-length * estimate. Requires a
// deterministic policy.
inline double enum_node_expectation(const Formula& f, BranchingPolicy& policy,
                                    std::optional<int> ell = std::nullopt,
                                    const SubsolverHandle* subsolver = nullptr,
                                    const DpllOptions& opts = {}) {
  return detail::run_enum(f, policy, ell, subsolver, opts).node_sum;
}

// Exact expectation of the leaf estimator (pure paths, no frontier).
inline double enum_leaf_expectation(const Formula& f, BranchingPolicy& policy,
                                    const DpllOptions& opts = {}) {
  return detail::run_enum(f, policy, std::nullopt, nullptr, opts).leaf_sum;
}

inline std::string fixture_path(const std::string& name) {
  return std::string(MCFS_FIXTURE_DIR) + "/" + name;
}

}  // namespace mcfs_test
