// DPLL tree search and proof-tree accounting.
//
// dpll_solve explores the branching tree under a policy: every call is one
// node, unsatisfiable subtrees are explored completely, and the search stops
// at the first satisfying branch. On unsatisfiable input the node count is
// the exact proof-tree size (odd, since every internal node has two
// children). hybrid_solve runs a top policy down to a frontier depth and
// hands open frontier subproblems to a subsolver whose reported size
// includes the frontier node itself.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcfs/policy.hpp"
#include "mcfs/state.hpp"

namespace mcfs {

enum class SolveOutcome { satisfiable, unsatisfiable };

struct ProofTreeStats {
  std::uint64_t tree_size = 0;   // nodes visited, subsolver subtrees included
  int max_depth = 0;             // deepest decision depth reached (top tree)
  std::uint64_t leaf_count = 0;  // terminal nodes of the top tree
  SolveOutcome outcome = SolveOutcome::unsatisfiable;
  std::uint64_t subsolver_calls = 0;
};

struct DpllOptions {
  SimplifyOptions simplify;
  // Default explores var=false before var=true at every branch.
  bool polarity_true_first = false;
  // dpll_solve only: reaching this decision depth with an open subproblem is
  // an IncompleteSearchError, since there is no subsolver to finish.
  std::optional<int> depth_limit;
};

struct ExternalSubsolverSpec {
  std::string exe;
  // Argument template; every "{cnf}" token is replaced by the path of a
  // temporary DIMACS file holding the residual subproblem.
  std::vector<std::string> args;
  // Regex applied to stdout; capture group 1 is the reported tree size.
  std::string pattern;
  std::chrono::milliseconds timeout{60000};
};

struct SubsolverResult {
  std::uint64_t tree_size = 0;
  SolveOutcome outcome = SolveOutcome::unsatisfiable;
};

// A subsolver measures the exact proof-tree size of a subproblem. Internal
// handles run DPLL under a private policy; external handles shell out to a
// solver binary and parse its reported node count. External handles cannot
// observe satisfiability, so they report unsatisfiable; use them only on
// verified unsatisfiable instances.
class SubsolverHandle {
 public:
  using PolicyFactory = std::function<std::unique_ptr<BranchingPolicy>()>;

  static SubsolverHandle internal(PolicyFactory factory, std::string name);
  static SubsolverHandle external(ExternalSubsolverSpec spec);
  // Internal DPLL under the two-sided literal-count policy.
  static SubsolverHandle default_internal();

  bool is_external() const { return external_.has_value(); }
  const std::string& name() const { return name_; }
  const ExternalSubsolverSpec* external_spec() const {
    return external_ ? &*external_ : nullptr;
  }
  void set_external_exe(const std::string& exe);

  // Solves the subproblem rooted at `state` (already simplified). The
  // reported size includes the root node. Deterministic handles return the
  // same size on repeated calls.
  SubsolverResult solve(const SubproblemState& state,
                        const DpllOptions& opts) const;

 private:
  SubsolverHandle() = default;
  std::string name_;
  PolicyFactory factory_;
  std::optional<ExternalSubsolverSpec> external_;
};

// Full DPLL from the formula's root. Throws IncompleteSearchError if
// opts.depth_limit is reached with an open subproblem.
ProofTreeStats dpll_solve(const Formula& f, BranchingPolicy& policy,
                          const DpllOptions& opts = {});

// Same search from an existing (simplified) state; depths count from the
// state's current decision depth.
ProofTreeStats dpll_solve_state(const SubproblemState& root,
                                BranchingPolicy& policy,
                                const DpllOptions& opts = {});

// Top policy above `ell`, subsolver at open depth-`ell` subproblems.
// ell == 0 delegates the whole instance to the subsolver. Conflicts above or
// at the frontier never invoke the subsolver.
ProofTreeStats hybrid_solve(const Formula& f, BranchingPolicy& top_policy,
                            const SubsolverHandle& subsolver, int ell,
                            const DpllOptions& opts = {});

// Writes the residual as DIMACS to a temporary file, invokes the external
// solver, and extracts the tree size. Throws SubsolverError with kind
// timeout / exit_code / parse. Solver exit codes 0, 10 and 20 are accepted.
std::uint64_t run_external_subsolver(const SubproblemState& state,
                                     const ExternalSubsolverSpec& spec);

}  // namespace mcfs
