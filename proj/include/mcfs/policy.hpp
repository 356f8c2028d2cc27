// Branching policies: given an open state, pick the next decision variable
// from the variables still occurring in the residual.
#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mcfs/state.hpp"

namespace mcfs {

class BranchingPolicy {
 public:
  virtual ~BranchingPolicy() = default;

  // Returns a variable occurring in the residual. Throws ContractError when
  // the state is not open (no candidates).
  virtual int choose(const SubproblemState& s) = 0;

  virtual std::string name() const = 0;
};

// Two-sided literal-count score: each clause contributes 2^-|clause| to both
// polarities of each variable it mentions. Highest total wins; ties go to
// the lowest variable index. Deterministic.
std::unique_ptr<BranchingPolicy> make_jw_policy();

// Per-state score vector used by the JW policy and the JW prior; indexed in
// step with open_variables() of the state.
std::vector<double> jw_scores(const SubproblemState& s,
                              const std::vector<int>& open_vars);

// Uniform over the residual's variables; reproducible under the seed.
std::unique_ptr<BranchingPolicy> make_uniform_policy(std::uint64_t seed);

// Lowest-indexed variable of the residual. Deterministic.
std::unique_ptr<BranchingPolicy> make_fixed_order_policy();

}  // namespace mcfs
