#include "mcfs/policy.hpp"

#include <cmath>
#include <vector>

#include "mcfs/rng.hpp"

namespace mcfs {

namespace {

std::vector<int> open_vars_checked(const SubproblemState& s) {
  if (s.status() != Status::open) {
    throw ContractError("branching policy queried on a non-open state");
  }
  std::vector<int> vars = s.open_variables();
  if (vars.empty()) {
    throw ContractError("open state with no residual variables");
  }
  return vars;
}

class JwPolicy final : public BranchingPolicy {
 public:
  int choose(const SubproblemState& s) override {
    std::vector<int> vars = open_vars_checked(s);
    std::vector<double> scores = jw_scores(s, vars);
    std::size_t best = 0;
    for (std::size_t i = 1; i < vars.size(); ++i) {
      if (scores[i] > scores[best]) best = i;  // ties keep the lowest index
    }
    return vars[best];
  }
  std::string name() const override { return "jw"; }
};

class UniformPolicy final : public BranchingPolicy {
 public:
  explicit UniformPolicy(std::uint64_t seed) : rng_(seed) {}
  int choose(const SubproblemState& s) override {
    std::vector<int> vars = open_vars_checked(s);
    return vars[static_cast<std::size_t>(rng_.below(vars.size()))];
  }
  std::string name() const override { return "uniform"; }

 private:
  Rng rng_;
};

class FixedOrderPolicy final : public BranchingPolicy {
 public:
  int choose(const SubproblemState& s) override {
    return open_vars_checked(s).front();
  }
  std::string name() const override { return "fixed"; }
};

}  // namespace

std::vector<double> jw_scores(const SubproblemState& s,
                              const std::vector<int>& open_vars) {
  std::vector<double> by_var(
      static_cast<std::size_t>(s.residual().num_variables()) + 1, 0.0);
  for (const Clause& c : s.residual().clauses()) {
    double w = std::ldexp(1.0, -static_cast<int>(c.size()));
    for (Lit l : c.lits()) by_var[static_cast<std::size_t>(l.var())] += w;
  }
  std::vector<double> out;
  out.reserve(open_vars.size());
  for (int v : open_vars) out.push_back(by_var[static_cast<std::size_t>(v)]);
  return out;
}

std::unique_ptr<BranchingPolicy> make_jw_policy() {
  return std::make_unique<JwPolicy>();
}

std::unique_ptr<BranchingPolicy> make_uniform_policy(std::uint64_t seed) {
  return std::make_unique<UniformPolicy>(seed);
}

std::unique_ptr<BranchingPolicy> make_fixed_order_policy() {
  return std::make_unique<FixedOrderPolicy>();
}

}  // namespace mcfs
