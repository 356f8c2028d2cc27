#include "mcfs/knuth.hpp"

#include <cmath>

namespace mcfs {

double SizeEstimate::std_error() const {
  if (sample_count == 0) return 0.0;
  return std::sqrt(variance() / static_cast<double>(sample_count));
}

KnuthPath sample_path(const Formula& f, BranchingPolicy& policy,
                      std::optional<int> ell, const SubsolverHandle* subsolver,
                      Rng& rng, const DpllOptions& opts) {
  if (ell.has_value()) {
    if (*ell < 0) throw ContractError("sample_path: negative frontier depth");
    if (subsolver == nullptr) {
      throw ContractError("sample_path: frontier depth set but no subsolver");
    }
  }
  KnuthPath path;
  SubproblemState state =
      simplify(SubproblemState::from_formula(f), opts.simplify);
  for (;;) {
    if (state.status() == Status::conflict) {
      path.terminal = PathTerminal::conflict;
      return path;
    }
    if (state.status() == Status::satisfied) {
      path.terminal = PathTerminal::satisfied;
      return path;
    }
    if (ell.has_value() && state.decision_depth() >= *ell) {
      path.terminal = PathTerminal::subsolver;
      path.t_sub = subsolver->solve(state, opts).tree_size;
      return path;
    }
    int var = policy.choose(state);
    bool coin = rng.coin();
    path.decisions.push_back(PathStep{state_key(state), var, coin});
    state = transition(state, Lit::make(var, coin), opts.simplify);
  }
}

double weighted_update(double t, int delta) {
  if (delta < 0) throw ContractError("weighted_update: negative exponent");
  // Integer-exact fast path for whole-number terminal weights.
  if (delta < 62 && t >= 0.0 && t == std::floor(t) && t < 9e15) {
    std::uint64_t ti = static_cast<std::uint64_t>(t);
    std::uint64_t p = 1ULL << delta;
    std::uint64_t prod = 0, sum = 0;
    if (!__builtin_mul_overflow(p, ti, &prod) &&
        !__builtin_add_overflow(prod, p - 1, &sum) &&
        sum < (1ULL << 53)) {
      return static_cast<double>(sum);
    }
  }
  return std::ldexp(t, delta) + std::ldexp(1.0, delta) - 1.0;
}

namespace {

double terminal_weight(const KnuthPath& path) {
  switch (path.terminal) {
    case PathTerminal::conflict:
      return 1.0;
    case PathTerminal::subsolver:
      return static_cast<double>(path.t_sub);
    case PathTerminal::satisfied:
      throw SatisfiableInstanceError(
          "path reached a satisfying assignment; tree size is undefined");
  }
  throw ContractError("unknown path terminal");
}

}  // namespace

double node_estimate_from_path(const KnuthPath& path) {
  return weighted_update(terminal_weight(path), path.length());
}

double depth_update_value(const KnuthPath& path, int d) {
  if (d < 0 || d > path.length()) {
    throw ContractError("depth_update_value: depth " + std::to_string(d) +
                        " outside path of length " +
                        std::to_string(path.length()));
  }
  return weighted_update(terminal_weight(path), path.length() - d);
}

double leaf_estimate_from_path(const KnuthPath& path) {
  if (path.terminal == PathTerminal::satisfied) {
    throw SatisfiableInstanceError(
        "path reached a satisfying assignment; leaf count is undefined");
  }
  return std::ldexp(1.0, path.length());
}

SizeEstimate estimate_tree_size(const Formula& f, BranchingPolicy& policy,
                                std::optional<int> ell,
                                const SubsolverHandle* subsolver,
                                std::uint64_t samples, std::uint64_t seed,
                                const DpllOptions& opts) {
  if (samples == 0) throw ContractError("estimate_tree_size: zero samples");
  Rng rng(seed);
  SizeEstimate est;
  for (std::uint64_t i = 0; i < samples; ++i) {
    KnuthPath path = sample_path(f, policy, ell, subsolver, rng, opts);
    est.add(node_estimate_from_path(path));  // throws on satisfied terminals
  }
  return est;
}

}  // namespace mcfs
