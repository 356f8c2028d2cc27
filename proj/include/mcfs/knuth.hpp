// Tree-size estimation from single random branching paths.
//
// One sample walks root-to-leaf: the policy picks the variable, a fair coin
// picks the polarity. A path of length L that ends in a terminal of weight T
// (conflict: T = 1; frontier subproblem: T = the subsolver's exact subtree
// size) estimates the full proof-tree node count as
//
//     2^L * T + 2^L - 1,
//
// which is unbiased because each depth-d path node is reached with
// probability 2^-d. The same weighting evaluated at an interior depth d,
// 2^(L-d) * T + 2^(L-d) - 1, is the per-node update the forest search backs
// up. A leaf-count variant estimates leaves as 2^L.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mcfs/dpll.hpp"
#include "mcfs/rng.hpp"
#include "mcfs/state.hpp"

namespace mcfs {

enum class PathTerminal { conflict, subsolver, satisfied };

struct PathStep {
  StateKey key;   // state the decision was made in
  int var = 0;    // policy's choice
  bool coin = false;  // polarity drawn by the fair coin
};

struct KnuthPath {
  std::vector<PathStep> decisions;
  PathTerminal terminal = PathTerminal::conflict;
  std::uint64_t t_sub = 0;  // subsolver terminals only

  int length() const { return static_cast<int>(decisions.size()); }
};

// Streaming mean/variance accumulator (Welford).
struct SizeEstimate {
  double mean = 0.0;
  std::uint64_t sample_count = 0;
  double m2 = 0.0;

  void add(double x) {
    sample_count += 1;
    double delta = x - mean;
    mean += delta / static_cast<double>(sample_count);
    m2 += delta * (x - mean);
  }
  double variance() const {
    return sample_count > 1 ? m2 / static_cast<double>(sample_count - 1) : 0.0;
  }
  double std_error() const;
};

// Walks one path from the formula's simplified root. Stops at a conflict, a
// satisfying assignment (flagged in the terminal; the caller decides how to
// react), or depth `ell`, where the subsolver supplies the terminal weight.
// Requires a subsolver whenever ell is set.
KnuthPath sample_path(const Formula& f, BranchingPolicy& policy,
                      std::optional<int> ell, const SubsolverHandle* subsolver,
                      Rng& rng, const DpllOptions& opts = {});

// 2^L * T + 2^L - 1 for the whole path. Satisfied terminals are an error:
// proof-tree size is only defined for unsatisfiable instances.
double node_estimate_from_path(const KnuthPath& path);

// The same weighting seen from depth d on the path: 2^(L-d)*T + 2^(L-d) - 1.
// d == 0 is node_estimate_from_path; d == L returns the terminal weight.
double depth_update_value(const KnuthPath& path, int d);

// Raw arithmetic shared with the search backup: 2^delta * t + 2^delta - 1.
// Integer-exact while the result fits 64 bits, promoted to floating point
// beyond that.
double weighted_update(double t, int delta);

// Leaf-count estimator: 2^L.
double leaf_estimate_from_path(const KnuthPath& path);

// Mean of k node estimates from independent paths. A satisfied path rejects
// the instance with SatisfiableInstanceError.
SizeEstimate estimate_tree_size(const Formula& f, BranchingPolicy& policy,
                                std::optional<int> ell,
                                const SubsolverHandle* subsolver,
                                std::uint64_t samples, std::uint64_t seed,
                                const DpllOptions& opts = {});

}  // namespace mcfs
