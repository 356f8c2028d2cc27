// Search states and the branching transition.
//
// A SubproblemState is a residual formula under a partial assignment. The
// transition assigns one decision literal, then runs unit propagation and
// (optionally) pure-literal elimination to a joint fixpoint: propagate units,
// eliminate pure literals, repeat until neither fires.
//
// Invariants maintained here:
//   - no assigned variable occurs in the residual,
//   - status == conflict iff the residual contains an empty clause,
//   - status == satisfied iff the residual has no clauses,
//   - decision literals record branching choices only, not propagations.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcfs/cnf.hpp"

namespace mcfs {

enum class Status { open, conflict, satisfied };

struct SimplifyOptions {
  bool pure_literals = true;  // pure-literal elimination inside the transition
};

// Identity of a search state: digest of the decision-literal set (sorted, so
// decision order does not matter) mixed with the instance digest. Distinct
// instances never share keys. An order-sensitive variant backs the
// tree-store mode where transpositions must stay separate.
struct StateKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend bool operator==(const StateKey& a, const StateKey& b) {
    return a.hi == b.hi && a.lo == b.lo;
  }
  friend bool operator!=(const StateKey& a, const StateKey& b) {
    return !(a == b);
  }
  std::string hex() const;
  // Inverse of hex(). Throws DataError on anything but 32 hex digits.
  static StateKey from_hex(const std::string& text);
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const {
    return static_cast<std::size_t>(k.hi ^ (k.lo * 0x9e3779b97f4a7c15ULL));
  }
};

class SubproblemState {
 public:
  SubproblemState() = default;

  // Raw root state: no assignments, no simplification applied. Status is
  // derived from the clause list (empty clause -> conflict, none -> open,
  // no clauses -> satisfied).
  static SubproblemState from_formula(const Formula& f);

  const Formula& residual() const { return residual_; }
  Status status() const { return status_; }
  std::uint64_t instance_digest() const { return instance_digest_; }

  int decision_depth() const { return static_cast<int>(decisions_.size()); }
  const std::vector<Lit>& decisions() const { return decisions_; }

  bool is_assigned(int var) const;
  // +1 assigned true, -1 assigned false, 0 unassigned.
  int assignment(int var) const;
  int assigned_count() const { return assigned_count_; }
  std::vector<Lit> assigned_literals() const;

  // Sorted variables still occurring in residual clauses; the action set.
  std::vector<int> open_variables() const { return residual_.variables_in_use(); }

  // All unassigned variables ascending, including any that no longer occur
  // in the residual. Prior models are defined over this set; open_variables()
  // is always a subset.
  std::vector<int> unassigned_variables() const;

 private:
  friend SubproblemState unit_propagate(const SubproblemState&);
  friend SubproblemState pure_literal_eliminate(const SubproblemState&);
  friend SubproblemState simplify(const SubproblemState&,
                                  const SimplifyOptions&);
  friend SubproblemState transition(const SubproblemState&, Lit,
                                    const SimplifyOptions&);

  void assign_literal(Lit l);     // applies one assignment fully
  bool propagate_units();         // to fixpoint; returns whether it fired
  bool eliminate_pures();         // one sweep over current pure literals
  void run_up_ple_loop(const SimplifyOptions& opts);
  void refresh_status();

  Formula residual_;
  std::vector<std::int8_t> assigned_;  // index by variable, values -1/0/+1
  int assigned_count_ = 0;
  std::vector<Lit> decisions_;
  Status status_ = Status::satisfied;
  std::uint64_t instance_digest_ = 0;
};

// Unit propagation to fixpoint. Pure function on the state value.
SubproblemState unit_propagate(const SubproblemState& s);

// Pure-literal elimination iterated to fixpoint, interleaved with unit
// propagation in the same order the transition uses.
SubproblemState pure_literal_eliminate(const SubproblemState& s);

// The propagation loop alone (no decision): unit propagation and optional
// pure-literal elimination to a joint fixpoint. Root states are prepared
// with this before any branching.
SubproblemState simplify(const SubproblemState& s,
                         const SimplifyOptions& opts = {});

// Branching step: assigns the decision literal, simplifies, and records the
// decision. Throws ContractError if the variable is already assigned or the
// state is not open.
SubproblemState transition(const SubproblemState& s, Lit decision,
                           const SimplifyOptions& opts = {});

// Permutation-invariant key: same decision set (any order) on the same
// instance gives the same key.
StateKey state_key(const SubproblemState& s);

// Order-sensitive key over the decision sequence; used when transposition
// sharing is disabled.
StateKey ordered_state_key(const SubproblemState& s);

}  // namespace mcfs
