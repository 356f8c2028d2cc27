// Random 3-SAT instance generation at the satisfiability phase transition.
//
// The clause count follows the standard finite-size scaling fit for the
// hardest region of random 3-SAT (about 4.26 clauses per variable with a
// sub-linear correction), so generated instances sit near the 50/50
// SAT/UNSAT line where search is empirically hardest.
#pragma once

#include <cstdint>

#include "mcfs/cnf.hpp"

namespace mcfs {

// round(4.258 * v + 58.26 * v^(-2/3)). Requires v >= 3.
int r3sat_clause_count(int v);

// Random 3-CNF with the phase-transition clause count: each clause draws 3
// distinct variables uniformly without replacement and a fair-coin polarity
// per literal; duplicate clauses are resampled, so all clauses are unique.
// Deterministic function of (v, seed).
Formula gen_r3sat(int v, std::uint64_t seed);

}  // namespace mcfs
