// Exhaustive satisfiability check by truth-table enumeration. This is the
// reference result the search engines are validated against at small scale;
// it shares no code with the DPLL path.
#pragma once

#include "mcfs/cnf.hpp"

namespace mcfs {

inline constexpr int kDefaultBruteForceBound = 24;

// Enumerates all assignments over the declared variables. Throws
// ContractError when num_variables exceeds the bound.
bool brute_force_sat(const Formula& f,
                     int variable_bound = kDefaultBruteForceBound);

}  // namespace mcfs
