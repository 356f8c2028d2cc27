#include "mcfs/oracle.hpp"

#include <cstdint>
#include <vector>

namespace mcfs {

bool brute_force_sat(const Formula& f, int variable_bound) {
  if (f.num_variables() > variable_bound) {
    throw ContractError("brute_force_sat: " +
                        std::to_string(f.num_variables()) +
                        " variables exceeds bound " +
                        std::to_string(variable_bound));
  }
  if (f.clauses().empty()) return true;

  // Bitmask per clause: variable v maps to bit v-1 of the assignment word.
  struct Masks {
    std::uint32_t pos = 0;
    std::uint32_t neg = 0;
  };
  std::vector<Masks> masks;
  masks.reserve(f.clauses().size());
  for (const Clause& c : f.clauses()) {
    if (c.empty()) return false;
    Masks m;
    for (Lit l : c.lits()) {
      std::uint32_t bit = 1u << (l.var() - 1);
      if (l.positive()) {
        m.pos |= bit;
      } else {
        m.neg |= bit;
      }
    }
    masks.push_back(m);
  }

  std::uint64_t total = 1ULL << f.num_variables();
  for (std::uint64_t a = 0; a < total; ++a) {
    std::uint32_t word = static_cast<std::uint32_t>(a);
    bool ok = true;
    for (const Masks& m : masks) {
      if ((word & m.pos) == 0 && (~word & m.neg) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace mcfs
