#include "mcfs/state.hpp"

#include <algorithm>
#include <array>

#include "mcfs/rng.hpp"

namespace mcfs {

SubproblemState SubproblemState::from_formula(const Formula& f) {
  SubproblemState s;
  s.residual_ = f;
  s.assigned_.assign(static_cast<std::size_t>(f.num_variables()) + 1, 0);
  s.instance_digest_ = f.digest();
  s.refresh_status();
  return s;
}

bool SubproblemState::is_assigned(int var) const {
  return assignment(var) != 0;
}

int SubproblemState::assignment(int var) const {
  if (var < 1 || var >= static_cast<int>(assigned_.size())) {
    throw ContractError("variable " + std::to_string(var) + " out of range");
  }
  return assigned_[static_cast<std::size_t>(var)];
}

std::vector<Lit> SubproblemState::assigned_literals() const {
  std::vector<Lit> out;
  for (int v = 1; v < static_cast<int>(assigned_.size()); ++v) {
    std::int8_t a = assigned_[static_cast<std::size_t>(v)];
    if (a != 0) out.push_back(Lit::make(v, a > 0));
  }
  return out;
}

std::vector<int> SubproblemState::unassigned_variables() const {
  std::vector<int> out;
  for (int v = 1; v < static_cast<int>(assigned_.size()); ++v) {
    if (assigned_[static_cast<std::size_t>(v)] == 0) out.push_back(v);
  }
  return out;
}

void SubproblemState::refresh_status() {
  if (residual_.clauses().empty()) {
    status_ = Status::satisfied;
    return;
  }
  for (const Clause& c : residual_.clauses()) {
    if (c.empty()) {
      status_ = Status::conflict;
      return;
    }
  }
  status_ = Status::open;
}

// Applies var := polarity over the whole residual: satisfied clauses drop,
// the falsified literal is stripped everywhere. The variable no longer
// occurs afterwards, so pausing between assignments keeps the invariants.
void SubproblemState::assign_literal(Lit l) {
  std::int8_t& slot = assigned_[static_cast<std::size_t>(l.var())];
  if (slot != 0) {
    throw ContractError("variable " + std::to_string(l.var()) +
                        " is already assigned");
  }
  slot = l.positive() ? 1 : -1;
  ++assigned_count_;

  std::vector<Clause> next;
  next.reserve(residual_.clauses().size());
  bool empty_seen = false;
  Lit falsified = l.negated();
  for (const Clause& c : residual_.clauses()) {
    if (c.contains(l)) continue;  // satisfied
    if (c.contains(falsified)) {
      std::vector<Lit> kept;
      kept.reserve(c.size() - 1);
      for (Lit x : c.lits()) {
        if (x != falsified) kept.push_back(x);
      }
      if (kept.empty()) empty_seen = true;
      next.emplace_back(std::move(kept));
    } else {
      next.push_back(c);
    }
  }
  residual_ = Formula(residual_.num_variables(), std::move(next));
  if (empty_seen) {
    status_ = Status::conflict;
  } else {
    refresh_status();
  }
}

bool SubproblemState::propagate_units() {
  bool fired = false;
  while (status_ == Status::open) {
    Lit unit(0);
    bool found = false;
    for (const Clause& c : residual_.clauses()) {
      if (c.size() == 1) {
        unit = c.lits()[0];
        found = true;
        break;
      }
    }
    if (!found) break;
    assign_literal(unit);
    fired = true;
  }
  return fired;
}

bool SubproblemState::eliminate_pures() {
  if (status_ != Status::open) return false;
  // occurrence flags per variable: bit 0 positive, bit 1 negative
  std::vector<std::uint8_t> occ(assigned_.size(), 0);
  for (const Clause& c : residual_.clauses()) {
    for (Lit l : c.lits()) {
      occ[static_cast<std::size_t>(l.var())] |=
          static_cast<std::uint8_t>(l.positive() ? 1 : 2);
    }
  }
  bool fired = false;
  for (int v = 1; v < static_cast<int>(occ.size()); ++v) {
    std::uint8_t o = occ[static_cast<std::size_t>(v)];
    if (o == 1 || o == 2) {
      // Purity can be consumed by an earlier elimination in this sweep.
      if (assigned_[static_cast<std::size_t>(v)] != 0) continue;
      bool still_pos = false, still_neg = false;
      for (const Clause& c : residual_.clauses()) {
        if (c.contains(Lit::make(v, true))) still_pos = true;
        if (c.contains(Lit::make(v, false))) still_neg = true;
      }
      if (still_pos == still_neg) continue;  // gone or no longer pure
      assign_literal(Lit::make(v, still_pos));
      fired = true;
      if (status_ != Status::open) break;
    }
  }
  return fired;
}

void SubproblemState::run_up_ple_loop(const SimplifyOptions& opts) {
  for (;;) {
    bool up = propagate_units();
    if (status_ != Status::open) return;
    bool ple = opts.pure_literals && eliminate_pures();
    if (status_ != Status::open) return;
    if (!up && !ple) return;
  }
}

SubproblemState unit_propagate(const SubproblemState& s) {
  SubproblemState out = s;
  out.propagate_units();
  return out;
}

SubproblemState pure_literal_eliminate(const SubproblemState& s) {
  SubproblemState out = s;
  for (;;) {
    bool ple = out.eliminate_pures();
    if (out.status() != Status::open) return out;
    bool up = out.propagate_units();
    if (out.status() != Status::open) return out;
    if (!ple && !up) return out;
  }
}

SubproblemState simplify(const SubproblemState& s,
                         const SimplifyOptions& opts) {
  SubproblemState out = s;
  out.run_up_ple_loop(opts);
  return out;
}

SubproblemState transition(const SubproblemState& s, Lit decision,
                           const SimplifyOptions& opts) {
  if (s.status() != Status::open) {
    throw ContractError("transition from a non-open state");
  }
  if (decision.enc == 0) throw ContractError("transition on zero literal");
  if (decision.var() > s.residual().num_variables()) {
    throw ContractError("decision variable out of range");
  }
  if (s.is_assigned(decision.var())) {
    throw ContractError("decision variable " +
                        std::to_string(decision.var()) +
                        " is already assigned");
  }
  SubproblemState out = s;
  out.decisions_.push_back(decision);
  out.assign_literal(decision);
  if (out.status_ == Status::open) out.run_up_ple_loop(opts);
  return out;
}

namespace {

StateKey digest_lits(std::uint64_t instance, const std::vector<Lit>& lits) {
  std::uint64_t hi = splitmix64(instance ^ 0x8f1bbcdcbfa53e0bULL);
  std::uint64_t lo = splitmix64(instance ^ 0x2545f4914f6cdd1dULL);
  for (Lit l : lits) {
    std::uint64_t e =
        static_cast<std::uint64_t>(static_cast<std::int64_t>(l.enc));
    hi = splitmix64(hi ^ e);
    lo = splitmix64(lo + (e * 0x9e3779b97f4a7c15ULL));
  }
  return StateKey{hi, lo};
}

}  // namespace

StateKey state_key(const SubproblemState& s) {
  std::vector<Lit> d = s.decisions();
  std::sort(d.begin(), d.end());
  return digest_lits(s.instance_digest(), d);
}

StateKey ordered_state_key(const SubproblemState& s) {
  return digest_lits(splitmix64(s.instance_digest()) ^ 0x6a09e667f3bcc908ULL,
                     s.decisions());
}

std::string StateKey::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[static_cast<std::size_t>(15 - i)] = digits[(hi >> (4 * i)) & 0xf];
    out[static_cast<std::size_t>(31 - i)] = digits[(lo >> (4 * i)) & 0xf];
  }
  return out;
}

StateKey StateKey::from_hex(const std::string& text) {
  if (text.size() != 32) {
    throw DataError("state key must be 32 hex digits, got \"" + text + "\"");
  }
  std::uint64_t words[2] = {0, 0};
  for (std::size_t i = 0; i < 32; ++i) {
    char c = text[i];
    std::uint64_t nibble;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<std::uint64_t>(c - 'a') + 10;
    } else if (c >= 'A' && c <= 'F') {
      nibble = static_cast<std::uint64_t>(c - 'A') + 10;
    } else {
      throw DataError("state key must be 32 hex digits, got \"" + text +
                      "\"");
    }
    words[i / 16] = (words[i / 16] << 4) | nibble;
  }
  return StateKey{words[0], words[1]};
}

}  // namespace mcfs
