#include "mcfs/dpll.hpp"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <regex>

#include "mcfs/subprocess.hpp"

namespace mcfs {

namespace {

struct SolveContext {
  BranchingPolicy* policy = nullptr;
  const DpllOptions* opts = nullptr;
  const SubsolverHandle* subsolver = nullptr;  // hybrid mode only
  int ell = -1;
  ProofTreeStats stats;
};

// Returns true once a satisfying branch is found; unsatisfiable subtrees are
// explored completely.
bool explore(SolveContext& ctx, const SubproblemState& state) {
  ctx.stats.tree_size += 1;
  if (state.decision_depth() > ctx.stats.max_depth) {
    ctx.stats.max_depth = state.decision_depth();
  }
  if (state.status() == Status::conflict) {
    ctx.stats.leaf_count += 1;
    return false;
  }
  if (state.status() == Status::satisfied) {
    ctx.stats.leaf_count += 1;
    return true;
  }
  if (ctx.subsolver != nullptr && state.decision_depth() >= ctx.ell) {
    ctx.stats.leaf_count += 1;
    ctx.stats.subsolver_calls += 1;
    // The frontier node was already counted above; the subsolver's size
    // includes it, so take the subtree below as size - 1.
    SubsolverResult sub = ctx.subsolver->solve(state, *ctx.opts);
    if (sub.tree_size == 0) {
      throw Error("subsolver reported zero tree size");
    }
    ctx.stats.tree_size += sub.tree_size - 1;
    return sub.outcome == SolveOutcome::satisfiable;
  }
  if (ctx.subsolver == nullptr && ctx.opts->depth_limit &&
      state.decision_depth() >= *ctx.opts->depth_limit) {
    throw IncompleteSearchError(
        "open subproblem at depth limit " +
        std::to_string(*ctx.opts->depth_limit) + " and no subsolver");
  }
  int var = ctx.policy->choose(state);
  bool first = ctx.opts->polarity_true_first;
  for (bool polarity : {first, !first}) {
    SubproblemState child =
        transition(state, Lit::make(var, polarity), ctx.opts->simplify);
    if (explore(ctx, child)) return true;
  }
  return false;
}

ProofTreeStats run(SolveContext& ctx, const SubproblemState& root) {
  ctx.stats.outcome = explore(ctx, root) ? SolveOutcome::satisfiable
                                         : SolveOutcome::unsatisfiable;
  return ctx.stats;
}

}  // namespace

ProofTreeStats dpll_solve_state(const SubproblemState& root,
                                BranchingPolicy& policy,
                                const DpllOptions& opts) {
  SolveContext ctx;
  ctx.policy = &policy;
  ctx.opts = &opts;
  return run(ctx, root);
}

ProofTreeStats dpll_solve(const Formula& f, BranchingPolicy& policy,
                          const DpllOptions& opts) {
  SubproblemState root = simplify(SubproblemState::from_formula(f),
                                  opts.simplify);
  return dpll_solve_state(root, policy, opts);
}

ProofTreeStats hybrid_solve(const Formula& f, BranchingPolicy& top_policy,
                            const SubsolverHandle& subsolver, int ell,
                            const DpllOptions& opts) {
  if (ell < 0) throw ContractError("hybrid_solve: negative frontier depth");
  SolveContext ctx;
  ctx.policy = &top_policy;
  ctx.opts = &opts;
  ctx.subsolver = &subsolver;
  ctx.ell = ell;
  SubproblemState root = simplify(SubproblemState::from_formula(f),
                                  opts.simplify);
  return run(ctx, root);
}

SubsolverHandle SubsolverHandle::internal(PolicyFactory factory,
                                          std::string name) {
  if (!factory) throw ContractError("internal subsolver needs a policy");
  SubsolverHandle h;
  h.factory_ = std::move(factory);
  h.name_ = std::move(name);
  return h;
}

SubsolverHandle SubsolverHandle::external(ExternalSubsolverSpec spec) {
  if (spec.exe.empty()) throw ContractError("external subsolver needs a path");
  SubsolverHandle h;
  h.name_ = "external:" + spec.exe;
  h.external_ = std::move(spec);
  return h;
}

SubsolverHandle SubsolverHandle::default_internal() {
  return internal([] { return make_jw_policy(); }, "jw");
}

void SubsolverHandle::set_external_exe(const std::string& exe) {
  if (!external_) {
    throw ContractError("cannot override the path of an internal subsolver");
  }
  external_->exe = exe;
  name_ = "external:" + exe;
}

SubsolverResult SubsolverHandle::solve(const SubproblemState& state,
                                       const DpllOptions& opts) const {
  if (external_) {
    return SubsolverResult{run_external_subsolver(state, *external_),
                           SolveOutcome::unsatisfiable};
  }
  if (state.status() != Status::open) {
    // Closed states are their own one-node proofs.
    return SubsolverResult{1, state.status() == Status::satisfied
                                  ? SolveOutcome::satisfiable
                                  : SolveOutcome::unsatisfiable};
  }
  std::unique_ptr<BranchingPolicy> policy = factory_();
  DpllOptions sub_opts = opts;
  sub_opts.depth_limit.reset();
  ProofTreeStats stats = dpll_solve_state(state, *policy, sub_opts);
  return SubsolverResult{stats.tree_size, stats.outcome};
}

namespace {

class TempCnfFile {
 public:
  TempCnfFile() {
    std::filesystem::path dir = std::filesystem::temp_directory_path();
    std::string templ = (dir / "subproblem_XXXXXX").string();
    std::vector<char> buf(templ.begin(), templ.end());
    buf.push_back('\0');
    int fd = ::mkstemp(buf.data());
    if (fd < 0) throw Error("mkstemp failed");
    ::close(fd);
    path_ = std::string(buf.data());
  }
  ~TempCnfFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace

std::uint64_t run_external_subsolver(const SubproblemState& state,
                                     const ExternalSubsolverSpec& spec) {
  TempCnfFile tmp;
  write_dimacs_file(state.residual(), tmp.path());

  std::vector<std::string> argv;
  argv.push_back(spec.exe);
  for (const std::string& arg : spec.args) {
    std::string expanded = arg;
    std::size_t pos;
    while ((pos = expanded.find("{cnf}")) != std::string::npos) {
      expanded.replace(pos, 5, tmp.path());
    }
    argv.push_back(expanded);
  }

  ProcessResult proc = run_process(argv, spec.timeout);
  if (proc.timed_out) {
    throw SubsolverError(SubsolverError::Kind::timeout,
                         "subsolver timed out after " +
                             std::to_string(spec.timeout.count()) + " ms",
                         proc.out);
  }
  if (proc.exit_code != 0 && proc.exit_code != 10 && proc.exit_code != 20) {
    throw SubsolverError(SubsolverError::Kind::exit_code,
                         "subsolver exited with code " +
                             std::to_string(proc.exit_code),
                         proc.out + proc.err);
  }
  std::regex re;
  try {
    re = std::regex(spec.pattern);
  } catch (const std::regex_error&) {
    throw ContractError("invalid subsolver output pattern: " + spec.pattern);
  }
  std::smatch m;
  if (!std::regex_search(proc.out, m, re) || m.size() < 2) {
    throw SubsolverError(SubsolverError::Kind::parse,
                         "subsolver output did not match pattern '" +
                             spec.pattern + "'",
                         proc.out);
  }
  try {
    return std::stoull(m[1].str());
  } catch (const std::exception&) {
    throw SubsolverError(SubsolverError::Kind::parse,
                         "captured tree size is not a number: " + m[1].str(),
                         proc.out);
  }
}

}  // namespace mcfs
