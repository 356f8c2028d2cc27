// mcfs: command-line surface for the solver, the tree-size estimator, the
// search engine, and the training/benchmark harness.
//
// Subcommands:
//   gen               generate random 3-CNF instances into a directory
//   solve             solve one instance and print its proof-tree stats
//   estimate          sampled tree-size estimate with standard error
//   search            one search episode with trace/example export
//   train             policy-improvement iterations over a config file
//   bench             benchmark named policies, CSV out
//   knuth-efficiency  sampled vs full-tree convergence curves, CSV out
//
// The MCFS_SUBSOLVER environment variable overrides the external
// subsolver executable path.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcfs/cnf.hpp"
#include "mcfs/dpll.hpp"
#include "mcfs/errors.hpp"
#include "mcfs/gen.hpp"
#include "mcfs/harness.hpp"
#include "mcfs/knuth.hpp"
#include "mcfs/model.hpp"
#include "mcfs/oracle.hpp"
#include "mcfs/policy.hpp"
#include "mcfs/search.hpp"

namespace {

using namespace mcfs;

constexpr const char* kSubsolverEnvVar = "MCFS_SUBSOLVER";
constexpr const char* kDefaultSizePattern = "([0-9]+)";

struct InstanceSourceOpts {
  std::string dir;
  int vars = 0;
  int count = 0;
  bool verify = false;
};

void add_instance_options(CLI::App* cmd, InstanceSourceOpts& opts) {
  auto* dir = cmd->add_option(
      "--instances", opts.dir,
      "Directory of DIMACS .cnf instances (taken as unsatisfiable "
      "unless --verify is given)");
  auto* vars = cmd->add_option(
      "--vars", opts.vars,
      "Generate verified-unsatisfiable instances with this many variables");
  cmd->add_option("--count", opts.count,
                  "How many instances to generate (with --vars)");
  cmd->add_flag("--verify", opts.verify,
                "Exhaustively check that loaded instances are unsatisfiable");
  vars->excludes(dir);
}

bool instance_unsat(const Formula& f) {
  if (f.num_variables() <= 20) return !brute_force_sat(f);
  auto jw = make_jw_policy();
  return dpll_solve(f, *jw).outcome == SolveOutcome::unsatisfiable;
}

InstanceSet load_instance_dir(const std::string& dir, bool verify) {
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cnf") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DataError("no .cnf files in " + dir);

  InstanceSet set;
  for (const auto& p : paths) {
    Formula f = parse_dimacs_file(p.string());
    if (verify && !instance_unsat(f)) {
      throw DataError("instance " + p.string() + " is satisfiable");
    }
    InstanceMeta meta;
    meta.id = p.stem().string();
    meta.variables = f.num_variables();
    set.formulas.push_back(std::move(f));
    set.meta.push_back(std::move(meta));
  }
  return set;
}

InstanceSet resolve_instances(const InstanceSourceOpts& opts,
                              std::uint64_t seed) {
  if (!opts.dir.empty()) return load_instance_dir(opts.dir, opts.verify);
  if (opts.vars > 0 && opts.count > 0) {
    return make_training_set(opts.vars, opts.count, seed);
  }
  throw DataError(
      "no instances: pass --instances DIR or --vars N --count M");
}

// "internal" runs the built-in exact solver; anything else is an external
// command line whose "{cnf}" tokens are replaced by the subproblem's DIMACS
// path (appended when absent). The reported size is extracted with
// `pattern` (capture group 1). MCFS_SUBSOLVER overrides the executable.
SubsolverHandle make_subsolver(const std::string& spec_text,
                               const std::string& pattern) {
  const char* env = std::getenv(kSubsolverEnvVar);
  std::string text = spec_text;
  if (text.empty()) text = "internal";

  if (text == "internal" && env == nullptr) {
    return SubsolverHandle::default_internal();
  }

  ExternalSubsolverSpec spec;
  spec.pattern = pattern;
  if (text == "internal") {
    spec.exe = env;
    spec.args = {"{cnf}"};
    return SubsolverHandle::external(std::move(spec));
  }
  std::istringstream words(text);
  std::string word;
  while (words >> word) {
    if (spec.exe.empty()) {
      spec.exe = word;
    } else {
      spec.args.push_back(word);
    }
  }
  if (spec.exe.empty()) throw DataError("empty subsolver command");
  bool has_cnf = false;
  for (const std::string& a : spec.args) {
    if (a.find("{cnf}") != std::string::npos) has_cnf = true;
  }
  if (!has_cnf) spec.args.push_back("{cnf}");
  SubsolverHandle handle = SubsolverHandle::external(std::move(spec));
  if (env != nullptr) handle.set_external_exe(env);
  return handle;
}

std::unique_ptr<BranchingPolicy> make_named_policy(const std::string& name,
                                                   std::uint64_t seed) {
  if (name == "uniform") return make_uniform_policy(seed);
  if (name == "jw") return make_jw_policy();
  if (name == "fixed") return make_fixed_order_policy();
  throw DataError("unknown policy '" + name +
                  "' (expected uniform, jw, or fixed)");
}

// Model spec: "uniform", "jw", or a path to line-delimited training
// examples fitted into a lookup table backed by a uniform prior.
struct Models {
  std::shared_ptr<PriorModel> prior;
  std::shared_ptr<ValueModel> value;
};

Models make_models(const std::string& spec, const RunConfig& config) {
  Models m;
  if (spec == "uniform" || spec.empty()) {
    m.prior = std::make_shared<UniformPrior>();
    m.value = std::make_shared<ConstantValue>(0.0);
    return m;
  }
  if (spec == "jw") {
    m.prior = std::make_shared<JwPrior>();
    m.value = std::make_shared<ConstantValue>(0.0);
    return m;
  }
  KeyMode mode = config.use_dag ? KeyMode::unordered : KeyMode::ordered;
  auto table = std::make_shared<TableModel>(
      fit_table(load_training_examples(spec),
                std::make_shared<UniformPrior>(), 0.0, mode));
  m.prior = table;
  m.value = table;
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

RunConfig config_from_option(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void print_stats(const ProofTreeStats& stats) {
  std::cout << "outcome: "
            << (stats.outcome == SolveOutcome::unsatisfiable
                    ? "unsatisfiable"
                    : "satisfiable")
            << "\n"
            << "tree_size: " << stats.tree_size << "\n"
            << "max_depth: " << stats.max_depth << "\n"
            << "leaf_count: " << stats.leaf_count << "\n"
            << "subsolver_calls: " << stats.subsolver_calls << "\n";
}

int run_gen(int vars, int count, std::uint64_t seed, const std::string& dir,
            bool unsat_only, std::uint64_t max_attempts) {
  std::filesystem::create_directories(dir);
  if (unsat_only) {
    InstanceSet set = make_training_set(vars, count, seed, max_attempts);
    for (std::size_t i = 0; i < set.size(); ++i) {
      std::string path = dir + "/" + set.meta[i].id + ".cnf";
      write_text(path, write_dimacs_string(set.formulas[i]));
      std::cout << path << "\n";
    }
    std::cout << "instances: " << set.size() << "\n"
              << "candidates: " << set.attempts << "\n"
              << "rejection_rate: " << set.rejection_rate << "\n";
    return 0;
  }
  for (int i = 0; i < count; ++i) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    Formula f = gen_r3sat(vars, s);
    std::string path =
        dir + "/v" + std::to_string(vars) + "-s" + std::to_string(s) + ".cnf";
    write_text(path, write_dimacs_string(f));
    std::cout << path << "\n";
  }
  std::cout << "instances: " << count << "\n";
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{
      "Branching-policy search for small proof trees: DPLL solving, "
      "sampled tree-size estimation, forest search, and training"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Generate 3-CNF instances");
  int gen_vars = 10;
  int gen_count = 1;
  std::uint64_t gen_seed = 0;
  std::uint64_t gen_max_attempts = 0;
  std::string gen_dir;
  bool gen_unsat_only = false;
  gen->add_option("--vars", gen_vars, "Variables per instance")->required();
  gen->add_option("--count", gen_count, "Number of instances")->required();
  gen->add_option("--seed", gen_seed, "Base seed (instance i uses seed+i)");
  gen->add_option("--out", gen_dir, "Output directory")->required();
  gen->add_flag("--unsat-only", gen_unsat_only,
                "Keep only instances verified unsatisfiable");
  gen->add_option("--max-attempts", gen_max_attempts,
                  "Candidate budget for --unsat-only (default 200*count)");

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "Solve one DIMACS instance");
  std::string solve_path, solve_policy = "jw", solve_config;
  std::string solve_pattern = kDefaultSizePattern;
  std::uint64_t solve_seed = 0;
  std::optional<int> solve_ell;
  solve->add_option("instance", solve_path, "DIMACS file")->required();
  solve->add_option("--policy", solve_policy,
                    "Branching policy: uniform, jw, fixed");
  solve->add_option("--seed", solve_seed, "Seed for seeded policies");
  solve->add_option("--ell", solve_ell,
                    "Hand open subproblems at this depth to the subsolver");
  solve->add_option("--config", solve_config,
                    "Run config supplying propagation flags and subsolver");
  solve->add_option("--subsolver-pattern", solve_pattern,
                    "Regex whose group 1 is the external solver's size");

  // ---- estimate ----
  auto* est = app.add_subcommand(
      "estimate", "Sampled proof-tree size estimate (mean and stderr)");
  std::string est_path, est_policy = "jw", est_config;
  std::string est_pattern = kDefaultSizePattern;
  std::uint64_t est_samples = 1000, est_seed = 0;
  std::optional<int> est_ell;
  est->add_option("instance", est_path, "DIMACS file")->required();
  est->add_option("--samples", est_samples, "Number of sampled paths");
  est->add_option("--policy", est_policy,
                  "Branching policy: uniform, jw, fixed");
  est->add_option("--seed", est_seed, "Sampling seed");
  est->add_option("--ell", est_ell,
                  "Cut sampled paths at this depth with the subsolver");
  est->add_option("--config", est_config,
                  "Run config supplying propagation flags and subsolver");
  est->add_option("--subsolver-pattern", est_pattern,
                  "Regex whose group 1 is the external solver's size");

  // ---- search ----
  auto* search = app.add_subcommand(
      "search", "One search episode: commit decisions, export the trace");
  std::string search_path, search_config, search_trace, search_examples;
  std::string search_pattern = kDefaultSizePattern;
  std::optional<std::uint64_t> search_seed;
  search->add_option("instance", search_path, "DIMACS file")->required();
  search->add_option("--config", search_config, "Run config file");
  search->add_option("--seed", search_seed, "Override the config seed");
  search->add_option("--trace", search_trace,
                     "Write committed decisions as JSON lines");
  search->add_option("--examples", search_examples,
                     "Write training examples as JSON lines");
  search->add_option("--subsolver-pattern", search_pattern,
                     "Regex whose group 1 is the external solver's size");

  // ---- train ----
  auto* train = app.add_subcommand(
      "train", "Policy-improvement iterations: search, fit, evaluate");
  std::string train_config, train_out;
  std::string train_pattern = kDefaultSizePattern;
  int train_iters = 1;
  InstanceSourceOpts train_src;
  train->add_option("--config", train_config, "Run config file");
  train->add_option("--iterations", train_iters, "Improvement iterations");
  train->add_option("--out", train_out,
                    "Directory for fitted models (default: config "
                    "output_dir or '.')");
  train->add_option("--subsolver-pattern", train_pattern,
                    "Regex whose group 1 is the external solver's size");
  add_instance_options(train, train_src);

  // ---- bench ----
  auto* bench_cmd = app.add_subcommand(
      "bench", "Benchmark named policies over an instance set");
  std::string bench_config, bench_out, bench_summary_out, bench_baseline;
  std::string bench_pattern = kDefaultSizePattern;
  std::vector<std::string> bench_policies{"uniform", "jw"};
  InstanceSourceOpts bench_src;
  bench_cmd->add_option("--config", bench_config, "Run config file");
  bench_cmd->add_option("--policies", bench_policies,
                        "Policies to run: uniform, jw, fixed, or a path to "
                        "fitted training examples")
      ->delimiter(',');
  bench_cmd->add_option("--baseline", bench_baseline,
                        "Summary baseline policy (default: first policy)");
  bench_cmd->add_option("--out", bench_out, "Records CSV path ('-' stdout)");
  bench_cmd->add_option("--summary", bench_summary_out,
                        "Summary CSV path ('-' stdout)");
  bench_cmd->add_option("--subsolver-pattern", bench_pattern,
                        "Regex whose group 1 is the external solver's size");
  add_instance_options(bench_cmd, bench_src);

  // ---- knuth-efficiency ----
  auto* eff = app.add_subcommand(
      "knuth-efficiency",
      "Sampled-rollout vs full-tree convergence curves under a node budget");
  std::string eff_config, eff_out, eff_summary_out;
  std::string eff_pattern = kDefaultSizePattern;
  std::uint64_t eff_budget = 20000, eff_cadence = 10;
  InstanceSourceOpts eff_src;
  eff->add_option("--config", eff_config, "Run config file");
  eff->add_option("--budget", eff_budget, "Expanded-node budget per variant");
  eff->add_option("--cadence", eff_cadence,
                  "Measure the incumbent every this many rollouts");
  eff->add_option("--out", eff_out, "Curve CSV path ('-' stdout)");
  eff->add_option("--summary", eff_summary_out,
                  "Mean and confidence band CSV path ('-' stdout)");
  eff->add_option("--subsolver-pattern", eff_pattern,
                  "Regex whose group 1 is the external solver's size");
  add_instance_options(eff, eff_src);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    return run_gen(gen_vars, gen_count, gen_seed, gen_dir, gen_unsat_only,
                   gen_max_attempts);
  }

  if (solve->parsed()) {
    RunConfig config = config_from_option(solve_config);
    Formula f = parse_dimacs_file(solve_path);
    auto policy = make_named_policy(solve_policy, solve_seed);
    DpllOptions opts;
    opts.simplify.pure_literals = config.pure_literals;
    opts.polarity_true_first = config.polarity_true_first;
    ProofTreeStats stats;
    if (solve_ell) {
      SubsolverHandle sub = make_subsolver(config.subsolver, solve_pattern);
      stats = hybrid_solve(f, *policy, sub, *solve_ell, opts);
    } else {
      stats = dpll_solve(f, *policy, opts);
    }
    print_stats(stats);
    return 0;
  }

  if (est->parsed()) {
    RunConfig config = config_from_option(est_config);
    Formula f = parse_dimacs_file(est_path);
    auto policy = make_named_policy(est_policy, est_seed);
    DpllOptions opts;
    opts.simplify.pure_literals = config.pure_literals;
    opts.polarity_true_first = config.polarity_true_first;
    std::optional<SubsolverHandle> sub;
    if (est_ell) sub = make_subsolver(config.subsolver, est_pattern);
    SizeEstimate e =
        estimate_tree_size(f, *policy, est_ell, sub ? &*sub : nullptr,
                           est_samples, est_seed, opts);
    std::cout << "mean: " << e.mean << "\n"
              << "std_error: " << e.std_error() << "\n"
              << "samples: " << e.sample_count << "\n";
    return 0;
  }

  if (search->parsed()) {
    RunConfig config = config_from_option(search_config);
    if (search_seed) config.seed = *search_seed;
    Formula f = parse_dimacs_file(search_path);
    Models models = make_models(config.model, config);
    SubsolverHandle sub = make_subsolver(config.subsolver, search_pattern);
    ForestSearch fs(f, models.prior, models.value, &sub,
                    to_search_config(config, config.seed));
    EpisodeResult ep = fs.run_episode();
    if (!search_trace.empty()) save_trace(search_trace, ep.trace);
    if (!search_examples.empty()) {
      save_training_examples(search_examples, ep.examples);
    }
    std::cout << "aborted_sat: " << (ep.aborted_sat ? "true" : "false")
              << "\n"
              << "realized_tree_size: " << ep.realized_tree_size << "\n"
              << "commits: " << ep.trace.size() << "\n"
              << "examples: " << ep.examples.size() << "\n"
              << "rollouts: " << ep.rollouts << "\n"
              << "expanded_nodes: " << ep.expanded_nodes << "\n"
              << "frontier_subsolver_calls: " << ep.frontier_subsolver_calls
              << "\n"
              << "frontier_value_calls: " << ep.frontier_value_calls << "\n";
    return ep.aborted_sat ? 2 : 0;
  }

  if (train->parsed()) {
    RunConfig config = config_from_option(train_config);
    InstanceSet instances = resolve_instances(train_src, config.seed);
    SubsolverHandle sub = make_subsolver(config.subsolver, train_pattern);
    Models incumbent = make_models(config.model, config);
    std::string out_dir = !train_out.empty()
                              ? train_out
                              : (!config.output_dir.empty()
                                     ? config.output_dir
                                     : std::string("."));
    std::filesystem::create_directories(out_dir);

    for (int iter = 0; iter < train_iters; ++iter) {
      TrainResult r = train_iteration(instances, config, incumbent.prior,
                                      incumbent.value, sub);
      std::string model_path =
          out_dir + "/model-iter-" + std::to_string(iter + 1) + ".jsonl";
      save_training_examples(model_path, r.model->export_examples());
      std::cout << "iteration " << (iter + 1) << ": instances "
                << r.metrics.instances << ", failures "
                << r.metrics.failures << ", examples "
                << r.metrics.example_count << ", mean_before "
                << r.metrics.mean_before << ", mean_after "
                << r.metrics.mean_after << ", improved "
                << r.metrics.improved << ", model " << model_path << "\n";
      incumbent.prior = r.model;
      incumbent.value = r.model;
      // Later iterations re-search with reseeded episodes.
      config.seed += instances.size();
    }
    return 0;
  }

  if (bench_cmd->parsed()) {
    RunConfig config = config_from_option(bench_config);
    InstanceSet instances = resolve_instances(bench_src, config.seed);
    SubsolverHandle sub = make_subsolver(config.subsolver, bench_pattern);

    std::vector<NamedPolicy> policies;
    for (const std::string& name : bench_policies) {
      if (name == "uniform" || name == "jw" || name == "fixed") {
        policies.push_back({name, [name](std::uint64_t seed) {
                              return make_named_policy(name, seed);
                            }});
      } else {
        Models m = make_models(name, config);
        auto prior = m.prior;
        policies.push_back(
            {"argmax(" + name + ")", [prior](std::uint64_t) {
               return std::make_unique<PriorArgmaxPolicy>(prior);
             }});
      }
    }
    if (policies.empty()) throw DataError("no policies to benchmark");
    std::string baseline =
        bench_baseline.empty() ? policies.front().name : bench_baseline;

    std::vector<BenchRecord> records = bench(policies, instances, config, sub);
    write_text(bench_out, bench_csv(records));
    write_text(bench_summary_out, bench_summary_csv(records, baseline));
    return 0;
  }

  if (eff->parsed()) {
    RunConfig config = config_from_option(eff_config);
    InstanceSet instances = resolve_instances(eff_src, config.seed);
    SubsolverHandle sub = make_subsolver(config.subsolver, eff_pattern);
    EfficiencyResult result = knuth_efficiency_experiment(
        instances, config, sub, eff_budget, eff_cadence);
    write_text(eff_out, efficiency_csv(result));
    write_text(eff_summary_out, efficiency_summary_csv(result));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const mcfs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
