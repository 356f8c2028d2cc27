#include "mcfs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mcfs/errors.hpp"
#include "mcfs/gen.hpp"
#include "mcfs/oracle.hpp"
#include "mcfs/policy.hpp"

namespace mcfs {

namespace {

// Exact satisfiability check for generated candidates: truth table on small
// instances, complete search above that.
bool verified_unsat(const Formula& f) {
  if (f.num_variables() <= 20) return !brute_force_sat(f);
  auto jw = make_jw_policy();
  return dpll_solve(f, *jw).outcome == SolveOutcome::unsatisfiable;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string csv_quote(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string commit_mode_name(CommitMode mode) {
  switch (mode) {
    case CommitMode::max_count:
      return "max_count";
    case CommitMode::sample_prior:
      return "sample_prior";
    case CommitMode::mix:
      return "mix";
  }
  return "mix";
}

CommitMode commit_mode_from_name(const std::string& name) {
  if (name == "max_count") return CommitMode::max_count;
  if (name == "sample_prior") return CommitMode::sample_prior;
  if (name == "mix") return CommitMode::mix;
  throw DataError("unknown commit mode: " + name);
}

DpllOptions dpll_options_for(const RunConfig& config) {
  DpllOptions opts;
  opts.simplify.pure_literals = config.pure_literals;
  opts.polarity_true_first = config.polarity_true_first;
  return opts;
}

std::uint64_t exact_hybrid_size(const Formula& f, BranchingPolicy& policy,
                                const RunConfig& config,
                                const SubsolverHandle& subsolver) {
  return hybrid_solve(f, policy, subsolver, config.ell,
                      dpll_options_for(config))
      .tree_size;
}

BenchRecord run_one_bench(const Formula& f, const std::string& instance_id,
                          const std::string& policy_name,
                          BranchingPolicy& policy, const RunConfig& config,
                          const SubsolverHandle& subsolver) {
  BenchRecord rec;
  rec.instance_id = instance_id;
  rec.policy = policy_name;
  auto start = std::chrono::steady_clock::now();
  try {
    ProofTreeStats stats = hybrid_solve(f, policy, subsolver, config.ell,
                                        dpll_options_for(config));
    rec.tree_size = stats.tree_size;
    rec.decisions = stats.leaf_count > 0 ? stats.leaf_count - 1 : 0;
    rec.subsolver_calls = stats.subsolver_calls;
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  auto end = std::chrono::steady_clock::now();
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(end - start).count();
  return rec;
}

}  // namespace

InstanceSet make_training_set(int v, int count, std::uint64_t seed,
                              std::uint64_t max_attempts,
                              InstanceSet* partial) {
  if (count < 0) throw ContractError("instance count must be >= 0");
  if (max_attempts == 0) {
    max_attempts = static_cast<std::uint64_t>(200) *
                   static_cast<std::uint64_t>(std::max(count, 1));
  }

  InstanceSet set;
  std::uint64_t sat_seen = 0;
  while (static_cast<int>(set.formulas.size()) < count) {
    if (set.attempts >= max_attempts) {
      if (partial != nullptr) *partial = set;
      throw DataError(
          "instance generation budget exhausted: collected " +
          std::to_string(set.formulas.size()) + " of " +
          std::to_string(count) + " after " + std::to_string(set.attempts) +
          " candidates (" + std::to_string(sat_seen) + " satisfiable)");
    }
    std::uint64_t gen_seed = seed + set.attempts;
    set.attempts += 1;
    Formula f = gen_r3sat(v, gen_seed);
    if (!verified_unsat(f)) {
      sat_seen += 1;
      continue;
    }
    InstanceMeta meta;
    meta.id = "v" + std::to_string(v) + "-s" + std::to_string(gen_seed);
    meta.seed = gen_seed;
    meta.variables = v;
    set.formulas.push_back(std::move(f));
    set.meta.push_back(std::move(meta));
  }
  set.rejection_rate =
      set.attempts == 0
          ? 0.0
          : static_cast<double>(sat_seen) / static_cast<double>(set.attempts);
  return set;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.ell == b.ell && a.k == b.k && a.c_puct == b.c_puct && a.t == b.t &&
         a.mix_probability == b.mix_probability && a.commit == b.commit &&
         a.use_dag == b.use_dag && a.pure_literals == b.pure_literals &&
         a.polarity_true_first == b.polarity_true_first &&
         a.qd_decay == b.qd_decay && a.eps_initial == b.eps_initial &&
         a.seed == b.seed && a.model == b.model &&
         a.subsolver == b.subsolver && a.output_dir == b.output_dir;
}

std::string run_config_json(const RunConfig& config) {
  nlohmann::json j;
  j["ell"] = config.ell;
  j["k"] = config.k;
  j["c_puct"] = config.c_puct;
  j["t"] = config.t;
  j["mix_probability"] = config.mix_probability;
  j["commit"] = commit_mode_name(config.commit);
  j["use_dag"] = config.use_dag;
  j["pure_literals"] = config.pure_literals;
  j["polarity_true_first"] = config.polarity_true_first;
  if (config.qd_decay) {
    j["qd_decay"] = *config.qd_decay;
  } else {
    j["qd_decay"] = nullptr;
  }
  if (config.eps_initial) {
    j["eps_initial"] = *config.eps_initial;
  } else {
    j["eps_initial"] = nullptr;
  }
  j["seed"] = config.seed;
  j["model"] = config.model;
  j["subsolver"] = config.subsolver;
  j["output_dir"] = config.output_dir;
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError("run config is not a structured-text object");
  }
  RunConfig config;
  try {
    if (j.contains("ell")) config.ell = j.at("ell").get<int>();
    if (j.contains("k")) config.k = j.at("k").get<int>();
    if (j.contains("c_puct")) config.c_puct = j.at("c_puct").get<double>();
    if (j.contains("t")) config.t = j.at("t").get<double>();
    if (j.contains("mix_probability")) {
      config.mix_probability = j.at("mix_probability").get<double>();
    }
    if (j.contains("commit")) {
      config.commit = commit_mode_from_name(j.at("commit").get<std::string>());
    }
    if (j.contains("use_dag")) config.use_dag = j.at("use_dag").get<bool>();
    if (j.contains("pure_literals")) {
      config.pure_literals = j.at("pure_literals").get<bool>();
    }
    if (j.contains("polarity_true_first")) {
      config.polarity_true_first = j.at("polarity_true_first").get<bool>();
    }
    if (j.contains("qd_decay") && !j.at("qd_decay").is_null()) {
      config.qd_decay = j.at("qd_decay").get<double>();
    }
    if (j.contains("eps_initial") && !j.at("eps_initial").is_null()) {
      config.eps_initial = j.at("eps_initial").get<double>();
    }
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("model")) config.model = j.at("model").get<std::string>();
    if (j.contains("subsolver")) {
      config.subsolver = j.at("subsolver").get<std::string>();
    }
    if (j.contains("output_dir")) {
      config.output_dir = j.at("output_dir").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad run config field: ") + e.what());
  }

  if (config.ell < 0) throw DataError("ell must be >= 0");
  if (config.k < 1) throw DataError("k must be >= 1");
  if (!(config.c_puct >= 0.0)) throw DataError("c_puct must be >= 0");
  if (!(config.t > 0.0)) throw DataError("t must be > 0");
  if (!(config.mix_probability >= 0.0 && config.mix_probability <= 1.0)) {
    throw DataError("mix_probability must lie in [0, 1]");
  }
  if (config.qd_decay &&
      !(*config.qd_decay > 0.0 && *config.qd_decay <= 1.0)) {
    throw DataError("qd_decay must lie in (0, 1]");
  }
  if (config.eps_initial && !(*config.eps_initial >= 0.0)) {
    throw DataError("eps_initial must be >= 0");
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open run config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json(buffer.str());
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write run config " + path);
  out << run_config_json(config) << '\n';
}

SearchConfig to_search_config(const RunConfig& config, std::uint64_t seed) {
  SearchConfig sc;
  sc.ell = config.ell;
  sc.k = config.k;
  sc.c_puct = config.c_puct;
  sc.t = config.t;
  sc.eps_initial = config.eps_initial;
  sc.commit = config.commit;
  sc.mix_probability = config.mix_probability;
  sc.use_dag = config.use_dag;
  sc.qd_decay = config.qd_decay;
  sc.simplify.pure_literals = config.pure_literals;
  sc.polarity_true_first = config.polarity_true_first;
  sc.seed = seed;
  return sc;
}

std::string bench_csv_header() {
  return "instance,policy,tree_size,decisions,subsolver_calls,wall_ms,status,"
         "error";
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
  std::string out = bench_csv_header() + "\n";
  for (const BenchRecord& r : records) {
    out += csv_quote(r.instance_id) + "," + csv_quote(r.policy) + "," +
           std::to_string(r.tree_size) + "," + std::to_string(r.decisions) +
           "," + std::to_string(r.subsolver_calls) + "," +
           format_double(r.wall_ms) + "," + (r.failed ? "failed" : "ok") +
           "," + csv_quote(r.error) + "\n";
  }
  return out;
}

std::string bench_summary_csv(const std::vector<BenchRecord>& records,
                              const std::string& baseline) {
  struct Agg {
    std::uint64_t completed = 0;
    std::uint64_t failed = 0;
    double size_sum = 0.0;
  };
  std::vector<std::string> order;
  std::map<std::string, Agg> by_policy;
  for (const BenchRecord& r : records) {
    if (by_policy.find(r.policy) == by_policy.end()) order.push_back(r.policy);
    Agg& agg = by_policy[r.policy];
    if (r.failed) {
      agg.failed += 1;
    } else {
      agg.completed += 1;
      agg.size_sum += static_cast<double>(r.tree_size);
    }
  }
  auto base_it = by_policy.find(baseline);
  if (base_it == by_policy.end() || base_it->second.completed == 0) {
    throw DataError("baseline policy '" + baseline +
                    "' has no completed records");
  }
  double base_mean = base_it->second.size_sum /
                     static_cast<double>(base_it->second.completed);

  std::string out =
      "policy,completed,failed,mean_tree_size,reduction_vs_baseline\n";
  for (const std::string& name : order) {
    const Agg& agg = by_policy[name];
    double mean = agg.completed > 0
                      ? agg.size_sum / static_cast<double>(agg.completed)
                      : std::numeric_limits<double>::quiet_NaN();
    double ratio = (agg.completed > 0 && mean > 0.0)
                       ? base_mean / mean
                       : std::numeric_limits<double>::quiet_NaN();
    out += csv_quote(name) + "," + std::to_string(agg.completed) + "," +
           std::to_string(agg.failed) + "," + format_double(mean) + "," +
           format_double(ratio) + "\n";
  }
  return out;
}

std::vector<BenchRecord> evaluate_incumbent(std::shared_ptr<PriorModel> model,
                                            const InstanceSet& instances,
                                            const RunConfig& config,
                                            const SubsolverHandle& subsolver) {
  if (!model) throw ContractError("evaluation requires a model");
  std::vector<BenchRecord> records;
  records.reserve(instances.size());
  PriorArgmaxPolicy policy(model);
  std::string name = "argmax(" + model->name() + ")";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    records.push_back(run_one_bench(instances.formulas[i],
                                    instances.meta[i].id, name, policy,
                                    config, subsolver));
  }
  return records;
}

std::vector<BenchRecord> bench(const std::vector<NamedPolicy>& policies,
                               const InstanceSet& instances,
                               const RunConfig& config,
                               const SubsolverHandle& subsolver) {
  std::vector<BenchRecord> records;
  records.reserve(policies.size() * instances.size());
  for (const NamedPolicy& named : policies) {
    if (!named.make) throw ContractError("policy factory must be callable");
    for (std::size_t i = 0; i < instances.size(); ++i) {
      std::unique_ptr<BranchingPolicy> policy =
          named.make(config.seed + static_cast<std::uint64_t>(i));
      records.push_back(run_one_bench(instances.formulas[i],
                                      instances.meta[i].id, named.name,
                                      *policy, config, subsolver));
    }
  }
  return records;
}

TrainResult train_iteration(const InstanceSet& instances,
                            const RunConfig& config,
                            std::shared_ptr<PriorModel> incumbent_prior,
                            std::shared_ptr<ValueModel> incumbent_value,
                            const SubsolverHandle& subsolver) {
  if (!incumbent_prior || !incumbent_value) {
    throw ContractError("training requires incumbent prior and value models");
  }
  KeyMode mode = config.use_dag ? KeyMode::unordered : KeyMode::ordered;

  TrainResult result;
  result.metrics.instances = instances.size();
  std::vector<bool> completed(instances.size(), false);

  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      ForestSearch fs(instances.formulas[i], incumbent_prior, incumbent_value,
                      &subsolver,
                      to_search_config(config, config.seed + i));
      EpisodeResult out = fs.run_episode();
      if (out.aborted_sat) {
        throw SatisfiableInstanceError("training instance " +
                                       instances.meta[i].id +
                                       " produced a satisfying branch");
      }
      result.examples.insert(result.examples.end(), out.examples.begin(),
                             out.examples.end());
      completed[i] = true;
    } catch (const Error&) {
      result.metrics.failures += 1;
    }
  }
  if (instances.size() > 0 &&
      result.metrics.failures * 2 > instances.size()) {
    throw DataError("training iteration failed on " +
                    std::to_string(result.metrics.failures) + " of " +
                    std::to_string(instances.size()) + " instances");
  }
  result.metrics.example_count = result.examples.size();
  result.model = std::make_shared<TableModel>(
      fit_table(result.examples, incumbent_prior, 0.0, mode));

  // Exact argmax evaluation, incumbent model vs freshly fitted model.
  PriorArgmaxPolicy before_policy(incumbent_prior);
  PriorArgmaxPolicy after_policy(result.model);
  double nan = std::numeric_limits<double>::quiet_NaN();
  result.metrics.before_sizes.assign(instances.size(), nan);
  result.metrics.after_sizes.assign(instances.size(), nan);
  double before_sum = 0.0, after_sum = 0.0;
  std::size_t measured = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!completed[i]) continue;
    double before = static_cast<double>(exact_hybrid_size(
        instances.formulas[i], before_policy, config, subsolver));
    double after = static_cast<double>(exact_hybrid_size(
        instances.formulas[i], after_policy, config, subsolver));
    result.metrics.before_sizes[i] = before;
    result.metrics.after_sizes[i] = after;
    before_sum += before;
    after_sum += after;
    measured += 1;
    if (after < before) result.metrics.improved += 1;
  }
  if (measured > 0) {
    result.metrics.mean_before = before_sum / static_cast<double>(measured);
    result.metrics.mean_after = after_sum / static_cast<double>(measured);
  }
  return result;
}

EfficiencyResult knuth_efficiency_experiment(const InstanceSet& instances,
                                             const RunConfig& config,
                                             const SubsolverHandle& subsolver,
                                             std::uint64_t budget,
                                             std::uint64_t cadence) {
  if (budget == 0) throw ContractError("budget must be positive");
  if (cadence == 0) throw ContractError("cadence must be positive");

  EfficiencyResult result;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Formula& f = instances.formulas[i];
    std::vector<EfficiencyCurve> pair;

    for (RolloutKind kind : {RolloutKind::knuth, RolloutKind::full_tree}) {
      SearchConfig sc = to_search_config(config, config.seed + i);
      sc.rollout = kind;
      ForestSearch fs(f, std::make_shared<UniformPrior>(),
                      std::make_shared<ConstantValue>(0.0), &subsolver, sc);
      if (fs.root().status() != Status::open) {
        throw ContractError("experiment instance " + instances.meta[i].id +
                            " is closed at the root");
      }

      EfficiencyCurve curve;
      curve.instance_id = instances.meta[i].id;
      curve.kind = kind;

      auto measure = [&]() {
        auto fallback = make_uniform_policy(config.seed + i);
        IncumbentPolicy incumbent(fs.store(), *fallback, config.seed + i);
        curve.points.push_back(
            {fs.expanded_nodes(),
             static_cast<double>(
                 exact_hybrid_size(f, incumbent, config, subsolver)),
             0.0});
      };

      std::uint64_t rollouts = 0;
      while (fs.expanded_nodes() < budget) {
        if (kind == RolloutKind::knuth) {
          RolloutTree tree = fs.rollout(fs.root());
          if (tree.sat_found) {
            throw SatisfiableInstanceError(
                "experiment instance " + instances.meta[i].id +
                " produced a satisfying branch");
          }
        } else {
          fs.full_tree_pass(fs.root());
        }
        rollouts += 1;
        if (rollouts % cadence == 0 || fs.expanded_nodes() >= budget) {
          measure();
        }
      }
      if (curve.points.empty()) measure();
      pair.push_back(std::move(curve));
    }

    // Per-instance min-max normalization across both variants.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const EfficiencyCurve& c : pair) {
      for (const CurvePoint& p : c.points) {
        lo = std::min(lo, p.tree_size);
        hi = std::max(hi, p.tree_size);
      }
    }
    for (EfficiencyCurve& c : pair) {
      for (CurvePoint& p : c.points) {
        p.normalized = hi > lo ? (p.tree_size - lo) / (hi - lo) : 0.0;
      }
      result.curves.push_back(std::move(c));
    }
  }
  return result;
}

std::string efficiency_csv(const EfficiencyResult& result) {
  std::string out = "instance,variant,budget,tree_size,normalized\n";
  for (const EfficiencyCurve& c : result.curves) {
    std::string variant =
        c.kind == RolloutKind::knuth ? "knuth" : "full_tree";
    for (const CurvePoint& p : c.points) {
      out += csv_quote(c.instance_id) + "," + variant + "," +
             std::to_string(p.budget) + "," + format_double(p.tree_size) +
             "," + format_double(p.normalized) + "\n";
    }
  }
  return out;
}

std::string efficiency_summary_csv(const EfficiencyResult& result,
                                   std::size_t grid) {
  if (grid < 2) throw ContractError("summary grid needs at least 2 points");
  std::string out = "variant,budget,mean,lo,hi\n";
  for (RolloutKind kind : {RolloutKind::knuth, RolloutKind::full_tree}) {
    std::vector<const EfficiencyCurve*> curves;
    std::uint64_t lo_budget = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t hi_budget = 0;
    for (const EfficiencyCurve& c : result.curves) {
      if (c.kind != kind || c.points.empty()) continue;
      curves.push_back(&c);
      lo_budget = std::min(lo_budget, c.points.front().budget);
      hi_budget = std::max(hi_budget, c.points.back().budget);
    }
    if (curves.empty()) continue;
    std::string variant =
        kind == RolloutKind::knuth ? "knuth" : "full_tree";

    for (std::size_t g = 0; g < grid; ++g) {
      double frac = static_cast<double>(g) / static_cast<double>(grid - 1);
      std::uint64_t b =
          lo_budget + static_cast<std::uint64_t>(std::llround(
                          frac * static_cast<double>(hi_budget - lo_budget)));
      // Step interpolation: the last measurement at or before b; before a
      // curve's first measurement its first value stands in.
      std::vector<double> values;
      values.reserve(curves.size());
      for (const EfficiencyCurve* c : curves) {
        double v = c->points.front().normalized;
        for (const CurvePoint& p : c->points) {
          if (p.budget > b) break;
          v = p.normalized;
        }
        values.push_back(v);
      }
      double n = static_cast<double>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= n;
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      double se = values.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
      double lo = std::max(0.0, mean - 1.96 * se);
      double hi = std::min(1.0, mean + 1.96 * se);
      out += variant + "," + std::to_string(b) + "," + format_double(mean) +
             "," + format_double(lo) + "," + format_double(hi) + "\n";
    }
  }
  return out;
}

std::optional<std::uint64_t> budget_to_reach(const EfficiencyCurve& curve,
                                             double threshold) {
  for (const CurvePoint& p : curve.points) {
    if (p.normalized <= threshold) return p.budget;
  }
  return std::nullopt;
}

}  // namespace mcfs
