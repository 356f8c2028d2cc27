// Training and evaluation harness: verified instance sets, the policy
// improvement iteration (search -> examples -> tabular fit -> evaluate),
// baseline benchmarking, and the sampled-rollout vs full-tree efficiency
// experiment. Every operation is a deterministic function of its inputs and
// the seeds carried in RunConfig.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcfs/cnf.hpp"
#include "mcfs/dpll.hpp"
#include "mcfs/model.hpp"
#include "mcfs/search.hpp"

namespace mcfs {

struct InstanceMeta {
  std::string id;         // stable identifier, e.g. "v10-s42"
  std::uint64_t seed = 0; // generator seed that produced the instance
  int variables = 0;
};

// Named instances, all verified unsatisfiable before use.
struct InstanceSet {
  std::vector<Formula> formulas;
  std::vector<InstanceMeta> meta;
  double rejection_rate = 0.0;  // satisfiable fraction seen while generating
  std::uint64_t attempts = 0;   // total candidates drawn

  std::size_t size() const { return formulas.size(); }
};

// Generates phase-transition 3-SAT instances and keeps the unsatisfiable
// ones (verified exactly) until `count` are collected. Candidate i uses
// generator seed `seed + i`. Throws DataError with diagnostics when
// max_attempts candidates were not enough; if `partial` is given it
// receives the instances collected so far.
InstanceSet make_training_set(int v, int count, std::uint64_t seed,
                              std::uint64_t max_attempts = 0,  // 0: 200*count
                              InstanceSet* partial = nullptr);

// One experiment configuration; serializes to and from a structured-text
// config round-trip stably.
struct RunConfig {
  int ell = 4;
  int k = 1000;
  double c_puct = 0.5;
  double t = 0.5;
  double mix_probability = 0.5;
  CommitMode commit = CommitMode::mix;
  bool use_dag = true;
  bool pure_literals = true;
  bool polarity_true_first = false;
  std::optional<double> qd_decay;
  std::optional<double> eps_initial;
  std::uint64_t seed = 0;
  std::string model = "uniform";       // uniform | jw | table file path
  std::string subsolver = "internal";  // internal | external command
  std::string output_dir;

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

std::string run_config_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);  // DataError
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

// The engine configuration this run configures; the per-instance seed is
// mixed in by the harness.
SearchConfig to_search_config(const RunConfig& config, std::uint64_t seed);

// One policy evaluation on one instance.
struct BenchRecord {
  std::string instance_id;
  std::string policy;
  std::uint64_t tree_size = 0;
  std::uint64_t decisions = 0;  // branching decisions above the frontier
  std::uint64_t subsolver_calls = 0;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

// Fixed CSV header shared by all record exports.
std::string bench_csv_header();
std::string bench_csv(const std::vector<BenchRecord>& records);
// Per-policy means over completed records plus the size-reduction ratio of
// the designated baseline's mean against each policy's mean (baseline vs
// itself is 1). DataError if the baseline has no completed records.
std::string bench_summary_csv(const std::vector<BenchRecord>& records,
                              const std::string& baseline);

// Runs hybrid search (argmax of the model's prior above depth ell, the
// subsolver below) on every instance and records exact tree sizes.
std::vector<BenchRecord> evaluate_incumbent(std::shared_ptr<PriorModel> model,
                                            const InstanceSet& instances,
                                            const RunConfig& config,
                                            const SubsolverHandle& subsolver);

// A named branching-policy factory (fresh policy per instance so seeded
// policies restart deterministically).
struct NamedPolicy {
  std::string name;
  std::function<std::unique_ptr<BranchingPolicy>(std::uint64_t seed)> make;
};

// Full hybrid-solve benchmark of each policy on each instance. Per-cell
// failures are recorded on the record, not thrown.
std::vector<BenchRecord> bench(const std::vector<NamedPolicy>& policies,
                               const InstanceSet& instances,
                               const RunConfig& config,
                               const SubsolverHandle& subsolver);

struct TrainMetrics {
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t example_count = 0;
  // Mean exact tree size of the argmax hybrid policy, before (incumbent
  // model) and after (newly fitted model), over instances that completed.
  double mean_before = 0.0;
  double mean_after = 0.0;
  std::vector<double> before_sizes;  // aligned with instances; NaN on failure
  std::vector<double> after_sizes;
  std::size_t improved = 0;  // instances with after < before, strictly
};

struct TrainResult {
  std::shared_ptr<TableModel> model;
  std::vector<TrainingExample> examples;
  TrainMetrics metrics;
};

// One policy-improvement iteration: per instance, one search episode with
// the incumbent models supplies training examples; a tabular model is
// fitted on the pool (falling back to the incumbent prior on unseen keys);
// argmax evaluation before/after measures the improvement. Per-instance
// failures are recorded and skipped; more than 50% failures aborts with
// DataError. Instance i runs with seed config.seed + i.
TrainResult train_iteration(const InstanceSet& instances,
                            const RunConfig& config,
                            std::shared_ptr<PriorModel> incumbent_prior,
                            std::shared_ptr<ValueModel> incumbent_value,
                            const SubsolverHandle& subsolver);

// Sampled-rollout vs full-tree efficiency experiment.
struct CurvePoint {
  std::uint64_t budget = 0;      // cumulative expanded nodes so far
  double tree_size = 0.0;        // incumbent hybrid tree size at this budget
  double normalized = 0.0;       // per-instance min-max over both variants
};

struct EfficiencyCurve {
  std::string instance_id;
  RolloutKind kind = RolloutKind::knuth;
  std::vector<CurvePoint> points;
};

struct EfficiencyResult {
  std::vector<EfficiencyCurve> curves;  // two per instance
};

// For each instance, runs both rollout variants from the instance root
// under one expanded-node budget, measuring the incumbent policy's exact
// hybrid tree size every `cadence` rollouts. Curve values are min-max
// normalized per instance across both variants' measurements.
EfficiencyResult knuth_efficiency_experiment(const InstanceSet& instances,
                                             const RunConfig& config,
                                             const SubsolverHandle& subsolver,
                                             std::uint64_t budget,
                                             std::uint64_t cadence);

std::string efficiency_csv(const EfficiencyResult& result);

// Aggregates each variant's normalized curves onto a common budget grid
// (step interpolation, `grid` points) and reports the cross-instance mean
// with a 95% confidence band, clamped to [0, 1].
std::string efficiency_summary_csv(const EfficiencyResult& result,
                                   std::size_t grid = 20);

// First budget at which the curve's normalized size reaches `threshold` or
// below; nullopt when it never does.
std::optional<std::uint64_t> budget_to_reach(const EfficiencyCurve& curve,
                                             double threshold);

}  // namespace mcfs
