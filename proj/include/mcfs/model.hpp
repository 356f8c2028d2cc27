// Prior and value models: the pluggable layer the search engine queries for
// branching priors P(s, a) and for log2 subtree-size predictions.
//
// Priors are distributions over the state's unassigned variables in
// ascending variable order (SubproblemState::unassigned_variables). The
// engine restricts them to its per-node action set with
// restrict_renormalize. At desk scale the learned component is a TableModel
// fitted to search statistics; external learned models plug in through the
// line-protocol bridge (bridge.hpp) behind the same two interfaces.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcfs/policy.hpp"
#include "mcfs/state.hpp"

namespace mcfs {

// Distribution over unassigned variables; entries sum to 1 and every entry
// is >= 0. Deterministic given the state.
class PriorModel {
 public:
  virtual ~PriorModel() = default;
  virtual std::vector<double> prior(const SubproblemState& s) = 0;
  virtual std::string name() const = 0;
};

// Predicted log2 subtree size; finite and >= 0.
class ValueModel {
 public:
  virtual ~ValueModel() = default;
  virtual double log2_size(const SubproblemState& s) = 0;
  virtual std::string name() const = 0;
};

// Equal mass on each unassigned variable. Throws ContractError when the
// state has none.
std::vector<double> uniform_prior(const SubproblemState& s);

// Two-sided clause-length scores (jw_scores over the residual) normalized
// to a distribution. All-zero scores, e.g. an empty residual, fall back to
// uniform. Throws ContractError when no variable is unassigned.
std::vector<double> jw_prior(const SubproblemState& s);

class UniformPrior : public PriorModel {
 public:
  std::vector<double> prior(const SubproblemState& s) override;
  std::string name() const override { return "uniform"; }
};

class JwPrior : public PriorModel {
 public:
  std::vector<double> prior(const SubproblemState& s) override;
  std::string name() const override { return "jw"; }
};

// Fixed prediction. The default of 0 (one node) is deliberately pessimal:
// a cold model's large observed error drives the rollout policy's mixing
// weight toward the subsolver.
class ConstantValue : public ValueModel {
 public:
  explicit ConstantValue(double log2_size = 0.0);
  double log2_size(const SubproblemState&) override { return value_; }
  std::string name() const override { return "constant"; }

 private:
  double value_;
};

// Restricts a distribution given over `domain` to `subset`, preserving
// subset order, and renormalizes to sum 1. Zero restricted mass falls back
// to uniform over the subset. Throws ContractError when the subset is empty
// or contains a variable missing from the domain.
std::vector<double> restrict_renormalize(const std::vector<int>& domain,
                                         const std::vector<double>& mass,
                                         const std::vector<int>& subset);

// One training record. Committed decisions carry visit counts normalized to
// a distribution plus mean cost estimates, both index-aligned with
// `actions` (the node's action set, ascending). Frontier value records
// carry only the exact subsolver log2 tree size; their vectors are empty.
// Actions never backed up during search carry q of 0 (real estimates are
// always >= 1).
struct TrainingExample {
  StateKey key;
  std::vector<int> actions;
  std::vector<double> counts;
  std::vector<double> q;
  std::optional<double> log2_size;

  friend bool operator==(const TrainingExample& a, const TrainingExample& b);
};

// One JSON object per line; parse errors carry the offending line number.
std::string to_json_line(const TrainingExample& e);
TrainingExample training_example_from_json(const std::string& line);
void save_training_examples(const std::string& path,
                            const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> load_training_examples(const std::string& path);

// Whether table lookups key states by the sorted decision set (shared
// across transpositions) or by the decision sequence.
enum class KeyMode { unordered, ordered };

StateKey key_for(const SubproblemState& s, KeyMode mode);

struct TableEntry {
  std::vector<int> actions;
  std::vector<double> counts;  // mean normalized counts; sums to 1
  std::vector<double> q;       // mean cost estimate per action
  double log2_size = 0.0;      // mean over value records
  std::size_t policy_observations = 0;
  std::size_t value_observations = 0;
};

// Tabular stand-in for a learned model: per-key mean statistics fitted from
// training examples. Unseen keys defer to the fallback prior and to a
// configured default log2 size (0 unless overridden, so that a cold table
// routes rollout traffic to the subsolver; see ConstantValue).
class TableModel : public PriorModel, public ValueModel {
 public:
  explicit TableModel(std::shared_ptr<PriorModel> fallback,
                      double default_log2_size = 0.0,
                      KeyMode key_mode = KeyMode::unordered);

  std::vector<double> prior(const SubproblemState& s) override;
  double log2_size(const SubproblemState& s) override;
  std::string name() const override;

  bool contains(const StateKey& k) const;
  const TableEntry* find(const StateKey& k) const;
  std::size_t size() const { return table_.size(); }
  KeyMode key_mode() const { return key_mode_; }
  double default_log2_size() const { return default_log2_size_; }
  const PriorModel& fallback() const { return *fallback_; }

  // One merged example per key; fitting a fresh table on the export
  // reproduces every stored statistic.
  std::vector<TrainingExample> export_examples() const;

 private:
  friend TableModel fit_table(const std::vector<TrainingExample>&,
                              std::shared_ptr<PriorModel>, double, KeyMode);

  std::unordered_map<StateKey, TableEntry, StateKeyHash> table_;
  std::shared_ptr<PriorModel> fallback_;
  double default_log2_size_;
  KeyMode key_mode_;
};

// Merges examples key by key: count and q vectors averaged over the
// examples that carry them (duplicate keys weight the mean by their
// multiplicity), log2 sizes averaged over value records. Throws DataError,
// naming the key, when examples for one key disagree on action sets or
// vector lengths, or when a count vector does not sum to 1.
TableModel fit_table(const std::vector<TrainingExample>& examples,
                     std::shared_ptr<PriorModel> fallback,
                     double default_log2_size = 0.0,
                     KeyMode key_mode = KeyMode::unordered);

// Stored mean log2 size for known keys, the configured default otherwise.
double table_value(const TableModel& m, const SubproblemState& s);

// Branching policy that plays the model's highest-prior variable among the
// residual's variables; ties break to the lowest variable.
class PriorArgmaxPolicy : public BranchingPolicy {
 public:
  explicit PriorArgmaxPolicy(std::shared_ptr<PriorModel> model);
  int choose(const SubproblemState& s) override;
  std::string name() const override;

 private:
  std::shared_ptr<PriorModel> model_;
};

}  // namespace mcfs
