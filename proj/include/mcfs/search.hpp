// Monte Carlo forest search over DPLL proof trees.
//
// Each decision point runs k rollouts. A rollout is a breadth-first pass
// over a tree of (state, action) pairs: at every open state below the
// frontier depth the tree policy proposes a variable (PUCT specialized to
// tree-size costs), both polarities are expanded, and the step policy's
// fair coin designates which child carries the single sampled path; the
// other child idles as a mirror. The path ends at a conflict or at the
// frontier depth, where the rollout policy supplies the terminal weight
// from either a value model or the subsolver, gated by the model's running
// error. Backups push the path-weighted size estimate
//
//     2^(L' - d) * T + 2^(L' - d) - 1
//
// into every path node at depth d (L' = terminal depth, T = terminal
// weight), which is exactly the sum 1 + left + right when the mirror child
// mirrors its sibling's value; mirrors therefore carry bookkeeping values
// only and no extra weight. Node statistics live in a store keyed by the
// decision set, so transpositions share one node unless the store is
// switched to sequence keys.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcfs/dpll.hpp"
#include "mcfs/model.hpp"
#include "mcfs/rng.hpp"
#include "mcfs/state.hpp"

namespace mcfs {

enum class PriorSource { model, inherited };

struct SearchNode {
  StateKey key;
  int depth = 0;
  std::vector<int> actions;  // open variables of the residual, ascending
  std::vector<int> n;        // visit counts; start at 1 per action
  std::vector<double> q;     // running mean of backed-up costs
  std::vector<std::uint32_t> backups;  // backups per action; q valid when > 0
  std::vector<double> p;     // prior over actions, sums to 1
  PriorSource prior_source = PriorSource::inherited;

  std::size_t index_of(int var) const;  // ContractError when absent
  std::uint64_t total_backups() const;
};

// Per-depth running mean of backed-up values; divides the exploration term
// so it stays on the scale of tree sizes at that depth. Optional decay
// turns the mean into an exponential moving average after the first sample.
class DepthCalibration {
 public:
  explicit DepthCalibration(std::optional<double> decay = std::nullopt);

  double value(int depth) const;  // 1.0 before the first sample
  std::uint64_t samples(int depth) const;
  void add(int depth, double v);

 private:
  struct Cell {
    double mean = 0.0;
    std::uint64_t count = 0;
  };
  std::vector<Cell> cells_;
  std::optional<double> decay_;
};

// Node store for one instance. DAG mode keys by the decision set, so two
// decision orders reaching the same assignments share statistics; tree mode
// keys by the decision sequence. Statistics persist across commitments.
class ForestStore {
 public:
  explicit ForestStore(bool use_dag = true);

  bool use_dag() const { return use_dag_; }
  StateKey key_of(const SubproblemState& s) const;

  SearchNode* find(const StateKey& k);
  const SearchNode* find(const StateKey& k) const;
  // Creates the node if absent: N = 1 per action, no backups, the given
  // prior. An existing node is returned untouched.
  SearchNode& ensure(const SubproblemState& s, std::vector<double> prior,
                     PriorSource source);
  std::size_t size() const { return nodes_.size(); }

 private:
  bool use_dag_;
  std::unordered_map<StateKey, SearchNode, StateKeyHash> nodes_;
};

enum class RolloutMark { pending, stepped, path_terminal, mirror };
enum class TerminalKind { none, conflict, frontier };

struct RolloutNode {
  SubproblemState state;
  int depth = 0;   // absolute decision depth
  int parent = -1;
  int sibling = -1;
  std::array<int, 2> children{-1, -1};  // [false-child, true-child]
  std::optional<int> action;            // stepped nodes: variable played
  RolloutMark mark = RolloutMark::pending;
  TerminalKind terminal = TerminalKind::none;
  double terminal_value = 0.0;  // conflict: 1; frontier: model or subsolver
  double backed_value = 0.0;    // path: Eq-weighted value; mirror: sibling's
  bool frontier_used_subsolver = false;

  // The step policy's coin designates one child of every expanded pair as
  // the path carrier; the designation doubles as the recorded decision the
  // sibling's call must oppose.
  enum class PathChoice { undecided, on_path, off_path };
  PathChoice choice = PathChoice::undecided;
};

struct RolloutTree {
  std::vector<RolloutNode> nodes;  // [0] is the rollout root
  std::vector<int> path;           // root..terminal indices once complete
  bool sat_found = false;

  bool complete() const { return !sat_found && !path.empty(); }
  const RolloutNode& terminal() const;
};

// Running multiplicative error of the value model, measured in log2 space
// against every subsolver result. The model serves a frontier query with
// probability 1 - min(1, eps / t).
class EpsilonTracker {
 public:
  explicit EpsilonTracker(double initial);

  double eps() const { return eps_; }
  std::uint64_t observations() const { return observations_; }
  double model_probability(double t) const;
  // Incremental mean: eps += (m - eps) / (n + 1). The first observation
  // replaces the initial value entirely.
  void observe(double m);

 private:
  double eps_;
  std::uint64_t observations_ = 0;
};

enum class CommitMode { max_count, sample_prior, mix };
enum class RolloutKind { knuth, full_tree };

struct SearchConfig {
  int ell = 4;            // frontier depth: decisions happen above it
  int k = 1000;           // rollouts per decision point
  double c_puct = 0.5;    // exploration constant
  double t = 0.5;         // value-model accuracy threshold
  std::optional<double> eps_initial;  // default t: cold start -> subsolver
  CommitMode commit = CommitMode::mix;
  double mix_probability = 0.5;  // P(sample_prior) per decision under mix
  bool use_dag = true;
  std::optional<double> qd_decay;
  SimplifyOptions simplify;
  bool polarity_true_first = false;
  RolloutKind rollout = RolloutKind::knuth;
  std::uint64_t seed = 0;
  // Testing hook: when set, selection plays this policy's choice instead of
  // the PUCT rule, turning rollouts into plain policy-driven samples.
  BranchingPolicy* alpha_override = nullptr;
};

// One committed decision, exported as the episode trace.
struct CommittedDecision {
  StateKey key;
  int depth = 0;
  int action = 0;            // variable committed
  std::vector<int> actions;  // the node's action set, index-aligned below
  std::vector<int> n;
  std::vector<double> q;     // 0 where an action was never backed up
  std::vector<double> prior;
};

std::string to_json_line(const CommittedDecision& d);
void save_trace(const std::string& path,
                const std::vector<CommittedDecision>& trace);

struct EpisodeResult {
  std::vector<CommittedDecision> trace;
  // One policy example per commitment plus one value record per open
  // frontier leaf of the committed tree.
  std::vector<TrainingExample> examples;
  bool aborted_sat = false;
  // Exact node count of the committed hybrid tree (commitments above the
  // frontier, subsolver sizes below); 0 when aborted.
  double realized_tree_size = 0.0;
  std::uint64_t rollouts = 0;
  std::uint64_t expanded_nodes = 0;
  std::uint64_t frontier_subsolver_calls = 0;  // rollout policy took the solver
  std::uint64_t frontier_value_calls = 0;      // rollout policy took the model
};

// PUCT specialized to costs: argmin over actions of Q - Q_d * U with
// U = c_puct * P * sqrt(sum N) / (1 + N). Actions without a backup are
// selected first, highest prior leading; all ties break uniformly at
// random. Returns the action index.
std::size_t tree_policy_alpha(const SearchNode& node,
                              const DepthCalibration& calib, double c_puct,
                              Rng& rng);

// Parent prior restricted to the child's action set and renormalized.
std::vector<double> share_prior(const SearchNode& parent,
                                const std::vector<int>& child_actions);

// Step decision for one dequeued rollout state. Resolves the sibling-pair
// coin on first contact, then: off-path -> none (mirror); on-path conflict
// or frontier-depth state -> none (path terminal); otherwise the proposed
// action is played. Throws ContractError on satisfied states and when a
// step is required without a proposal.
std::optional<int> step_policy_gamma(RolloutTree& tree, int node_index,
                                     std::optional<int> proposed_action,
                                     int ell, Rng& rng);

// Frontier evaluation: with probability 1 - min(1, eps/t) the value model
// answers (2^prediction); otherwise the subsolver solves the subproblem,
// the tracker absorbs the log2 error, and the exact size is returned.
// Satisfiable subproblems raise SatisfiableInstanceError. The mirror case
// (a non-stepped sibling) is served during backup instead: mirrors copy
// their sibling's value and carry no weight of their own.
double rollout_policy_pi(const SubproblemState& frontier, EpsilonTracker& eps,
                         double t, ValueModel& value_model,
                         const SubsolverHandle& subsolver,
                         const DpllOptions& opts, Rng& rng,
                         bool* used_subsolver = nullptr);

// Pushes the completed rollout's values into the store: every path node at
// depth d receives 2^(L'-d)*T + 2^(L'-d) - 1, its action's visit count and
// running mean update, and the depth calibration absorbs the value. Mirrors
// receive bookkeeping copies of their sibling's value. Returns the root's
// backed-up value. Throws ContractError on incomplete rollouts.
double backup(RolloutTree& tree, ForestStore& store, DepthCalibration& calib);

// Commitment rule: max_count plays argmax N, ties first to the lower Q and
// then uniformly at random; sample_prior draws from the model's prior
// restricted to the node's actions. `mix` must be resolved by the caller.
// Requires at least one completed backup on the node.
std::size_t commit_action(const SearchNode& node, CommitMode mode,
                          PriorModel& model, const SubproblemState& state,
                          Rng& rng);

// Search state for one instance: store, calibration, error tracker and RNG
// under one configuration. Rollouts and episodes mutate it; statistics
// persist across commitments.
class ForestSearch {
 public:
  ForestSearch(const Formula& f, std::shared_ptr<PriorModel> prior,
               std::shared_ptr<ValueModel> value,
               const SubsolverHandle* subsolver, SearchConfig config);

  // One Knuth rollout from an open state above the frontier, backed up
  // into the store. The returned tree carries marks and values for
  // inspection. A satisfiable branch marks the tree and skips the backup.
  RolloutTree rollout(const SubproblemState& from);

  // Full-tree policy evaluation from `from`: selection at every open state
  // down to the frontier, subsolver at every open frontier leaf, exact
  // subtree sizes backed up at every visited node. Returns the exact
  // hybrid subtree size. The non-sampling baseline for the rollout above.
  double full_tree_pass(const SubproblemState& from);

  // Runs the episode: per decision point k rollouts (of the configured
  // kind) and one commitment, recursing into both children sequentially
  // until conflict or the frontier, where open leaves are solved exactly
  // and recorded as value targets.
  EpisodeResult run_episode();

  const SubproblemState& root() const { return root_; }
  ForestStore& store() { return store_; }
  const ForestStore& store() const { return store_; }
  DepthCalibration& calibration() { return calib_; }
  const EpsilonTracker& epsilon() const { return eps_; }
  std::uint64_t expanded_nodes() const { return expanded_nodes_; }
  std::uint64_t frontier_subsolver_calls() const { return frontier_sub_; }
  std::uint64_t frontier_value_calls() const { return frontier_val_; }
  const SearchConfig& config() const { return config_; }
  Rng& rng() { return rng_; }

  // The node for `s`, created with an inherited prior (or the model's at
  // the instance root) if absent.
  SearchNode& ensure_node(const SubproblemState& s, const SearchNode* parent);

 private:
  std::optional<double> episode_decide(const SubproblemState& s,
                                       const SearchNode* parent,
                                       EpisodeResult& out);
  double frontier_exact(const SubproblemState& s, EpisodeResult* out);
  double full_tree_value(const SubproblemState& s, const SearchNode* parent);
  SearchNode& rollout_root_node(const SubproblemState& from);
  DpllOptions solve_options() const;

  SearchConfig config_;
  SubproblemState root_;
  std::shared_ptr<PriorModel> prior_;
  std::shared_ptr<ValueModel> value_;
  const SubsolverHandle* subsolver_;
  ForestStore store_;
  DepthCalibration calib_;
  EpsilonTracker eps_;
  Rng rng_;
  std::uint64_t expanded_nodes_ = 0;
  std::uint64_t frontier_sub_ = 0;
  std::uint64_t frontier_val_ = 0;
};

// Plays the highest-count action from the store at every state it knows,
// ties first to the lower size estimate and then randomly; states without
// backed-up statistics fall through to the fallback policy. The policy the
// store's statistics imply, used to measure incumbent strength.
class IncumbentPolicy : public BranchingPolicy {
 public:
  IncumbentPolicy(const ForestStore& store, BranchingPolicy& fallback,
                  std::uint64_t seed);
  int choose(const SubproblemState& s) override;
  std::string name() const override;

 private:
  const ForestStore* store_;
  BranchingPolicy* fallback_;
  Rng rng_;
};

}  // namespace mcfs
