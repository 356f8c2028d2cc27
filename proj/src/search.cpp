#include "mcfs/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mcfs/errors.hpp"
#include "mcfs/knuth.hpp"

namespace mcfs {

namespace {

// Shared by commit_action's max_count mode and the incumbent policy:
// argmax N, ties first to the lower mean cost (actions without a backup
// rank last), remaining ties uniformly at random.
std::size_t max_count_index(const SearchNode& node, Rng& rng) {
  int max_n = *std::max_element(node.n.begin(), node.n.end());
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < node.n.size(); ++i) {
    if (node.n[i] == max_n) ties.push_back(i);
  }
  if (ties.size() > 1) {
    auto cost = [&](std::size_t i) {
      return node.backups[i] > 0 ? node.q[i]
                                 : std::numeric_limits<double>::infinity();
    };
    double best = cost(ties[0]);
    for (std::size_t i : ties) best = std::min(best, cost(i));
    std::vector<std::size_t> cheapest;
    for (std::size_t i : ties) {
      if (cost(i) == best) cheapest.push_back(i);
    }
    ties = std::move(cheapest);
  }
  if (ties.size() == 1) return ties[0];
  return ties[static_cast<std::size_t>(rng.below(ties.size()))];
}

}  // namespace

std::size_t SearchNode::index_of(int var) const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] == var) return i;
  }
  throw ContractError("variable " + std::to_string(var) +
                      " is not an action of this node");
}

std::uint64_t SearchNode::total_backups() const {
  std::uint64_t total = 0;
  for (std::uint32_t b : backups) total += b;
  return total;
}

DepthCalibration::DepthCalibration(std::optional<double> decay)
    : decay_(decay) {
  if (decay_ && !(*decay_ > 0.0 && *decay_ <= 1.0)) {
    throw ContractError("calibration decay must be in (0, 1]");
  }
}

double DepthCalibration::value(int depth) const {
  if (depth < 0) throw ContractError("negative depth");
  std::size_t d = static_cast<std::size_t>(depth);
  if (d >= cells_.size() || cells_[d].count == 0) return 1.0;
  return cells_[d].mean;
}

std::uint64_t DepthCalibration::samples(int depth) const {
  if (depth < 0) throw ContractError("negative depth");
  std::size_t d = static_cast<std::size_t>(depth);
  return d < cells_.size() ? cells_[d].count : 0;
}

void DepthCalibration::add(int depth, double v) {
  if (depth < 0) throw ContractError("negative depth");
  std::size_t d = static_cast<std::size_t>(depth);
  if (d >= cells_.size()) cells_.resize(d + 1);
  Cell& cell = cells_[d];
  cell.count += 1;
  if (cell.count == 1) {
    cell.mean = v;
  } else if (decay_) {
    cell.mean += *decay_ * (v - cell.mean);
  } else {
    cell.mean += (v - cell.mean) / static_cast<double>(cell.count);
  }
}

ForestStore::ForestStore(bool use_dag) : use_dag_(use_dag) {}

StateKey ForestStore::key_of(const SubproblemState& s) const {
  return key_for(s, use_dag_ ? KeyMode::unordered : KeyMode::ordered);
}

SearchNode* ForestStore::find(const StateKey& k) {
  auto it = nodes_.find(k);
  return it == nodes_.end() ? nullptr : &it->second;
}

const SearchNode* ForestStore::find(const StateKey& k) const {
  auto it = nodes_.find(k);
  return it == nodes_.end() ? nullptr : &it->second;
}

SearchNode& ForestStore::ensure(const SubproblemState& s,
                                std::vector<double> prior,
                                PriorSource source) {
  StateKey key = key_of(s);
  auto it = nodes_.find(key);
  if (it != nodes_.end()) return it->second;

  SearchNode node;
  node.key = key;
  node.depth = s.decision_depth();
  node.actions = s.open_variables();
  if (node.actions.empty()) {
    throw ContractError("search nodes require at least one action");
  }
  if (prior.size() != node.actions.size()) {
    throw ContractError("prior length does not match the action set");
  }
  node.n.assign(node.actions.size(), 1);
  node.q.assign(node.actions.size(), 0.0);
  node.backups.assign(node.actions.size(), 0);
  node.p = std::move(prior);
  node.prior_source = source;
  return nodes_.emplace(key, std::move(node)).first->second;
}

const RolloutNode& RolloutTree::terminal() const {
  if (path.empty()) throw ContractError("rollout has no completed path");
  return nodes[static_cast<std::size_t>(path.back())];
}

EpsilonTracker::EpsilonTracker(double initial) : eps_(initial) {
  if (!(initial >= 0.0) || !std::isfinite(initial)) {
    throw ContractError("epsilon must start finite and >= 0");
  }
}

double EpsilonTracker::model_probability(double t) const {
  if (!(t > 0.0)) throw ContractError("accuracy threshold must be positive");
  return 1.0 - std::min(1.0, eps_ / t);
}

void EpsilonTracker::observe(double m) {
  if (!(m >= 0.0) || !std::isfinite(m)) {
    throw ContractError("error observations must be finite and >= 0");
  }
  observations_ += 1;
  eps_ += (m - eps_) / static_cast<double>(observations_);
}

std::size_t tree_policy_alpha(const SearchNode& node,
                              const DepthCalibration& calib, double c_puct,
                              Rng& rng) {
  if (node.actions.empty()) {
    throw ContractError("selection requires a non-empty action set");
  }
  if (!(c_puct >= 0.0)) {
    throw ContractError("c_puct must be >= 0");
  }

  // Actions without a backup come first, led by the prior.
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < node.actions.size(); ++i) {
    if (node.backups[i] == 0) fresh.push_back(i);
  }
  if (!fresh.empty()) {
    double best = -1.0;
    for (std::size_t i : fresh) best = std::max(best, node.p[i]);
    std::vector<std::size_t> ties;
    for (std::size_t i : fresh) {
      if (node.p[i] == best) ties.push_back(i);
    }
    if (ties.size() == 1) return ties[0];
    return ties[static_cast<std::size_t>(rng.below(ties.size()))];
  }

  double sum_n = 0.0;
  for (int n : node.n) sum_n += static_cast<double>(n);
  double sqrt_sum = std::sqrt(sum_n);
  double q_d = calib.value(node.depth);

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < node.actions.size(); ++i) {
    double u = c_puct * node.p[i] * sqrt_sum /
               (1.0 + static_cast<double>(node.n[i]));
    double score = node.q[i] - q_d * u;
    if (score < best) {
      best = score;
      ties.assign(1, i);
    } else if (score == best) {
      ties.push_back(i);
    }
  }
  if (ties.size() == 1) return ties[0];
  return ties[static_cast<std::size_t>(rng.below(ties.size()))];
}

std::vector<double> share_prior(const SearchNode& parent,
                                const std::vector<int>& child_actions) {
  return restrict_renormalize(parent.actions, parent.p, child_actions);
}

std::optional<int> step_policy_gamma(RolloutTree& tree, int node_index,
                                     std::optional<int> proposed_action,
                                     int ell, Rng& rng) {
  RolloutNode& n = tree.nodes.at(static_cast<std::size_t>(node_index));
  if (n.state.status() == Status::satisfied) {
    throw ContractError("step policy reached a satisfied state");
  }

  if (n.choice == RolloutNode::PathChoice::undecided) {
    if (n.sibling < 0) {
      n.choice = RolloutNode::PathChoice::on_path;  // the rollout root steps
    } else {
      // First contact with this sibling pair: the fair coin designates the
      // path carrier; the sibling's later call takes the opposite.
      bool here = rng.coin();
      n.choice = here ? RolloutNode::PathChoice::on_path
                      : RolloutNode::PathChoice::off_path;
      tree.nodes[static_cast<std::size_t>(n.sibling)].choice =
          here ? RolloutNode::PathChoice::off_path
               : RolloutNode::PathChoice::on_path;
    }
  }

  if (n.choice == RolloutNode::PathChoice::off_path) {
    n.mark = RolloutMark::mirror;
    return std::nullopt;
  }
  if (n.state.status() == Status::conflict) {
    n.mark = RolloutMark::path_terminal;
    n.terminal = TerminalKind::conflict;
    n.terminal_value = 1.0;
    return std::nullopt;
  }
  if (n.depth >= ell) {
    n.mark = RolloutMark::path_terminal;
    n.terminal = TerminalKind::frontier;  // value supplied by the rollout policy
    return std::nullopt;
  }
  if (!proposed_action.has_value()) {
    throw ContractError("a step is required but no action was proposed");
  }
  n.mark = RolloutMark::stepped;
  n.action = proposed_action;
  return proposed_action;
}

double rollout_policy_pi(const SubproblemState& frontier, EpsilonTracker& eps,
                         double t, ValueModel& value_model,
                         const SubsolverHandle& subsolver,
                         const DpllOptions& opts, Rng& rng,
                         bool* used_subsolver) {
  double prediction = value_model.log2_size(frontier);
  if (rng.uniform01() < eps.model_probability(t)) {
    if (used_subsolver != nullptr) *used_subsolver = false;
    return std::exp2(prediction);
  }
  SubsolverResult res = subsolver.solve(frontier, opts);
  if (res.outcome == SolveOutcome::satisfiable) {
    throw SatisfiableInstanceError("frontier subproblem is satisfiable");
  }
  double exact = static_cast<double>(res.tree_size);
  eps.observe(std::abs(std::log2(exact) - prediction));
  if (used_subsolver != nullptr) *used_subsolver = true;
  return exact;
}

double backup(RolloutTree& tree, ForestStore& store, DepthCalibration& calib) {
  if (!tree.complete()) {
    throw ContractError("backup requires a completed rollout");
  }
  const RolloutNode& term = tree.terminal();
  int terminal_depth = term.depth;
  double t_weight = term.terminal_value;

  for (std::size_t i = 0; i + 1 < tree.path.size(); ++i) {
    RolloutNode& n = tree.nodes[static_cast<std::size_t>(tree.path[i])];
    double v = weighted_update(t_weight, terminal_depth - n.depth);
    n.backed_value = v;

    SearchNode* sn = store.find(store.key_of(n.state));
    if (sn == nullptr) {
      throw ContractError("backup through a state missing from the store");
    }
    std::size_t ai = sn->index_of(n.action.value());
    sn->backups[ai] += 1;
    sn->n[ai] += 1;
    sn->q[ai] += (v - sn->q[ai]) / static_cast<double>(sn->backups[ai]);
    calib.add(n.depth, v);
  }
  tree.nodes[static_cast<std::size_t>(tree.path.back())].backed_value =
      t_weight;

  // Mirrors reflect the sibling's value so the pair sums to the parent's
  // update; they add no weight of their own.
  for (RolloutNode& n : tree.nodes) {
    if (n.mark == RolloutMark::mirror && n.sibling >= 0) {
      n.backed_value = tree.nodes[static_cast<std::size_t>(n.sibling)]
                           .backed_value;
    }
  }
  return tree.nodes[static_cast<std::size_t>(tree.path.front())].backed_value;
}

std::size_t commit_action(const SearchNode& node, CommitMode mode,
                          PriorModel& model, const SubproblemState& state,
                          Rng& rng) {
  if (node.total_backups() == 0) {
    throw ContractError("commitment requires at least one completed rollout");
  }
  switch (mode) {
    case CommitMode::max_count:
      return max_count_index(node, rng);
    case CommitMode::sample_prior: {
      std::vector<double> p = restrict_renormalize(
          state.unassigned_variables(), model.prior(state), node.actions);
      return rng.weighted_pick(p);
    }
    case CommitMode::mix:
      break;
  }
  throw ContractError("mix commitments must be resolved by the caller");
}

std::string to_json_line(const CommittedDecision& d) {
  nlohmann::json j;
  j["key"] = d.key.hex();
  j["depth"] = d.depth;
  j["action"] = d.action;
  j["actions"] = d.actions;
  j["n"] = d.n;
  j["q"] = d.q;
  j["prior"] = d.prior;
  return j.dump();
}

void save_trace(const std::string& path,
                const std::vector<CommittedDecision>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const CommittedDecision& d : trace) out << to_json_line(d) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

ForestSearch::ForestSearch(const Formula& f, std::shared_ptr<PriorModel> prior,
                           std::shared_ptr<ValueModel> value,
                           const SubsolverHandle* subsolver,
                           SearchConfig config)
    : config_(config),
      prior_(std::move(prior)),
      value_(std::move(value)),
      subsolver_(subsolver),
      store_(config.use_dag),
      calib_(config.qd_decay),
      eps_(config.eps_initial.value_or(config.t)),
      rng_(config.seed) {
  if (!prior_ || !value_ || subsolver_ == nullptr) {
    throw ContractError("search requires prior, value model and subsolver");
  }
  if (config_.ell < 0) throw ContractError("frontier depth must be >= 0");
  if (config_.k < 1) throw ContractError("rollout budget must be >= 1");
  if (!(config_.c_puct >= 0.0)) throw ContractError("c_puct must be >= 0");
  if (!(config_.t > 0.0)) {
    throw ContractError("accuracy threshold must be positive");
  }
  if (!(config_.mix_probability >= 0.0 && config_.mix_probability <= 1.0)) {
    throw ContractError("mix probability must lie in [0, 1]");
  }
  root_ = simplify(SubproblemState::from_formula(f), config_.simplify);
}

DpllOptions ForestSearch::solve_options() const {
  DpllOptions opts;
  opts.simplify = config_.simplify;
  opts.polarity_true_first = config_.polarity_true_first;
  return opts;
}

SearchNode& ForestSearch::ensure_node(const SubproblemState& s,
                                      const SearchNode* parent) {
  if (SearchNode* existing = store_.find(store_.key_of(s))) return *existing;
  if (s.status() != Status::open) {
    throw ContractError("search nodes exist for open states only");
  }
  std::vector<int> actions = s.open_variables();
  if (parent != nullptr) {
    return store_.ensure(s, share_prior(*parent, actions),
                         PriorSource::inherited);
  }
  // Forest root: the single model query; descendants inherit.
  std::vector<double> p = restrict_renormalize(s.unassigned_variables(),
                                               prior_->prior(s), actions);
  return store_.ensure(s, std::move(p), PriorSource::model);
}

SearchNode& ForestSearch::rollout_root_node(const SubproblemState& from) {
  if (from.status() != Status::open) {
    throw ContractError("rollouts start at open states");
  }
  if (from.decision_depth() >= config_.ell) {
    throw ContractError("rollouts start above the frontier depth");
  }
  if (SearchNode* existing = store_.find(store_.key_of(from))) {
    return *existing;
  }
  if (from.decision_depth() == 0) return ensure_node(from, nullptr);
  throw ContractError(
      "rollout from an unseen interior state; ensure its node first");
}

RolloutTree ForestSearch::rollout(const SubproblemState& from) {
  SearchNode& root_node = rollout_root_node(from);
  (void)root_node;

  RolloutTree tree;
  {
    RolloutNode root;
    root.state = from;
    root.depth = from.decision_depth();
    root.choice = RolloutNode::PathChoice::on_path;
    tree.nodes.push_back(std::move(root));
  }
  std::deque<int> queue{0};

  while (!queue.empty()) {
    int idx = queue.front();
    queue.pop_front();

    Status status = tree.nodes[static_cast<std::size_t>(idx)].state.status();
    if (status == Status::satisfied) {
      tree.sat_found = true;
      break;
    }

    // Selection runs before the step decision; mirrors simply waste the
    // proposal.
    std::optional<int> proposed;
    if (status == Status::open &&
        tree.nodes[static_cast<std::size_t>(idx)].depth < config_.ell) {
      const RolloutNode& cur = tree.nodes[static_cast<std::size_t>(idx)];
      const SearchNode* parent_sn = nullptr;
      if (cur.parent >= 0) {
        parent_sn = store_.find(store_.key_of(
            tree.nodes[static_cast<std::size_t>(cur.parent)].state));
        if (parent_sn == nullptr) {
          throw ContractError("rollout parent missing from the store");
        }
      }
      SearchNode& sn = ensure_node(cur.state, parent_sn);
      std::size_t ai =
          config_.alpha_override != nullptr
              ? sn.index_of(config_.alpha_override->choose(cur.state))
              : tree_policy_alpha(sn, calib_, config_.c_puct, rng_);
      proposed = sn.actions[ai];
    }

    std::optional<int> played =
        step_policy_gamma(tree, idx, proposed, config_.ell, rng_);

    if (played.has_value()) {
      int var = *played;
      const SubproblemState& cur_state =
          tree.nodes[static_cast<std::size_t>(idx)].state;
      SubproblemState child_f =
          transition(cur_state, Lit::make(var, false), config_.simplify);
      SubproblemState child_t =
          transition(cur_state, Lit::make(var, true), config_.simplify);
      expanded_nodes_ += 2;

      int base = static_cast<int>(tree.nodes.size());
      for (int polarity = 0; polarity < 2; ++polarity) {
        RolloutNode child;
        child.state = polarity == 0 ? std::move(child_f) : std::move(child_t);
        child.depth = tree.nodes[static_cast<std::size_t>(idx)].depth + 1;
        child.parent = idx;
        tree.nodes.push_back(std::move(child));
      }
      tree.nodes[static_cast<std::size_t>(base)].sibling = base + 1;
      tree.nodes[static_cast<std::size_t>(base + 1)].sibling = base;
      tree.nodes[static_cast<std::size_t>(idx)].children = {base, base + 1};
      queue.push_back(base);
      queue.push_back(base + 1);
      continue;
    }

    RolloutNode& n = tree.nodes[static_cast<std::size_t>(idx)];
    if (n.mark == RolloutMark::path_terminal &&
        n.terminal == TerminalKind::frontier) {
      bool used_subsolver = false;
      try {
        n.terminal_value =
            rollout_policy_pi(n.state, eps_, config_.t, *value_, *subsolver_,
                              solve_options(), rng_, &used_subsolver);
      } catch (const SatisfiableInstanceError&) {
        tree.sat_found = true;
        break;
      }
      n.frontier_used_subsolver = used_subsolver;
      if (used_subsolver) {
        frontier_sub_ += 1;
        expanded_nodes_ += static_cast<std::uint64_t>(n.terminal_value);
      } else {
        frontier_val_ += 1;
      }
    }
  }

  if (tree.sat_found) return tree;

  // The stepped nodes trace the single sampled path; walk it out.
  int cur = 0;
  tree.path.push_back(cur);
  while (tree.nodes[static_cast<std::size_t>(cur)].mark ==
         RolloutMark::stepped) {
    const auto& children = tree.nodes[static_cast<std::size_t>(cur)].children;
    int next = -1;
    for (int c : children) {
      if (c >= 0 && tree.nodes[static_cast<std::size_t>(c)].choice ==
                        RolloutNode::PathChoice::on_path) {
        next = c;
      }
    }
    if (next < 0) throw ContractError("stepped node lost its path child");
    tree.path.push_back(next);
    cur = next;
  }
  if (tree.nodes[static_cast<std::size_t>(cur)].mark !=
      RolloutMark::path_terminal) {
    throw ContractError("rollout path did not end in a terminal");
  }

  backup(tree, store_, calib_);
  return tree;
}

double ForestSearch::full_tree_value(const SubproblemState& s,
                                     const SearchNode* parent) {
  Status status = s.status();
  if (status == Status::satisfied) {
    throw SatisfiableInstanceError("satisfiable branch in policy evaluation");
  }
  if (status == Status::conflict) return 1.0;
  if (s.decision_depth() >= config_.ell) {
    SubsolverResult res = subsolver_->solve(s, solve_options());
    if (res.outcome == SolveOutcome::satisfiable) {
      throw SatisfiableInstanceError("frontier subproblem is satisfiable");
    }
    expanded_nodes_ += res.tree_size;
    return static_cast<double>(res.tree_size);
  }

  SearchNode& sn = ensure_node(s, parent);
  std::size_t ai = config_.alpha_override != nullptr
                       ? sn.index_of(config_.alpha_override->choose(s))
                       : tree_policy_alpha(sn, calib_, config_.c_puct, rng_);
  int var = sn.actions[ai];
  expanded_nodes_ += 2;
  double value =
      1.0 +
      full_tree_value(transition(s, Lit::make(var, false), config_.simplify),
                      &sn) +
      full_tree_value(transition(s, Lit::make(var, true), config_.simplify),
                      &sn);
  sn.backups[ai] += 1;
  sn.n[ai] += 1;
  sn.q[ai] += (value - sn.q[ai]) / static_cast<double>(sn.backups[ai]);
  calib_.add(sn.depth, value);
  return value;
}

double ForestSearch::full_tree_pass(const SubproblemState& from) {
  (void)rollout_root_node(from);  // same entry contract as rollout()
  return full_tree_value(from, nullptr);
}

double ForestSearch::frontier_exact(const SubproblemState& s,
                                    EpisodeResult* out) {
  SubsolverResult res = subsolver_->solve(s, solve_options());
  if (res.outcome == SolveOutcome::satisfiable) {
    throw SatisfiableInstanceError("frontier subproblem is satisfiable");
  }
  expanded_nodes_ += res.tree_size;
  if (out != nullptr) {
    TrainingExample record;
    record.key = store_.key_of(s);
    record.log2_size = std::log2(static_cast<double>(res.tree_size));
    out->examples.push_back(std::move(record));
  }
  return static_cast<double>(res.tree_size);
}

std::optional<double> ForestSearch::episode_decide(const SubproblemState& s,
                                                   const SearchNode* parent,
                                                   EpisodeResult& out) {
  Status status = s.status();
  if (status == Status::satisfied) {
    out.aborted_sat = true;
    return std::nullopt;
  }
  if (status == Status::conflict) return 1.0;
  if (s.decision_depth() >= config_.ell) {
    try {
      return frontier_exact(s, &out);
    } catch (const SatisfiableInstanceError&) {
      out.aborted_sat = true;
      return std::nullopt;
    }
  }

  SearchNode& sn = ensure_node(s, parent);
  for (int r = 0; r < config_.k; ++r) {
    if (config_.rollout == RolloutKind::knuth) {
      RolloutTree tree = rollout(s);
      out.rollouts += 1;
      if (tree.sat_found) {
        out.aborted_sat = true;
        return std::nullopt;
      }
    } else {
      try {
        full_tree_pass(s);
        out.rollouts += 1;
      } catch (const SatisfiableInstanceError&) {
        out.aborted_sat = true;
        return std::nullopt;
      }
    }
  }

  CommitMode mode = config_.commit;
  if (mode == CommitMode::mix) {
    mode = rng_.uniform01() < config_.mix_probability
               ? CommitMode::sample_prior
               : CommitMode::max_count;
  }
  std::size_t ai = commit_action(sn, mode, *prior_, s, rng_);
  int var = sn.actions[ai];

  CommittedDecision decision;
  decision.key = sn.key;
  decision.depth = sn.depth;
  decision.action = var;
  decision.actions = sn.actions;
  decision.n = sn.n;
  decision.q.resize(sn.actions.size(), 0.0);
  for (std::size_t i = 0; i < sn.actions.size(); ++i) {
    if (sn.backups[i] > 0) decision.q[i] = sn.q[i];
  }
  decision.prior = sn.p;
  out.trace.push_back(decision);

  TrainingExample example;
  example.key = sn.key;
  example.actions = sn.actions;
  double total_n = 0.0;
  for (int n : sn.n) total_n += static_cast<double>(n);
  example.counts.reserve(sn.n.size());
  for (int n : sn.n) {
    example.counts.push_back(static_cast<double>(n) / total_n);
  }
  example.q = decision.q;
  out.examples.push_back(std::move(example));

  bool first_polarity = config_.polarity_true_first;
  SubproblemState first =
      transition(s, Lit::make(var, first_polarity), config_.simplify);
  SubproblemState second =
      transition(s, Lit::make(var, !first_polarity), config_.simplify);
  expanded_nodes_ += 2;

  std::optional<double> left = episode_decide(first, &sn, out);
  if (!left.has_value()) return std::nullopt;
  std::optional<double> right = episode_decide(second, &sn, out);
  if (!right.has_value()) return std::nullopt;
  return 1.0 + *left + *right;
}

EpisodeResult ForestSearch::run_episode() {
  EpisodeResult out;
  std::uint64_t expanded_before = expanded_nodes_;
  std::uint64_t sub_before = frontier_sub_;
  std::uint64_t val_before = frontier_val_;

  std::optional<double> size = episode_decide(root_, nullptr, out);
  if (size.has_value()) out.realized_tree_size = *size;

  out.expanded_nodes = expanded_nodes_ - expanded_before;
  out.frontier_subsolver_calls = frontier_sub_ - sub_before;
  out.frontier_value_calls = frontier_val_ - val_before;
  return out;
}

IncumbentPolicy::IncumbentPolicy(const ForestStore& store,
                                 BranchingPolicy& fallback, std::uint64_t seed)
    : store_(&store), fallback_(&fallback), rng_(seed) {}

int IncumbentPolicy::choose(const SubproblemState& s) {
  if (s.status() != Status::open) {
    throw ContractError("branching policy queried on a non-open state");
  }
  const SearchNode* node = store_->find(store_->key_of(s));
  if (node == nullptr || node->total_backups() == 0) {
    return fallback_->choose(s);
  }
  return node->actions[max_count_index(*node, rng_)];
}

std::string IncumbentPolicy::name() const {
  return "incumbent(" + fallback_->name() + ")";
}

}  // namespace mcfs
