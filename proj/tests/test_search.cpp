#include "mcfs/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unistd.h>

#include <json.hpp>

#include "doctest.h"
#include "helpers.hpp"
#include "mcfs/errors.hpp"
#include "mcfs/model.hpp"
#include "mcfs/oracle.hpp"
#include "mcfs/policy.hpp"
#include "mcfs/rng.hpp"

using namespace mcfs;
using namespace mcfs_test;

namespace {

SubproblemState root_state(const Formula& f, SimplifyOptions opts = {}) {
  return simplify(SubproblemState::from_formula(f), opts);
}

// Prior model that answers a fixed weight vector (over the state's
// unassigned variables) and counts how often it is asked.
struct FixedPrior final : PriorModel {
  std::vector<double> weights;
  int calls = 0;

  explicit FixedPrior(std::vector<double> w) : weights(std::move(w)) {}
  std::vector<double> prior(const SubproblemState&) override {
    ++calls;
    return weights;
  }
  std::string name() const override { return "fixed"; }
};

// Uniform prior that counts queries; used to pin down when the engine asks
// the model at all.
struct CountingUniformPrior final : PriorModel {
  int calls = 0;
  std::vector<double> prior(const SubproblemState& s) override {
    ++calls;
    return uniform_prior(s);
  }
  std::string name() const override { return "counting-uniform"; }
};

// Branching policy answering from a key -> variable map; used to replay an
// episode trace through the reference solver.
struct TraceLookupPolicy final : BranchingPolicy {
  std::map<std::string, int> by_key;
  KeyMode mode = KeyMode::unordered;

  int choose(const SubproblemState& s) override {
    auto it = by_key.find(key_for(s, mode).hex());
    REQUIRE(it != by_key.end());
    return it->second;
  }
  std::string name() const override { return "trace-lookup"; }
};

SearchNode make_node(std::vector<int> actions, std::vector<int> n,
                     std::vector<double> q, std::vector<std::uint32_t> backups,
                     std::vector<double> p, int depth = 0) {
  SearchNode node;
  node.actions = std::move(actions);
  node.n = std::move(n);
  node.q = std::move(q);
  node.backups = std::move(backups);
  node.p = std::move(p);
  node.depth = depth;
  return node;
}

// Builds a complete single-path rollout tree by walking `vars` from the
// root state (false branch carries the path, true branch mirrors) and
// terminating the path with the given kind and value. Stepped states are
// ensured in the store with uniform priors so backup can find them.
RolloutTree make_chain(ForestStore& store, const SubproblemState& root,
                       const std::vector<int>& vars, TerminalKind kind,
                       double terminal_value, SimplifyOptions opts = {}) {
  RolloutTree tree;
  RolloutNode top;
  top.state = root;
  top.depth = root.decision_depth();
  top.choice = RolloutNode::PathChoice::on_path;
  tree.nodes.push_back(std::move(top));
  tree.path.push_back(0);

  int cur = 0;
  for (int var : vars) {
    SubproblemState& cur_state = tree.nodes[static_cast<std::size_t>(cur)].state;
    store.ensure(cur_state, uniform_prior(cur_state), PriorSource::inherited);
    tree.nodes[static_cast<std::size_t>(cur)].mark = RolloutMark::stepped;
    tree.nodes[static_cast<std::size_t>(cur)].action = var;

    SubproblemState on = transition(cur_state, Lit::make(var, false), opts);
    SubproblemState off = transition(cur_state, Lit::make(var, true), opts);
    int base = static_cast<int>(tree.nodes.size());
    RolloutNode a;
    a.state = std::move(on);
    a.depth = tree.nodes[static_cast<std::size_t>(cur)].depth + 1;
    a.parent = cur;
    a.sibling = base + 1;
    a.choice = RolloutNode::PathChoice::on_path;
    RolloutNode b;
    b.state = std::move(off);
    b.depth = a.depth;
    b.parent = cur;
    b.sibling = base;
    b.choice = RolloutNode::PathChoice::off_path;
    b.mark = RolloutMark::mirror;
    tree.nodes.push_back(std::move(a));
    tree.nodes.push_back(std::move(b));
    tree.nodes[static_cast<std::size_t>(cur)].children = {base, base + 1};
    tree.path.push_back(base);
    cur = base;
  }
  RolloutNode& last = tree.nodes[static_cast<std::size_t>(cur)];
  last.mark = RolloutMark::path_terminal;
  last.terminal = kind;
  last.terminal_value = terminal_value;
  return tree;
}

std::string temp_path(const std::string& stem) {
  const char* dir = std::getenv("TMPDIR");
  return std::string(dir != nullptr ? dir : "/tmp") + "/" + stem + "." +
         std::to_string(getpid());
}

}  // namespace

TEST_CASE("depth calibration keeps a running mean per depth") {
  DepthCalibration calib;
  CHECK(calib.value(0) == 1.0);
  CHECK(calib.value(7) == 1.0);
  CHECK(calib.samples(3) == 0);

  calib.add(0, 10.0);
  CHECK(calib.value(0) == 10.0);
  calib.add(0, 20.0);
  CHECK(calib.value(0) == 15.0);
  CHECK(calib.samples(0) == 2);
  CHECK(calib.value(1) == 1.0);

  calib.add(2, 4.0);
  CHECK(calib.value(2) == 4.0);
  CHECK(calib.samples(1) == 0);

  CHECK_THROWS_AS(calib.value(-1), ContractError);
  CHECK_THROWS_AS(calib.add(-1, 1.0), ContractError);
}

TEST_CASE("depth calibration decay turns the mean into a moving average") {
  DepthCalibration calib(0.5);
  calib.add(0, 10.0);
  CHECK(calib.value(0) == 10.0);  // first sample replaces the default
  calib.add(0, 20.0);
  CHECK(calib.value(0) == 15.0);
  calib.add(0, 0.0);
  CHECK(calib.value(0) == 7.5);

  CHECK_THROWS_AS(DepthCalibration(0.0), ContractError);
  CHECK_THROWS_AS(DepthCalibration(1.5), ContractError);
  CHECK_NOTHROW(DepthCalibration(1.0));
}

TEST_CASE("epsilon tracker averages errors and gates the model") {
  EpsilonTracker eps(0.5);
  CHECK(eps.eps() == 0.5);
  CHECK(eps.observations() == 0);

  // eps == t: the model never answers. eps == 0: it always does.
  CHECK(eps.model_probability(0.5) == 0.0);

  eps.observe(0.3);  // first observation replaces the initial value
  CHECK(eps.eps() == doctest::Approx(0.3));
  CHECK(eps.observations() == 1);
  eps.observe(0.5);
  CHECK(eps.eps() == doctest::Approx(0.4));

  EpsilonTracker quarter(0.25);
  CHECK(quarter.model_probability(0.5) == doctest::Approx(0.5));
  EpsilonTracker zero(0.0);
  CHECK(zero.model_probability(0.5) == 1.0);
  EpsilonTracker huge(4.0);
  CHECK(huge.model_probability(0.5) == 0.0);

  CHECK_THROWS_AS(EpsilonTracker(-0.1), ContractError);
  CHECK_THROWS_AS(eps.observe(-1.0), ContractError);
  CHECK_THROWS_AS(eps.model_probability(0.0), ContractError);
}

TEST_CASE("selection prefers the strongest exploration bonus at equal cost") {
  // Two actions, equal cost 10, priors 0.8 / 0.2, one visit each,
  // calibration 10, c = 0.5: bonuses 10*0.5*p*sqrt(2)/2 differ, so the
  // high-prior action wins.
  SearchNode node = make_node({1, 2}, {1, 1}, {10.0, 10.0}, {1, 1}, {0.8, 0.2});
  DepthCalibration calib;
  calib.add(0, 10.0);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    CHECK(tree_policy_alpha(node, calib, 0.5, rng) == 0);
  }
}

TEST_CASE("selection trades cost against the visit-count bonus") {
  // Costs 8 / 12, visits 3 / 1, priors 0.5 / 0.5, calibration 10, c = 0.5:
  // bonuses 0.125 and 0.25, scores 8 - 1.25 = 6.75 and 12 - 2.5 = 9.5.
  SearchNode node = make_node({4, 9}, {3, 1}, {8.0, 12.0}, {3, 1}, {0.5, 0.5});
  DepthCalibration calib;
  calib.add(0, 10.0);
  Rng rng(2);
  CHECK(tree_policy_alpha(node, calib, 0.5, rng) == 0);
}

TEST_CASE("selection with zero exploration is a pure cost argmin") {
  SearchNode node = make_node({1, 2}, {1, 6}, {5.0, 3.0}, {1, 6}, {0.9, 0.1});
  DepthCalibration calib;
  calib.add(0, 100.0);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    CHECK(tree_policy_alpha(node, calib, 0.0, rng) == 1);
  }
}

TEST_CASE("selection visits unvisited actions first, led by the prior") {
  SearchNode node = make_node({1, 2, 3}, {5, 1, 1}, {2.0, 0.0, 0.0}, {4, 0, 0},
                              {0.9, 0.06, 0.04});
  DepthCalibration calib;
  Rng rng(4);
  // Indices 1 and 2 have no backups; index 1 has the higher prior.
  for (int i = 0; i < 10; ++i) {
    CHECK(tree_policy_alpha(node, calib, 0.5, rng) == 1);
  }

  SearchNode tied = make_node({1, 2, 3}, {5, 1, 1}, {2.0, 0.0, 0.0}, {4, 0, 0},
                              {0.8, 0.1, 0.1});
  std::set<std::size_t> seen;
  for (int i = 0; i < 200; ++i) {
    seen.insert(tree_policy_alpha(tied, calib, 0.5, rng));
  }
  CHECK((seen == std::set<std::size_t>{1, 2}));
}

TEST_CASE("selection breaks exact score ties uniformly") {
  SearchNode node =
      make_node({1, 2}, {1, 1}, {10.0, 10.0}, {1, 1}, {0.5, 0.5});
  DepthCalibration calib;
  calib.add(0, 10.0);
  Rng rng(5);
  int first = 0;
  const int rounds = 4000;
  for (int i = 0; i < rounds; ++i) {
    if (tree_policy_alpha(node, calib, 0.5, rng) == 0) ++first;
  }
  CHECK(first > rounds / 2 - 200);
  CHECK(first < rounds / 2 + 200);

  SearchNode empty;
  CHECK_THROWS_AS(tree_policy_alpha(empty, calib, 0.5, rng), ContractError);
  CHECK_THROWS_AS(tree_policy_alpha(node, calib, -1.0, rng), ContractError);
}

TEST_CASE("selection is invariant to a common scale on costs and calibration") {
  DepthCalibration small;
  small.add(0, 10.0);
  DepthCalibration big;
  big.add(0, 1000.0);
  SearchNode node = make_node({1, 2}, {3, 1}, {8.0, 12.0}, {3, 1}, {0.5, 0.5});
  SearchNode scaled =
      make_node({1, 2}, {3, 1}, {800.0, 1200.0}, {3, 1}, {0.5, 0.5});
  Rng rng(6);
  CHECK(tree_policy_alpha(node, small, 0.5, rng) ==
        tree_policy_alpha(scaled, big, 0.5, rng));
}

TEST_CASE("prior inheritance restricts the parent prior and renormalizes") {
  SearchNode parent =
      make_node({1, 2, 3}, {1, 1, 1}, {0, 0, 0}, {0, 0, 0}, {0.5, 0.3, 0.2});

  std::vector<double> child = share_prior(parent, {2, 3});
  REQUIRE(child.size() == 2);
  CHECK(child[0] == doctest::Approx(0.6));
  CHECK(child[1] == doctest::Approx(0.4));

  std::vector<double> same = share_prior(parent, {1, 2, 3});
  CHECK(same[0] == doctest::Approx(0.5));
  CHECK(same[1] == doctest::Approx(0.3));
  CHECK(same[2] == doctest::Approx(0.2));

  CHECK_THROWS_AS(share_prior(parent, {2, 7}), ContractError);
  CHECK_THROWS_AS(share_prior(parent, {}), ContractError);
}

TEST_CASE("step policy marks mirrors, terminals and steps") {
  SimplifyOptions opts;
  SubproblemState open = root_state(planted_padded(3), opts);
  REQUIRE(open.status() == Status::open);
  SubproblemState conflict = root_state(units_conflict(), opts);
  REQUIRE(conflict.status() == Status::conflict);

  Rng rng(7);

  SUBCASE("off-path nodes become mirrors and play nothing") {
    RolloutTree tree;
    RolloutNode n;
    n.state = open;
    n.depth = 1;
    n.choice = RolloutNode::PathChoice::off_path;
    tree.nodes.push_back(std::move(n));
    CHECK(step_policy_gamma(tree, 0, 3, 4, rng) == std::nullopt);
    CHECK(tree.nodes[0].mark == RolloutMark::mirror);
  }

  SUBCASE("on-path conflicts terminate the path with weight one") {
    RolloutTree tree;
    RolloutNode n;
    n.state = conflict;
    n.depth = 2;
    n.choice = RolloutNode::PathChoice::on_path;
    tree.nodes.push_back(std::move(n));
    CHECK(step_policy_gamma(tree, 0, 1, 4, rng) == std::nullopt);
    CHECK(tree.nodes[0].mark == RolloutMark::path_terminal);
    CHECK(tree.nodes[0].terminal == TerminalKind::conflict);
    CHECK(tree.nodes[0].terminal_value == 1.0);
  }

  SUBCASE("on-path frontier states terminate without a value yet") {
    RolloutTree tree;
    RolloutNode n;
    n.state = open;
    n.depth = 4;
    n.choice = RolloutNode::PathChoice::on_path;
    tree.nodes.push_back(std::move(n));
    CHECK(step_policy_gamma(tree, 0, 3, 4, rng) == std::nullopt);
    CHECK(tree.nodes[0].mark == RolloutMark::path_terminal);
    CHECK(tree.nodes[0].terminal == TerminalKind::frontier);
  }

  SUBCASE("on-path open states below the frontier play the proposal") {
    RolloutTree tree;
    RolloutNode n;
    n.state = open;
    n.depth = 1;
    n.choice = RolloutNode::PathChoice::on_path;
    tree.nodes.push_back(std::move(n));
    CHECK(step_policy_gamma(tree, 0, 3, 4, rng) == 3);
    CHECK(tree.nodes[0].mark == RolloutMark::stepped);
    CHECK(tree.nodes[0].action == 3);
    // A required step with no proposal is a contract violation.
    RolloutTree bare;
    RolloutNode m;
    m.state = open;
    m.depth = 1;
    m.choice = RolloutNode::PathChoice::on_path;
    bare.nodes.push_back(std::move(m));
    CHECK_THROWS_AS(step_policy_gamma(bare, 0, std::nullopt, 4, rng),
                    ContractError);
  }

  SUBCASE("nodes without a sibling are path carriers") {
    RolloutTree tree;
    RolloutNode n;
    n.state = open;
    n.depth = 0;
    tree.nodes.push_back(std::move(n));
    CHECK(step_policy_gamma(tree, 0, 3, 4, rng) == 3);
    CHECK(tree.nodes[0].choice == RolloutNode::PathChoice::on_path);
  }

  SUBCASE("satisfied states are rejected") {
    Formula one_clause(2, {Clause(std::vector<Lit>{Lit(1), Lit(2)})});
    SimplifyOptions no_ple;
    no_ple.pure_literals = false;
    SubproblemState s0 = root_state(one_clause, no_ple);
    SubproblemState sat = transition(s0, Lit(1), no_ple);
    REQUIRE(sat.status() == Status::satisfied);
    RolloutTree tree;
    RolloutNode n;
    n.state = sat;
    n.choice = RolloutNode::PathChoice::on_path;
    tree.nodes.push_back(std::move(n));
    CHECK_THROWS_AS(step_policy_gamma(tree, 0, 2, 4, rng), ContractError);
  }
}

TEST_CASE("step policy resolves each sibling pair with one fair coin") {
  SubproblemState open = root_state(planted_padded(3));
  Rng rng(8);
  int first_on_path = 0;
  const int rounds = 4000;
  for (int i = 0; i < rounds; ++i) {
    RolloutTree tree;
    for (int j = 0; j < 2; ++j) {
      RolloutNode n;
      n.state = open;
      n.depth = 1;
      n.sibling = 1 - j;
      tree.nodes.push_back(std::move(n));
    }
    step_policy_gamma(tree, 0, 3, 4, rng);
    // One call decides both nodes, in opposite directions.
    CHECK(tree.nodes[0].choice != RolloutNode::PathChoice::undecided);
    CHECK(tree.nodes[1].choice != RolloutNode::PathChoice::undecided);
    CHECK(tree.nodes[0].choice != tree.nodes[1].choice);
    if (tree.nodes[0].choice == RolloutNode::PathChoice::on_path) {
      ++first_on_path;
      // The sibling's later call must oppose: it mirrors.
      CHECK(step_policy_gamma(tree, 1, 3, 4, rng) == std::nullopt);
      CHECK(tree.nodes[1].mark == RolloutMark::mirror);
    }
  }
  CHECK(first_on_path > rounds / 2 - 200);
  CHECK(first_on_path < rounds / 2 + 200);
}

TEST_CASE("rollout policy gates between value model and subsolver") {
  SubproblemState frontier = root_state(asymmetric5());
  SubsolverHandle sub = SubsolverHandle::default_internal();
  DpllOptions opts;
  Rng rng(9);

  SUBCASE("a clueless model hands every query to the subsolver") {
    EpsilonTracker eps(0.5);  // eps == t: never trust the model
    ConstantValue value(60.0);
    for (int i = 0; i < 40; ++i) {
      bool used = false;
      double t = rollout_policy_pi(frontier, eps, 0.5, value, sub, opts, rng,
                                   &used);
      CHECK(used);
      CHECK(t == 5.0);  // exact proof tree size of this instance
    }
    CHECK(eps.observations() == 40);
    CHECK(eps.eps() > 0.5);  // |log2 5 - 60| stays enormous
  }

  SUBCASE("a trusted model answers with its predicted size") {
    EpsilonTracker eps(0.0);
    ConstantValue value(3.0);
    for (int i = 0; i < 40; ++i) {
      bool used = true;
      double t = rollout_policy_pi(frontier, eps, 0.5, value, sub, opts, rng,
                                   &used);
      CHECK_FALSE(used);
      CHECK(t == doctest::Approx(8.0));
    }
    CHECK(eps.observations() == 0);
  }

  SUBCASE("an intermediate error splits queries near the gate probability") {
    EpsilonTracker probe(0.25);
    CHECK(probe.model_probability(0.5) == doctest::Approx(0.5));
    int model_answers = 0;
    const int rounds = 2000;
    for (int i = 0; i < rounds; ++i) {
      EpsilonTracker eps(0.25);  // fresh: observations must not shift the gate
      ConstantValue value(std::log2(5.0));
      bool used = false;
      rollout_policy_pi(frontier, eps, 0.5, value, sub, opts, rng, &used);
      if (!used) ++model_answers;
    }
    CHECK(model_answers > rounds / 2 - 150);
    CHECK(model_answers < rounds / 2 + 150);
  }

  SUBCASE("satisfiable frontier subproblems abort the rollout") {
    Formula sat_f(2, {Clause(std::vector<Lit>{Lit(1), Lit(2)}),
                      Clause(std::vector<Lit>{Lit(-1), Lit(2)})});
    SimplifyOptions no_ple;
    no_ple.pure_literals = false;
    SubproblemState sat_state = root_state(sat_f, no_ple);
    REQUIRE(sat_state.status() == Status::open);
    EpsilonTracker eps(0.5);
    ConstantValue value(1.0);
    DpllOptions plain;
    plain.simplify = no_ple;
    CHECK_THROWS_AS(rollout_policy_pi(sat_state, eps, 0.5, value, sub, plain,
                                      rng, nullptr),
                    SatisfiableInstanceError);
  }
}

TEST_CASE("backup pushes the closed-form values along the path") {
  SimplifyOptions opts;
  Formula f = planted_padded(3);  // pads 3, 4, 5 keep transitions open
  SubproblemState root = root_state(f, opts);

  SUBCASE("conflict two levels down yields 7 at the root and 3 in between") {
    ForestStore store;
    DepthCalibration calib;
    RolloutTree tree = make_chain(store, root, {3, 4}, TerminalKind::conflict,
                                  1.0, opts);
    double v = backup(tree, store, calib);
    CHECK(v == 7.0);
    CHECK(tree.nodes[static_cast<std::size_t>(tree.path[0])].backed_value ==
          7.0);
    CHECK(tree.nodes[static_cast<std::size_t>(tree.path[1])].backed_value ==
          3.0);
    CHECK(tree.nodes[static_cast<std::size_t>(tree.path[2])].backed_value ==
          1.0);
    // Mirrors carry their sibling's value, for bookkeeping only.
    for (const RolloutNode& n : tree.nodes) {
      if (n.mark == RolloutMark::mirror) {
        CHECK(n.backed_value ==
              tree.nodes[static_cast<std::size_t>(n.sibling)].backed_value);
      }
    }
    CHECK(calib.samples(0) == 1);
    CHECK(calib.value(0) == 7.0);
    CHECK(calib.samples(1) == 1);
    CHECK(calib.value(1) == 3.0);
    CHECK(calib.samples(2) == 0);  // terminals do not calibrate

    SearchNode* sn = store.find(store.key_of(root));
    REQUIRE(sn != nullptr);
    std::size_t ai = sn->index_of(3);
    CHECK(sn->n[ai] == 2);  // initialized at 1, one backup
    CHECK(sn->backups[ai] == 1);
    CHECK(sn->q[ai] == 7.0);
  }

  SUBCASE("frontier weight five two levels down yields 23 at the root") {
    ForestStore store;
    DepthCalibration calib;
    RolloutTree tree = make_chain(store, root, {3, 4}, TerminalKind::frontier,
                                  5.0, opts);
    CHECK(backup(tree, store, calib) == 23.0);
    CHECK(tree.nodes[static_cast<std::size_t>(tree.path[1])].backed_value ==
          11.0);
  }

  SUBCASE("two rollouts through one action average into the running mean") {
    ForestStore store;
    DepthCalibration calib;
    // 2T + 1 with T = 4.5 and 9.5: backed values 10 and 20.
    RolloutTree first = make_chain(store, root, {3}, TerminalKind::frontier,
                                   4.5, opts);
    RolloutTree second = make_chain(store, root, {3}, TerminalKind::frontier,
                                    9.5, opts);
    CHECK(backup(first, store, calib) == 10.0);
    CHECK(backup(second, store, calib) == 20.0);

    SearchNode* sn = store.find(store.key_of(root));
    REQUIRE(sn != nullptr);
    std::size_t ai = sn->index_of(3);
    CHECK(sn->q[ai] == 15.0);
    CHECK(sn->n[ai] == 3);
    CHECK(sn->backups[ai] == 2);
    CHECK(sn->total_backups() == 2);
  }

  SUBCASE("a bare terminal path returns its own weight") {
    ForestStore store;
    DepthCalibration calib;
    RolloutTree tree = make_chain(store, root, {}, TerminalKind::frontier,
                                  9.0, opts);
    CHECK(backup(tree, store, calib) == 9.0);
  }

  SUBCASE("incomplete rollouts are rejected") {
    ForestStore store;
    DepthCalibration calib;
    RolloutTree tree;
    CHECK_THROWS_AS(backup(tree, store, calib), ContractError);
    tree = make_chain(store, root, {3}, TerminalKind::conflict, 1.0, opts);
    tree.sat_found = true;
    CHECK_THROWS_AS(backup(tree, store, calib), ContractError);
  }

  SUBCASE("paths through states missing from the store are rejected") {
    ForestStore store;
    ForestStore other;
    DepthCalibration calib;
    RolloutTree tree = make_chain(other, root, {3}, TerminalKind::conflict,
                                  1.0, opts);
    CHECK_THROWS_AS(backup(tree, store, calib), ContractError);
  }
}

TEST_CASE("commitment plays the most visited action") {
  SubproblemState state = root_state(planted_padded(3));
  UniformPrior uniform;
  Rng rng(10);

  SUBCASE("count leader wins outright") {
    SearchNode node =
        make_node({1, 2}, {5, 2}, {4.0, 2.0}, {4, 1}, {0.5, 0.5});
    for (int i = 0; i < 10; ++i) {
      CHECK(commit_action(node, CommitMode::max_count, uniform, state, rng) ==
            0);
    }
  }

  SUBCASE("count ties go to the cheaper action") {
    SearchNode node =
        make_node({1, 2}, {4, 4}, {12.0, 9.0}, {3, 3}, {0.5, 0.5});
    for (int i = 0; i < 10; ++i) {
      CHECK(commit_action(node, CommitMode::max_count, uniform, state, rng) ==
            1);
    }
  }

  SUBCASE("actions without a backup rank behind any mean") {
    SearchNode node =
        make_node({1, 2}, {4, 4}, {50.0, 0.0}, {3, 0}, {0.5, 0.5});
    for (int i = 0; i < 10; ++i) {
      CHECK(commit_action(node, CommitMode::max_count, uniform, state, rng) ==
            0);
    }
  }

  SUBCASE("full ties split uniformly") {
    SearchNode node =
        make_node({1, 2}, {4, 4}, {9.0, 9.0}, {3, 3}, {0.5, 0.5});
    int first = 0;
    const int rounds = 4000;
    for (int i = 0; i < rounds; ++i) {
      if (commit_action(node, CommitMode::max_count, uniform, state, rng) == 0)
        ++first;
    }
    CHECK(first > rounds / 2 - 200);
    CHECK(first < rounds / 2 + 200);
  }
}

TEST_CASE("commitment can sample the model prior instead") {
  SubproblemState state = root_state(planted_padded(3));
  std::vector<int> unassigned = state.unassigned_variables();
  REQUIRE(unassigned.size() == 5);
  Rng rng(11);

  SearchNode node = make_node({1, 2}, {9, 1}, {4.0, 0.0}, {8, 0}, {0.5, 0.5});

  SUBCASE("a degenerate prior forces its action") {
    FixedPrior fixed({1.0, 0.0, 0.0, 0.0, 0.0});  // all mass on variable 1
    for (int i = 0; i < 20; ++i) {
      CHECK(commit_action(node, CommitMode::sample_prior, fixed, state, rng) ==
            0);
    }
  }

  SUBCASE("sampling follows the restricted prior, not the counts") {
    FixedPrior fixed({0.2, 0.6, 0.1, 0.05, 0.05});  // restricted: 0.25 / 0.75
    int second = 0;
    const int rounds = 4000;
    for (int i = 0; i < rounds; ++i) {
      if (commit_action(node, CommitMode::sample_prior, fixed, state, rng) ==
          1)
        ++second;
    }
    CHECK(second > static_cast<int>(rounds * 0.70));
    CHECK(second < static_cast<int>(rounds * 0.80));
  }

  SUBCASE("mix must be resolved by the caller") {
    UniformPrior uniform;
    CHECK_THROWS_AS(commit_action(node, CommitMode::mix, uniform, state, rng),
                    ContractError);
  }

  SUBCASE("commitment requires at least one backup") {
    UniformPrior uniform;
    SearchNode fresh =
        make_node({1, 2}, {1, 1}, {0.0, 0.0}, {0, 0}, {0.5, 0.5});
    CHECK_THROWS_AS(
        commit_action(fresh, CommitMode::max_count, uniform, state, rng),
        ContractError);
  }
}

TEST_CASE("store keying: decision sets share nodes, sequences do not") {
  SimplifyOptions opts;
  Formula f = planted_padded(2);  // pads 3 and 4 do not propagate
  SubproblemState root = root_state(f, opts);
  SubproblemState a =
      transition(transition(root, Lit(-3), opts), Lit(-4), opts);
  SubproblemState b =
      transition(transition(root, Lit(-4), opts), Lit(-3), opts);
  REQUIRE(a.status() == Status::open);
  REQUIRE(b.status() == Status::open);

  ForestStore dag(true);
  CHECK(dag.key_of(a) == dag.key_of(b));
  SearchNode& node = dag.ensure(a, uniform_prior(a), PriorSource::inherited);
  node.backups[0] = 7;
  SearchNode* shared = dag.find(dag.key_of(b));
  REQUIRE(shared != nullptr);
  CHECK(shared->backups[0] == 7);  // both orders hit one set of statistics
  CHECK(dag.size() == 1);

  ForestStore tree(false);
  CHECK(tree.key_of(a) != tree.key_of(b));
  tree.ensure(a, uniform_prior(a), PriorSource::inherited);
  tree.ensure(b, uniform_prior(b), PriorSource::inherited);
  CHECK(tree.size() == 2);

  // An existing node is returned untouched.
  std::vector<double> other(uniform_prior(a).size(), 0.0);
  other[0] = 1.0;
  SearchNode& again = dag.ensure(a, other, PriorSource::model);
  CHECK(again.backups[0] == 7);
  CHECK(again.prior_source == PriorSource::inherited);
}

TEST_CASE("sampled rollout trees are well-formed") {
  Rng gen(12);
  std::vector<Formula> instances = random_unsat_set(gen, 3, 4, 6);
  instances.push_back(planted_padded(4));
  SubsolverHandle sub = SubsolverHandle::default_internal();

  for (std::size_t fi = 0; fi < instances.size(); ++fi) {
    SearchConfig config;
    config.ell = 2;
    config.k = 1;
    config.seed = 100 + fi;
    ForestSearch fs(instances[fi], std::make_shared<UniformPrior>(),
                    std::make_shared<ConstantValue>(0.0), &sub, config);
    for (int round = 0; round < 60; ++round) {
      RolloutTree tree = fs.rollout(fs.root());
      if (tree.sat_found) {
        FAIL("unsatisfiable instance produced a satisfying branch");
      }
      REQUIRE(tree.complete());
      // The path starts at the root and follows parent links.
      CHECK(tree.path.front() == 0);
      for (std::size_t i = 1; i < tree.path.size(); ++i) {
        CHECK(tree.nodes[static_cast<std::size_t>(tree.path[i])].parent ==
              tree.path[i - 1]);
      }
      int stepped = 0, terminals = 0, mirrors = 0, pending = 0;
      for (const RolloutNode& n : tree.nodes) {
        switch (n.mark) {
          case RolloutMark::stepped:
            ++stepped;
            CHECK(n.depth < fs.config().ell);
            CHECK(n.action.has_value());
            CHECK(n.choice == RolloutNode::PathChoice::on_path);
            break;
          case RolloutMark::path_terminal:
            ++terminals;
            if (n.terminal == TerminalKind::frontier) {
              CHECK(n.depth == fs.config().ell);
              CHECK(n.terminal_value > 0.0);
            } else {
              CHECK(n.terminal_value == 1.0);
            }
            break;
          case RolloutMark::mirror:
            ++mirrors;
            CHECK(n.choice == RolloutNode::PathChoice::off_path);
            break;
          case RolloutMark::pending:
            ++pending;
            break;
        }
      }
      // One path: its terminal is unique, every other path node stepped,
      // every step spawns exactly one mirror on the other side.
      CHECK(terminals == 1);
      CHECK(stepped == static_cast<int>(tree.path.size()) - 1);
      CHECK(mirrors == stepped);
      CHECK(pending == 0);
      CHECK(tree.nodes[static_cast<std::size_t>(tree.path.back())].mark ==
            RolloutMark::path_terminal);
    }
  }
}

TEST_CASE("rollout estimates are unbiased for the policy's proof tree") {
  Formula f = asymmetric5();
  auto fixed = make_fixed_order_policy();

  DpllOptions opts;
  ProofTreeStats exact = dpll_solve(f, *fixed, opts);
  REQUIRE(exact.tree_size == 5);

  SearchConfig config;
  config.ell = 3;  // conflicts end every path before the frontier
  config.seed = 13;
  config.alpha_override = fixed.get();
  SubsolverHandle sub = SubsolverHandle::default_internal();
  ForestSearch fs(f, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(60.0), &sub, config);

  const int rounds = 3000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < rounds; ++i) {
    RolloutTree tree = fs.rollout(fs.root());
    REQUIRE(tree.complete());
    double v = tree.nodes[0].backed_value;
    CHECK((v == 3.0 || v == 7.0));
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / rounds;
  double var = sumsq / rounds - mean * mean;
  double se = std::sqrt(var / rounds);
  CHECK(std::abs(mean - 5.0) < 3.0 * se + 1e-9);
  CHECK(fs.frontier_subsolver_calls() == 0);  // no frontier was reachable
  CHECK(fs.frontier_value_calls() == 0);
}

TEST_CASE("frontier weights from subsolver or oracle model stay unbiased") {
  Formula f = asymmetric5();
  auto fixed = make_fixed_order_policy();
  SubsolverHandle sub = SubsolverHandle::default_internal();
  DpllOptions opts;

  // Fixed order, frontier at depth 1: the false branch conflicts (estimate
  // 3), the true branch is an open frontier subproblem of exact size 3
  // (estimate 2*3 + 1 = 7). Expectation 5 = the exact hybrid tree size.
  double oracle = enum_node_expectation(f, *fixed, 1, &sub, opts);
  REQUIRE(oracle == doctest::Approx(5.0));

  auto run = [&](std::optional<double> eps_initial, double value_log2,
                 std::uint64_t* sub_calls, std::uint64_t* val_calls) {
    SearchConfig config;
    config.ell = 1;
    config.seed = 14;
    config.alpha_override = fixed.get();
    config.eps_initial = eps_initial;
    ForestSearch fs(f, std::make_shared<UniformPrior>(),
                    std::make_shared<ConstantValue>(value_log2), &sub, config);
    const int rounds = 3000;
    double sum = 0.0;
    for (int i = 0; i < rounds; ++i) {
      RolloutTree tree = fs.rollout(fs.root());
      REQUIRE(tree.complete());
      sum += tree.nodes[0].backed_value;
    }
    *sub_calls = fs.frontier_subsolver_calls();
    *val_calls = fs.frontier_value_calls();
    return sum / rounds;
  };

  SUBCASE("subsolver-served frontier") {
    // A uselessly wrong value model keeps the gate shut after the first
    // error observation, so every frontier query is exact.
    std::uint64_t sub_calls = 0, val_calls = 0;
    double mean = run(std::nullopt, 60.0, &sub_calls, &val_calls);
    CHECK(std::abs(mean - 5.0) < 0.12);
    CHECK(val_calls == 0);
    CHECK(sub_calls > 1000);
  }

  SUBCASE("model-served frontier with an exact predictor") {
    std::uint64_t sub_calls = 0, val_calls = 0;
    double mean = run(0.0, std::log2(3.0), &sub_calls, &val_calls);
    CHECK(std::abs(mean - 5.0) < 0.12);
    CHECK(sub_calls == 0);
    CHECK(val_calls > 1000);
  }
}

TEST_CASE("an accurate model shuts the subsolver off after one calibration") {
  Formula f = asymmetric5();
  auto fixed = make_fixed_order_policy();
  SubsolverHandle sub = SubsolverHandle::default_internal();

  SearchConfig config;
  config.ell = 1;
  config.seed = 15;
  config.alpha_override = fixed.get();
  // Default initial error equals the threshold: the first frontier query
  // goes to the subsolver; a perfect prediction then drops the error to 0.
  ForestSearch fs(f, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(std::log2(3.0)), &sub,
                  config);
  for (int i = 0; i < 100; ++i) {
    RolloutTree tree = fs.rollout(fs.root());
    REQUIRE(tree.complete());
  }
  CHECK(fs.frontier_subsolver_calls() == 1);
  CHECK(fs.frontier_value_calls() >= 1);
  CHECK(fs.epsilon().eps() == 0.0);
  CHECK(fs.epsilon().observations() == 1);
}

TEST_CASE("the prior model is queried once, at the instance root") {
  Rng gen(16);
  Formula f = random_unsat_set(gen, 1, 5, 6)[0];

  auto counting = std::make_shared<CountingUniformPrior>();
  SearchConfig config;
  config.ell = 2;
  config.k = 25;
  config.commit = CommitMode::max_count;
  config.seed = 17;
  SubsolverHandle sub = SubsolverHandle::default_internal();
  ForestSearch fs(f, counting, std::make_shared<ConstantValue>(0.0), &sub,
                  config);
  EpisodeResult out = fs.run_episode();
  REQUIRE_FALSE(out.aborted_sat);
  CHECK(counting->calls == 1);

  // Exactly the root node carries a model prior; descendants inherit.
  const SearchNode* root_node = fs.store().find(fs.store().key_of(fs.root()));
  REQUIRE(root_node != nullptr);
  CHECK(root_node->prior_source == PriorSource::model);
  int model_nodes = 0;
  for (const CommittedDecision& d : out.trace) {
    const SearchNode* n = fs.store().find(d.key);
    REQUIRE(n != nullptr);
    if (n->prior_source == PriorSource::model) ++model_nodes;
  }
  CHECK(model_nodes == 1);  // the root's own trace entry

  // Sampling commitments consult the model at every decision instead.
  auto counting2 = std::make_shared<CountingUniformPrior>();
  config.commit = CommitMode::sample_prior;
  ForestSearch fs2(f, counting2, std::make_shared<ConstantValue>(0.0), &sub,
                   config);
  EpisodeResult out2 = fs2.run_episode();
  REQUIRE_FALSE(out2.aborted_sat);
  CHECK(counting2->calls == 1 + static_cast<int>(out2.trace.size()));
}

TEST_CASE("episode on the planted core commits once and realizes size 3") {
  Formula f = planted_core();
  SearchConfig config;
  config.ell = 1;
  config.k = 20;
  config.commit = CommitMode::max_count;
  config.seed = 18;
  SubsolverHandle sub = SubsolverHandle::default_internal();
  ForestSearch fs(f, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(0.0), &sub, config);

  EpisodeResult out = fs.run_episode();
  REQUIRE_FALSE(out.aborted_sat);
  CHECK(out.realized_tree_size == 3.0);
  CHECK(out.trace.size() == 1);
  CHECK(out.rollouts == 20);

  // Both children conflict: one policy example, no value records.
  int policy_examples = 0, value_records = 0;
  for (const TrainingExample& e : out.examples) {
    if (e.counts.empty()) {
      ++value_records;
    } else {
      ++policy_examples;
    }
  }
  CHECK(policy_examples == 1);
  CHECK(value_records == 0);

  const CommittedDecision& d = out.trace[0];
  CHECK(d.depth == 0);
  CHECK((d.action == 1 || d.action == 2));
  CHECK((d.actions == std::vector<int>{1, 2}));
  // Visit counts: initialized at one per action, one increment per rollout.
  CHECK(d.n[0] + d.n[1] == 2 + 20);
  CHECK(d.prior.size() == 2);
}

TEST_CASE("replaying the trace reproduces the realized tree size") {
  Rng gen(19);
  std::vector<Formula> instances = random_unsat_set(gen, 4, 4, 6);
  SubsolverHandle sub = SubsolverHandle::default_internal();

  for (std::size_t fi = 0; fi < instances.size(); ++fi) {
    SearchConfig config;
    config.ell = 2;
    config.k = 15;
    config.commit = CommitMode::max_count;
    config.seed = 20 + fi;
    ForestSearch fs(instances[fi], std::make_shared<UniformPrior>(),
                    std::make_shared<ConstantValue>(0.0), &sub, config);
    EpisodeResult out = fs.run_episode();
    REQUIRE_FALSE(out.aborted_sat);
    REQUIRE(out.realized_tree_size >= 1.0);

    TraceLookupPolicy lookup;
    for (const CommittedDecision& d : out.trace) {
      lookup.by_key[d.key.hex()] = d.action;
    }
    DpllOptions opts;
    ProofTreeStats replay =
        hybrid_solve(instances[fi], lookup, sub, config.ell, opts);
    CHECK(static_cast<double>(replay.tree_size) == out.realized_tree_size);

    // Value records: one per open frontier leaf, at most 2^ell; commitments
    // at most 2^ell - 1.
    int value_records = 0;
    for (const TrainingExample& e : out.examples) {
      if (e.counts.empty()) {
        ++value_records;
        REQUIRE(e.log2_size.has_value());
        CHECK(*e.log2_size >= 0.0);
      }
    }
    CHECK(value_records <= 4);
    CHECK(static_cast<std::uint64_t>(value_records) == replay.subsolver_calls);
    CHECK(out.trace.size() <= 3);
  }
}

TEST_CASE("satisfiable instances abort the episode") {
  // Without pure-literal elimination this satisfiable instance stays open
  // at the root, so the abort happens mid-search.
  Formula f(2, {Clause(std::vector<Lit>{Lit(1), Lit(2)}),
                Clause(std::vector<Lit>{Lit(-1), Lit(-2)})});
  SearchConfig config;
  config.ell = 2;
  config.k = 5;
  config.seed = 21;
  config.simplify.pure_literals = false;
  SubsolverHandle sub = SubsolverHandle::default_internal();
  ForestSearch fs(f, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(0.0), &sub, config);
  EpisodeResult out = fs.run_episode();
  CHECK(out.aborted_sat);
  CHECK(out.realized_tree_size == 0.0);

  // Satisfied at the root after simplification: immediate abort.
  Formula g(2, {Clause(std::vector<Lit>{Lit(1), Lit(2)})});
  SearchConfig root_config;
  root_config.ell = 2;
  root_config.seed = 22;
  ForestSearch gs(g, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(0.0), &sub, root_config);
  EpisodeResult gout = gs.run_episode();
  CHECK(gout.aborted_sat);
  CHECK(gout.trace.empty());
  CHECK(gout.rollouts == 0);
}

TEST_CASE("episodes are reproducible under a fixed seed") {
  Rng gen(23);
  Formula f = random_unsat_set(gen, 1, 5, 6)[0];
  SubsolverHandle sub = SubsolverHandle::default_internal();

  auto run = [&](std::uint64_t seed) {
    SearchConfig config;
    config.ell = 2;
    config.k = 10;
    config.seed = seed;
    ForestSearch fs(f, std::make_shared<UniformPrior>(),
                    std::make_shared<ConstantValue>(0.0), &sub, config);
    return fs.run_episode();
  };

  EpisodeResult a = run(7);
  EpisodeResult b = run(7);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].key == b.trace[i].key);
    CHECK(a.trace[i].action == b.trace[i].action);
    CHECK(a.trace[i].n == b.trace[i].n);
  }
  CHECK(a.realized_tree_size == b.realized_tree_size);
  CHECK(a.expanded_nodes == b.expanded_nodes);
  CHECK(a.examples.size() == b.examples.size());
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i] == b.examples[i]);
  }
}

TEST_CASE("episode bookkeeping: counts, means and calibration") {
  Formula f = planted_padded(2);
  SearchConfig config;
  config.ell = 2;
  config.k = 30;
  config.commit = CommitMode::max_count;
  config.seed = 24;
  SubsolverHandle sub = SubsolverHandle::default_internal();
  ForestSearch fs(f, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(0.0), &sub, config);
  EpisodeResult out = fs.run_episode();
  REQUIRE_FALSE(out.aborted_sat);
  REQUIRE(!out.trace.empty());

  // Root commitment: 4 actions initialized at 1, one increment per rollout.
  const CommittedDecision& root_d = out.trace[0];
  int total_n = 0;
  for (int n : root_d.n) total_n += n;
  CHECK(total_n == static_cast<int>(root_d.actions.size()) + config.k);

  // Policy examples carry the normalized counts of their trace entry.
  std::size_t example_idx = 0;
  for (const CommittedDecision& d : out.trace) {
    while (example_idx < out.examples.size() &&
           out.examples[example_idx].counts.empty()) {
      ++example_idx;
    }
    REQUIRE(example_idx < out.examples.size());
    const TrainingExample& e = out.examples[example_idx++];
    CHECK(e.key == d.key);
    CHECK(e.actions == d.actions);
    REQUIRE(e.counts.size() == d.n.size());
    double sum = 0.0;
    int dn = 0;
    for (int n : d.n) dn += n;
    for (std::size_t i = 0; i < e.counts.size(); ++i) {
      CHECK(e.counts[i] ==
            doctest::Approx(static_cast<double>(d.n[i]) / dn));
      sum += e.counts[i];
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(e.q == d.q);
    CHECK_FALSE(e.log2_size.has_value());
  }

  // Every rollout from the root backs one value into depth 0.
  CHECK(fs.calibration().samples(0) >=
        static_cast<std::uint64_t>(config.k));
  CHECK(fs.calibration().value(0) > 0.0);
  CHECK(out.expanded_nodes > 0);
  CHECK(out.rollouts >= static_cast<std::uint64_t>(config.k));
}

TEST_CASE("episode traces round-trip through json lines") {
  Formula f = planted_padded(1);
  SearchConfig config;
  config.ell = 2;
  config.k = 8;
  config.commit = CommitMode::max_count;
  config.seed = 25;
  SubsolverHandle sub = SubsolverHandle::default_internal();
  ForestSearch fs(f, std::make_shared<UniformPrior>(),
                  std::make_shared<ConstantValue>(0.0), &sub, config);
  EpisodeResult out = fs.run_episode();
  REQUIRE_FALSE(out.aborted_sat);
  REQUIRE(!out.trace.empty());

  std::string path = temp_path("trace.jsonl");
  save_trace(path, out.trace);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::size_t idx = 0;
  while (std::getline(in, line)) {
    REQUIRE(idx < out.trace.size());
    const CommittedDecision& d = out.trace[idx];
    CHECK(line == to_json_line(d));
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(StateKey::from_hex(j.at("key").get<std::string>()) == d.key);
    CHECK(j.at("depth").get<int>() == d.depth);
    CHECK(j.at("action").get<int>() == d.action);
    CHECK(j.at("actions").get<std::vector<int>>() == d.actions);
    CHECK(j.at("n").get<std::vector<int>>() == d.n);
    CHECK(j.at("q").get<std::vector<double>>().size() == d.q.size());
    CHECK(j.at("prior").get<std::vector<double>>().size() == d.prior.size());
    ++idx;
  }
  CHECK(idx == out.trace.size());
  std::remove(path.c_str());
}

TEST_CASE("full-tree passes return the exact hybrid size") {
  auto fixed = make_fixed_order_policy();
  SubsolverHandle sub = SubsolverHandle::default_internal();

  SUBCASE("asymmetric instance, frontier at depth one") {
    Formula f = asymmetric5();
    SearchConfig config;
    config.ell = 1;
    config.rollout = RolloutKind::full_tree;
    config.seed = 26;
    config.alpha_override = fixed.get();
    ForestSearch fs(f, std::make_shared<UniformPrior>(),
                    std::make_shared<ConstantValue>(0.0), &sub, config);
    CHECK(fs.full_tree_pass(fs.root()) == 5.0);
    // Budget: one expansion (2) plus the frontier subsolver subtree (3).
    CHECK(fs.expanded_nodes() == 5);

    // The visited action accumulated the exact value.
    const SearchNode* root_node =
        fs.store().find(fs.store().key_of(fs.root()));
    REQUIRE(root_node != nullptr);
    std::size_t ai = root_node->index_of(1);
    CHECK(root_node->backups[ai] == 1);
    CHECK(root_node->q[ai] == 5.0);
    CHECK(fs.calibration().samples(0) == 1);
    CHECK(fs.calibration().value(0) == 5.0);

    CHECK(fs.full_tree_pass(fs.root()) == 5.0);
    const SearchNode* again = fs.store().find(fs.store().key_of(fs.root()));
    CHECK(again->backups[ai] == 2);
  }

  SUBCASE("matches the reference hybrid solver on random instances") {
    Rng gen(27);
    std::vector<Formula> instances = random_unsat_set(gen, 3, 4, 6);
    for (std::size_t fi = 0; fi < instances.size(); ++fi) {
      SearchConfig config;
      config.ell = 2;
      config.rollout = RolloutKind::full_tree;
      config.seed = 28 + fi;
      config.alpha_override = fixed.get();
      ForestSearch fs(instances[fi], std::make_shared<UniformPrior>(),
                      std::make_shared<ConstantValue>(0.0), &sub, config);
      DpllOptions opts;
      ProofTreeStats exact =
          hybrid_solve(instances[fi], *fixed, sub, config.ell, opts);
      CHECK(fs.full_tree_pass(fs.root()) ==
            static_cast<double>(exact.tree_size));
    }
  }

  SUBCASE("full-tree episodes commit from exact statistics") {
    Formula f = planted_padded(2);
    SearchConfig config;
    config.ell = 2;
    config.k = 4;
    config.rollout = RolloutKind::full_tree;
    config.commit = CommitMode::max_count;
    config.seed = 29;
    ForestSearch fs(f, std::make_shared<UniformPrior>(),
                    std::make_shared<ConstantValue>(0.0), &sub, config);
    EpisodeResult out = fs.run_episode();
    REQUIRE_FALSE(out.aborted_sat);
    CHECK(out.realized_tree_size >= 3.0);
    CHECK(!out.trace.empty());
  }
}

TEST_CASE("incumbent policy plays stored counts and falls back elsewhere") {
  Formula f = planted_padded(2);
  SimplifyOptions opts;
  SubproblemState root = root_state(f, opts);

  ForestStore store;
  SearchNode& node = store.ensure(root, uniform_prior(root),
                                  PriorSource::model);
  // Variable 2 has the most visits.
  std::size_t target = node.index_of(2);
  node.n[target] = 50;
  node.backups[target] = 49;
  node.q[target] = 3.0;

  auto fallback = make_fixed_order_policy();
  IncumbentPolicy incumbent(store, *fallback, 30);
  CHECK(incumbent.choose(root) == 2);
  CHECK(incumbent.name().find("incumbent") == 0);

  // A state the store has never backed up falls through.
  SubproblemState below = transition(root, Lit(-3), opts);
  CHECK(incumbent.choose(below) == fallback->choose(below));

  SubproblemState conflict = root_state(units_conflict(), opts);
  CHECK_THROWS_AS(incumbent.choose(conflict), ContractError);
}

TEST_CASE("engine constructor and rollout preconditions") {
  Formula f = planted_padded(2);
  auto prior = std::make_shared<UniformPrior>();
  auto value = std::make_shared<ConstantValue>(0.0);
  SubsolverHandle sub = SubsolverHandle::default_internal();

  SearchConfig ok;
  CHECK_NOTHROW(ForestSearch(f, prior, value, &sub, ok));

  SearchConfig bad = ok;
  bad.k = 0;
  CHECK_THROWS_AS(ForestSearch(f, prior, value, &sub, bad), ContractError);
  bad = ok;
  bad.ell = -1;
  CHECK_THROWS_AS(ForestSearch(f, prior, value, &sub, bad), ContractError);
  bad = ok;
  bad.t = 0.0;
  CHECK_THROWS_AS(ForestSearch(f, prior, value, &sub, bad), ContractError);
  bad = ok;
  bad.mix_probability = 1.5;
  CHECK_THROWS_AS(ForestSearch(f, prior, value, &sub, bad), ContractError);
  bad = ok;
  bad.c_puct = -0.5;
  CHECK_THROWS_AS(ForestSearch(f, prior, value, &sub, bad), ContractError);
  CHECK_THROWS_AS(ForestSearch(f, nullptr, value, &sub, ok), ContractError);
  CHECK_THROWS_AS(ForestSearch(f, prior, nullptr, &sub, ok), ContractError);
  CHECK_THROWS_AS(ForestSearch(f, prior, value, nullptr, ok), ContractError);

  SearchConfig shallow = ok;
  shallow.ell = 0;
  ForestSearch fs(f, prior, value, &sub, shallow);
  // Rollouts cannot start at or below the frontier.
  CHECK_THROWS_AS(fs.rollout(fs.root()), ContractError);

  SearchConfig deep = ok;
  deep.ell = 3;
  ForestSearch fs2(f, prior, value, &sub, deep);
  // Interior states must have been reached through the engine first.
  SimplifyOptions sopts;
  SubproblemState inner = transition(fs2.root(), Lit(-3), sopts);
  CHECK_THROWS_AS(fs2.rollout(inner), ContractError);
  // After the root node exists, a rollout can be launched from a child the
  // engine has ensured.
  (void)fs2.rollout(fs2.root());
  SearchNode* root_node = fs2.store().find(fs2.store().key_of(fs2.root()));
  REQUIRE(root_node != nullptr);
  fs2.ensure_node(inner, root_node);
  CHECK_NOTHROW(fs2.rollout(inner));

  // Conflict states cannot seed a rollout.
  Formula g = units_conflict();
  ForestSearch fs3(g, prior, value, &sub, ok);
  CHECK_THROWS_AS(fs3.rollout(fs3.root()), ContractError);
}
