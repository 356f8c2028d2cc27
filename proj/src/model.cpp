#include "mcfs/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "mcfs/errors.hpp"

namespace mcfs {

namespace {

std::vector<int> unassigned_checked(const SubproblemState& s) {
  std::vector<int> vars = s.unassigned_variables();
  if (vars.empty()) {
    throw ContractError("prior queried with no unassigned variables");
  }
  return vars;
}

std::vector<int> open_vars_for_choice(const SubproblemState& s) {
  if (s.status() != Status::open) {
    throw ContractError("branching policy queried on a non-open state");
  }
  std::vector<int> vars = s.open_variables();
  if (vars.empty()) {
    throw ContractError("open state with no residual variables");
  }
  return vars;
}

}  // namespace

std::vector<double> uniform_prior(const SubproblemState& s) {
  std::vector<int> vars = unassigned_checked(s);
  return std::vector<double>(vars.size(), 1.0 / static_cast<double>(vars.size()));
}

std::vector<double> jw_prior(const SubproblemState& s) {
  std::vector<int> vars = unassigned_checked(s);
  std::vector<double> scores = jw_scores(s, vars);
  double total = 0.0;
  for (double v : scores) total += v;
  if (total <= 0.0) {
    return std::vector<double>(vars.size(),
                               1.0 / static_cast<double>(vars.size()));
  }
  for (double& v : scores) v /= total;
  return scores;
}

std::vector<double> UniformPrior::prior(const SubproblemState& s) {
  return uniform_prior(s);
}

std::vector<double> JwPrior::prior(const SubproblemState& s) {
  return jw_prior(s);
}

ConstantValue::ConstantValue(double log2_size) : value_(log2_size) {
  if (!std::isfinite(value_) || value_ < 0.0) {
    throw ContractError("value predictions must be finite and >= 0");
  }
}

std::vector<double> restrict_renormalize(const std::vector<int>& domain,
                                         const std::vector<double>& mass,
                                         const std::vector<int>& subset) {
  if (domain.size() != mass.size()) {
    throw ContractError("prior length does not match its domain");
  }
  if (subset.empty()) {
    throw ContractError("cannot restrict a prior to an empty action set");
  }
  std::unordered_map<int, double> by_var;
  by_var.reserve(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) by_var[domain[i]] = mass[i];

  std::vector<double> out;
  out.reserve(subset.size());
  double total = 0.0;
  for (int v : subset) {
    auto it = by_var.find(v);
    if (it == by_var.end()) {
      throw ContractError("variable " + std::to_string(v) +
                          " missing from the prior domain");
    }
    out.push_back(it->second);
    total += it->second;
  }
  if (total <= 0.0) {
    return std::vector<double>(subset.size(),
                               1.0 / static_cast<double>(subset.size()));
  }
  for (double& v : out) v /= total;
  return out;
}

bool operator==(const TrainingExample& a, const TrainingExample& b) {
  return a.key == b.key && a.actions == b.actions && a.counts == b.counts &&
         a.q == b.q && a.log2_size == b.log2_size;
}

std::string to_json_line(const TrainingExample& e) {
  nlohmann::json j;
  j["key"] = e.key.hex();
  j["actions"] = e.actions;
  j["counts"] = e.counts;
  j["q"] = e.q;
  if (e.log2_size.has_value()) j["log2_size"] = *e.log2_size;
  return j.dump();
}

TrainingExample training_example_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("bad training record: ") + ex.what());
  }
  try {
    TrainingExample e;
    e.key = StateKey::from_hex(j.at("key").get<std::string>());
    e.actions = j.at("actions").get<std::vector<int>>();
    e.counts = j.at("counts").get<std::vector<double>>();
    e.q = j.at("q").get<std::vector<double>>();
    if (j.contains("log2_size")) e.log2_size = j["log2_size"].get<double>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("bad training record: ") + ex.what());
  }
}

void save_training_examples(const std::string& path,
                            const std::vector<TrainingExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const TrainingExample& e : examples) out << to_json_line(e) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

std::vector<TrainingExample> load_training_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(training_example_from_json(line));
    } catch (const DataError& ex) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " +
                      ex.what());
    }
  }
  return out;
}

StateKey key_for(const SubproblemState& s, KeyMode mode) {
  return mode == KeyMode::unordered ? state_key(s) : ordered_state_key(s);
}

TableModel::TableModel(std::shared_ptr<PriorModel> fallback,
                       double default_log2_size, KeyMode key_mode)
    : fallback_(std::move(fallback)),
      default_log2_size_(default_log2_size),
      key_mode_(key_mode) {
  if (!fallback_) throw ContractError("TableModel requires a fallback prior");
  if (!std::isfinite(default_log2_size_) || default_log2_size_ < 0.0) {
    throw ContractError("value predictions must be finite and >= 0");
  }
}

std::vector<double> TableModel::prior(const SubproblemState& s) {
  const TableEntry* e = find(key_for(s, key_mode_));
  if (e == nullptr || e->counts.empty()) return fallback_->prior(s);

  std::vector<int> vars = unassigned_checked(s);
  std::unordered_map<int, double> stored;
  stored.reserve(e->actions.size());
  for (std::size_t i = 0; i < e->actions.size(); ++i) {
    stored[e->actions[i]] = e->counts[i];
  }
  std::vector<double> out;
  out.reserve(vars.size());
  double total = 0.0;
  std::size_t matched = 0;
  for (int v : vars) {
    auto it = stored.find(v);
    double mass = it == stored.end() ? 0.0 : it->second;
    if (it != stored.end()) ++matched;
    out.push_back(mass);
    total += mass;
  }
  // A key collision across states with different action sets would leave
  // stored mass unmatched; defer to the fallback rather than renormalize a
  // truncated distribution.
  if (matched != e->actions.size() || total <= 0.0) {
    return fallback_->prior(s);
  }
  for (double& v : out) v /= total;
  return out;
}

double TableModel::log2_size(const SubproblemState& s) {
  return table_value(*this, s);
}

std::string TableModel::name() const { return "table"; }

bool TableModel::contains(const StateKey& k) const {
  return table_.find(k) != table_.end();
}

const TableEntry* TableModel::find(const StateKey& k) const {
  auto it = table_.find(k);
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<TrainingExample> TableModel::export_examples() const {
  std::vector<TrainingExample> out;
  out.reserve(table_.size());
  for (const auto& [key, entry] : table_) {
    TrainingExample e;
    e.key = key;
    e.actions = entry.actions;
    e.counts = entry.counts;
    e.q = entry.q;
    if (entry.value_observations > 0) e.log2_size = entry.log2_size;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const TrainingExample& a, const TrainingExample& b) {
              return a.key.hex() < b.key.hex();
            });
  return out;
}

TableModel fit_table(const std::vector<TrainingExample>& examples,
                     std::shared_ptr<PriorModel> fallback,
                     double default_log2_size, KeyMode key_mode) {
  struct Accum {
    std::vector<int> actions;
    std::vector<double> counts_sum;
    std::vector<double> q_sum;
    double log2_sum = 0.0;
    std::size_t n_policy = 0;
    std::size_t n_value = 0;
  };
  std::unordered_map<StateKey, Accum, StateKeyHash> acc;

  for (const TrainingExample& e : examples) {
    Accum& a = acc[e.key];
    if (!e.counts.empty() || !e.q.empty()) {
      if (e.counts.size() != e.actions.size() ||
          e.q.size() != e.actions.size()) {
        throw DataError("vector lengths disagree for key " + e.key.hex());
      }
      double total = 0.0;
      for (double c : e.counts) {
        if (!(c >= 0.0)) {
          throw DataError("negative count for key " + e.key.hex());
        }
        total += c;
      }
      if (std::abs(total - 1.0) > 1e-6) {
        throw DataError("counts do not sum to 1 for key " + e.key.hex());
      }
      if (a.n_policy == 0) {
        a.actions = e.actions;
        a.counts_sum.assign(e.counts.size(), 0.0);
        a.q_sum.assign(e.q.size(), 0.0);
      } else if (a.actions != e.actions) {
        throw DataError("action sets disagree for key " + e.key.hex());
      }
      for (std::size_t i = 0; i < e.counts.size(); ++i) {
        a.counts_sum[i] += e.counts[i];
        a.q_sum[i] += e.q[i];
      }
      ++a.n_policy;
    }
    if (e.log2_size.has_value()) {
      if (!std::isfinite(*e.log2_size) || *e.log2_size < 0.0) {
        throw DataError("log2 size out of range for key " + e.key.hex());
      }
      a.log2_sum += *e.log2_size;
      ++a.n_value;
    }
  }

  TableModel model(std::move(fallback), default_log2_size, key_mode);
  for (auto& [key, a] : acc) {
    TableEntry entry;
    entry.actions = std::move(a.actions);
    if (a.n_policy > 0) {
      entry.counts = std::move(a.counts_sum);
      entry.q = std::move(a.q_sum);
      for (double& v : entry.counts) v /= static_cast<double>(a.n_policy);
      for (double& v : entry.q) v /= static_cast<double>(a.n_policy);
    }
    if (a.n_value > 0) {
      entry.log2_size = a.log2_sum / static_cast<double>(a.n_value);
    }
    entry.policy_observations = a.n_policy;
    entry.value_observations = a.n_value;
    model.table_.emplace(key, std::move(entry));
  }
  return model;
}

double table_value(const TableModel& m, const SubproblemState& s) {
  const TableEntry* e = m.find(key_for(s, m.key_mode()));
  if (e != nullptr && e->value_observations > 0) return e->log2_size;
  return m.default_log2_size();
}

PriorArgmaxPolicy::PriorArgmaxPolicy(std::shared_ptr<PriorModel> model)
    : model_(std::move(model)) {
  if (!model_) throw ContractError("PriorArgmaxPolicy requires a model");
}

int PriorArgmaxPolicy::choose(const SubproblemState& s) {
  std::vector<int> vars = open_vars_for_choice(s);
  std::vector<double> full = model_->prior(s);
  std::vector<double> p =
      restrict_renormalize(s.unassigned_variables(), full, vars);
  std::size_t best = 0;
  for (std::size_t i = 1; i < vars.size(); ++i) {
    if (p[i] > p[best]) best = i;  // ties keep the lowest variable
  }
  return vars[best];
}

std::string PriorArgmaxPolicy::name() const {
  return "argmax(" + model_->name() + ")";
}

}  // namespace mcfs
