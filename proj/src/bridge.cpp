#include "mcfs/bridge.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mcfs/errors.hpp"

namespace mcfs {

namespace {

constexpr double kSumTolerance = 0.01;

std::string kind_name(BridgeRequestKind kind) {
  return kind == BridgeRequestKind::prior ? "prior" : "value";
}

}  // namespace

BridgeRequest make_bridge_request(BridgeRequestKind kind,
                                  const SubproblemState& s) {
  BridgeRequest req;
  req.kind = kind;
  req.vars = s.residual().num_variables();
  for (const Clause& c : s.residual().clauses()) {
    std::vector<int> lits;
    lits.reserve(c.size());
    for (Lit l : c.lits()) lits.push_back(l.enc);
    req.clauses.push_back(std::move(lits));
  }
  for (Lit l : s.assigned_literals()) req.assigned.push_back(l.enc);
  std::sort(req.assigned.begin(), req.assigned.end(),
            [](int a, int b) { return std::abs(a) < std::abs(b); });
  return req;
}

std::string bridge_request_json(const BridgeRequest& req) {
  nlohmann::json j;
  j["kind"] = kind_name(req.kind);
  j["vars"] = req.vars;
  j["clauses"] = req.clauses;
  j["assigned"] = req.assigned;
  return j.dump();
}

BridgeRequest bridge_request_from_json(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw BridgeError("request is not a structured-text object");
  }
  BridgeRequest req;
  try {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "prior") {
      req.kind = BridgeRequestKind::prior;
    } else if (kind == "value") {
      req.kind = BridgeRequestKind::value;
    } else {
      throw BridgeError("unknown request kind: " + kind);
    }
    req.vars = j.at("vars").get<int>();
    req.clauses = j.at("clauses").get<std::vector<std::vector<int>>>();
    req.assigned = j.at("assigned").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw BridgeError(std::string("bad request fields: ") + e.what());
  }
  return req;
}

BridgeClient::BridgeClient(std::vector<std::string> argv,
                           std::chrono::milliseconds timeout)
    : proc_(argv), timeout_(timeout) {
  if (!proc_.alive()) {
    throw BridgeError("endpoint process failed to start");
  }
}

std::string BridgeClient::round_trip(const std::string& line) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!proc_.alive()) throw BridgeError("endpoint process is gone");
  proc_.send_line(line);
  std::string response;
  if (!proc_.read_line(response, timeout_)) {
    throw BridgeError("no response within " +
                      std::to_string(timeout_.count()) + " ms");
  }
  return response;
}

std::vector<double> BridgeClient::prior(const SubproblemState& s) {
  std::vector<int> unassigned = s.unassigned_variables();
  if (unassigned.empty()) {
    throw ContractError("prior requested with no unassigned variables");
  }
  std::string response =
      round_trip(bridge_request_json(
          make_bridge_request(BridgeRequestKind::prior, s)));

  nlohmann::json j = nlohmann::json::parse(response, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("prior")) {
    throw BridgeError("malformed prior response: " + response);
  }
  std::vector<double> p;
  try {
    p = j.at("prior").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw BridgeError(std::string("bad prior payload: ") + e.what());
  }
  if (p.size() != unassigned.size()) {
    throw BridgeError("prior length " + std::to_string(p.size()) +
                      " does not cover " + std::to_string(unassigned.size()) +
                      " unassigned variables");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw BridgeError("prior entries must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw BridgeError("prior mass " + std::to_string(sum) +
                      " deviates from 1 by more than 0.01");
  }
  for (double& v : p) v /= sum;
  return p;
}

double BridgeClient::value(const SubproblemState& s) {
  std::string response =
      round_trip(bridge_request_json(
          make_bridge_request(BridgeRequestKind::value, s)));

  nlohmann::json j = nlohmann::json::parse(response, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("value") ||
      !j.at("value").is_number()) {
    throw BridgeError("malformed value response: " + response);
  }
  double v = j.at("value").get<double>();
  if (!std::isfinite(v) || v < 0.0) {
    throw BridgeError("value prediction must be finite and >= 0, got " +
                      std::to_string(v));
  }
  return v;
}

BridgePrior::BridgePrior(std::shared_ptr<BridgeClient> client,
                         std::shared_ptr<PriorModel> fallback)
    : client_(std::move(client)), fallback_(std::move(fallback)) {
  if (!client_ || !fallback_) {
    throw ContractError("bridge prior requires a client and a fallback");
  }
}

std::vector<double> BridgePrior::prior(const SubproblemState& s) {
  try {
    return client_->prior(s);
  } catch (const BridgeError&) {
    ++fallback_uses_;
    return fallback_->prior(s);
  }
}

std::string BridgePrior::name() const {
  return "bridge-prior(" + fallback_->name() + ")";
}

BridgeValue::BridgeValue(std::shared_ptr<BridgeClient> client,
                         double fallback_log2)
    : client_(std::move(client)), fallback_log2_(fallback_log2) {
  if (!client_) throw ContractError("bridge value requires a client");
  if (!std::isfinite(fallback_log2_) || fallback_log2_ < 0.0) {
    throw ContractError("fallback log2 size must be finite and >= 0");
  }
}

double BridgeValue::log2_size(const SubproblemState& s) {
  try {
    return client_->value(s);
  } catch (const BridgeError&) {
    ++fallback_uses_;
    return fallback_log2_;
  }
}

std::string BridgeValue::name() const { return "bridge-value"; }

}  // namespace mcfs
