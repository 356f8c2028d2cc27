// Line-protocol bridge to an external prior/value model.
//
// The engine's model layer is pluggable: any process that speaks a one-line
// request / one-line response protocol over its standard streams can serve
// priors and value predictions, so a learned model in another language or
// runtime drops in without recompiling. Requests carry the residual formula
// and the assignment list; prior responses are distributions over the
// state's unassigned variables in ascending variable order.
//
//   request:  {"kind":"prior"|"value","vars":N,
//              "clauses":[[lit,...],...],"assigned":[lit,...]}
//   response: {"prior":[p,...]}  or  {"value":x}
//
// Prior responses are gated on their mass: a total off by more than 0.01 is
// a protocol failure, anything closer is renormalized to an exact
// distribution. The adapter classes catch protocol failures and fall back
// to a configured local model, so a crashed or misbehaving endpoint
// degrades the search instead of stopping it.
#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mcfs/model.hpp"
#include "mcfs/state.hpp"
#include "mcfs/subprocess.hpp"

namespace mcfs {

enum class BridgeRequestKind { prior, value };

// The wire payload, exposed for serialization tests and external tooling.
struct BridgeRequest {
  BridgeRequestKind kind = BridgeRequestKind::prior;
  int vars = 0;
  std::vector<std::vector<int>> clauses;  // residual, DIMACS literals
  std::vector<int> assigned;              // all assigned literals, ascending

  friend bool operator==(const BridgeRequest& a, const BridgeRequest& b) {
    return a.kind == b.kind && a.vars == b.vars && a.clauses == b.clauses &&
           a.assigned == b.assigned;
  }
};

BridgeRequest make_bridge_request(BridgeRequestKind kind,
                                  const SubproblemState& s);
std::string bridge_request_json(const BridgeRequest& req);
// Throws BridgeError on malformed request text.
BridgeRequest bridge_request_from_json(const std::string& line);

// One endpoint process. Requests are serialized per endpoint: at most one
// in-flight request, guarded internally, so one client can be shared.
// Protocol failures (timeout, EOF, malformed or invalid responses) raise
// BridgeError.
class BridgeClient {
 public:
  explicit BridgeClient(
      std::vector<std::string> argv,
      std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

  bool alive() const { return proc_.alive(); }

  // Distribution over s.unassigned_variables(), validated and renormalized.
  std::vector<double> prior(const SubproblemState& s);
  // Predicted log2 proof-tree size.
  double value(const SubproblemState& s);

 private:
  std::string round_trip(const std::string& line);

  LineProcess proc_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
};

// PriorModel served by a bridge endpoint; protocol failures fall back to
// the local model.
class BridgePrior : public PriorModel {
 public:
  BridgePrior(std::shared_ptr<BridgeClient> client,
              std::shared_ptr<PriorModel> fallback);

  std::vector<double> prior(const SubproblemState& s) override;
  std::string name() const override;
  std::uint64_t fallback_uses() const { return fallback_uses_; }

 private:
  std::shared_ptr<BridgeClient> client_;
  std::shared_ptr<PriorModel> fallback_;
  std::uint64_t fallback_uses_ = 0;
};

// ValueModel served by a bridge endpoint; protocol failures fall back to a
// constant prediction.
class BridgeValue : public ValueModel {
 public:
  explicit BridgeValue(std::shared_ptr<BridgeClient> client,
                       double fallback_log2 = 0.0);

  double log2_size(const SubproblemState& s) override;
  std::string name() const override;
  std::uint64_t fallback_uses() const { return fallback_uses_; }

 private:
  std::shared_ptr<BridgeClient> client_;
  double fallback_log2_;
  std::uint64_t fallback_uses_ = 0;
};

}  // namespace mcfs
