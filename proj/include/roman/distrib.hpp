#pragma once

#include "roman/synthesis.hpp"

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace roman {

struct Request {
  OpIndex op;
  bool operator==(const Request &) const = default;
};

/// Result of executing an operation, broadcast by the executor. Carries
/// the executor's new service state and the new data-box state.
struct Outcome {
  OpIndex op;
  ServiceIndex executor; // original index
  StateIndex service_state;
  StateIndex db_state;
  bool operator==(const Outcome &) const = default;
};

struct Message {
  std::size_t round;
  ServiceIndex sender; // 0 for the client
  std::variant<Request, Outcome> body;
  bool operator==(const Message &) const = default;
};

/// Per-service replica of the orchestrator. It sees its own service's
/// state and what arrives in its inbox; everything else is belief.
class LocalOrchestrator {
public:
  LocalOrchestrator(ServiceIndex svc, std::shared_ptr<const OrchestratorGenerator> generator,
                    Policy policy);

  ServiceIndex svc_index() const { return svc_; }
  const OrchestratorGenerator &generator() const { return *generator_; }
  const std::shared_ptr<const OrchestratorGenerator> &generator_ptr() const { return generator_; }
  SimPair tracked() const { return belief_.pair; }
  const OrchestrationState &belief() const { return belief_; }
  StateIndex own_state() const { return own_state_; }
  const std::vector<Message> &inbox() const { return inbox_; }

  void deliver(const Message &m) { inbox_.push_back(m); }

  /// Consumes a Request from the inbox. Returns the Outcome message when
  /// this peer is the executor, resolving nondeterminism with `observed`.
  std::optional<Message> handle_request(std::optional<Observation> observed);
  /// Consumes an Outcome from the inbox and advances the belief.
  void handle_outcome();

  /// Switches to a recomputed generator (after a failure elsewhere).
  void adopt(std::shared_ptr<const OrchestratorGenerator> generator);

private:
  Message pop();

  ServiceIndex svc_;
  std::shared_ptr<const OrchestratorGenerator> generator_;
  OrchestrationState belief_;
  StateIndex own_state_;
  std::vector<Message> inbox_;
  std::optional<OpIndex> pending_;
};

std::vector<LocalOrchestrator> derive_locals(const OrchestratorGenerator &generator, Policy policy = {});

/// Single-process, round-synchronous reliable broadcast network.
class NetworkHarness {
public:
  struct RoundRecord {
    std::size_t round;
    OpIndex op;
    ServiceIndex executor;
    SimPair pair;
    CommunityConfig config;
    std::string pair_label;
  };

  NetworkHarness(const OrchestratorGenerator &generator, Policy policy = {});

  std::vector<LocalOrchestrator> &peers() { return peers_; }
  const std::vector<LocalOrchestrator> &peers() const { return peers_; }
  const LocalOrchestrator *peer(ServiceIndex svc) const;
  std::size_t round() const { return round_; }
  const std::set<ServiceIndex> &failed() const { return failed_; }
  const std::vector<RoundRecord> &trace() const { return trace_; }
  const std::vector<Message> &transcript() const { return transcript_; }
  const std::vector<std::string> &log() const { return log_; }

  /// Marks a peer as crashed: it receives nothing from now on.
  void mark_failed(ServiceIndex svc);
  /// All non-failed peers hold the same tracked pair.
  bool coherent() const;

  /// Delivers `m` to every non-failed peer, in sending order.
  void broadcast(const Message &m);

  /// `round op executor new_pair` lines followed by the message transcript.
  std::string trace_log() const;

private:
  friend NetworkHarness dist_round(NetworkHarness, OpIndex, std::optional<Observation>);
  friend NetworkHarness dist_handle_failure(NetworkHarness, const std::set<ServiceIndex> &);

  std::vector<LocalOrchestrator> peers_;
  std::set<ServiceIndex> failed_;
  std::size_t round_ = 0;
  std::vector<RoundRecord> trace_;
  std::vector<Message> transcript_;
  std::vector<std::string> log_;
  // Names for the trace log, captured at construction.
  std::vector<std::string> op_names_;
  std::vector<std::pair<ServiceIndex, std::vector<std::string>>> state_names_;
  std::vector<std::string> db_names_;
};

/// One request/outcome round. Errors: E_NO_TARGET_TRANSITION,
/// E_EXECUTOR_FAILED, E_OBSERVATION_MISMATCH, E_OBSERVATION_REQUIRED.
/// On error the input harness is left untouched.
NetworkHarness dist_round(NetworkHarness harness, OpIndex op,
                          std::optional<Observation> observed = std::nullopt);

/// Every surviving peer recomputes from its own belief; failed peers are
/// dropped. Throws E_UNREALIZABLE_FROM_HERE when survivors cannot go on.
NetworkHarness dist_handle_failure(NetworkHarness harness, const std::set<ServiceIndex> &failed);

struct FailureEvent {
  std::size_t round; // fails before this round runs (1-based)
  ServiceIndex peer;
};

/// Drives a whole request sequence, applying failures at round boundaries.
NetworkHarness run_distributed(NetworkHarness harness, const std::vector<OpIndex> &requests,
                               const std::vector<std::optional<Observation>> &observations = {},
                               const std::vector<FailureEvent> &failures = {});

} // namespace roman
