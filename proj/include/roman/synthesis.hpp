#pragma once

#include "roman/simulation.hpp"

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace roman {

/// Deterministic rule for picking one delegate out of omega(p, o).
/// Indices handed to a policy are original community indices.
class Policy {
public:
  enum class Kind { lowest_index, round_robin, avoid_set };

  Policy() = default;
  static Policy lowest_index() { return Policy(Kind::lowest_index, {}); }
  static Policy round_robin() { return Policy(Kind::round_robin, {}); }
  static Policy avoid_set(std::set<ServiceIndex> avoid) { return Policy(Kind::avoid_set, std::move(avoid)); }
  /// "lowest-index", "round-robin", "avoid-set:2,3". Throws E_BAD_POLICY.
  static Policy parse(std::string_view text);

  Kind kind() const { return kind_; }
  const std::set<ServiceIndex> &avoided() const { return avoid_; }
  std::string name() const;

  /// `candidates` must be sorted and non-empty. `last` is the previous
  /// executor (0 before the first delegation).
  ServiceIndex choose(const std::vector<ServiceIndex> &candidates, ServiceIndex last) const;

  bool operator==(const Policy &) const = default;

private:
  Policy(Kind kind, std::set<ServiceIndex> avoid) : kind_(kind), avoid_(std::move(avoid)) {}

  Kind kind_ = Kind::lowest_index;
  std::set<ServiceIndex> avoid_;
};

/// The largest simulation together with the delegation map omega. Service
/// indices stored in omega are local to this generator's community;
/// `origin()` maps them back to the original community after failures.
class OrchestratorGenerator {
public:
  struct OmegaEntry {
    SimPair pair;
    OpIndex op;
    std::vector<ServiceIndex> delegates; // local indices, sorted

    bool operator==(const OmegaEntry &) const = default;
  };

  OrchestratorGenerator(std::shared_ptr<const CommunityProduct> product, SimulationRelation relation,
                        std::vector<OmegaEntry> omega, SimPair initial, std::vector<ServiceIndex> origin);

  const CommunityProduct &product() const { return *product_; }
  const std::shared_ptr<const CommunityProduct> &product_ptr() const { return product_; }
  const LinkedInstance &model() const { return product_->model(); }
  const SimulationRelation &relation() const { return relation_; }
  const std::vector<OmegaEntry> &omega() const { return omega_; }
  SimPair initial() const { return initial_; }
  const std::vector<ServiceIndex> &origin() const { return origin_; }
  ServiceIndex original(ServiceIndex local) const { return origin_[local - 1]; }
  std::optional<ServiceIndex> local(ServiceIndex original) const;

  /// omega(p, op) in local indices; empty if undefined.
  const std::vector<ServiceIndex> &delegates(SimPair p, OpIndex op) const;
  /// omega(p, op) mapped to original indices.
  std::vector<ServiceIndex> original_delegates(SimPair p, OpIndex op) const;

  std::string pair_label(SimPair p) const;
  std::string to_json() const;
  /// Mealy-style DOT of the orchestrator obtained by resolving omega with
  /// `policy`; edges are labelled "op/svc".
  std::string to_dot(const Policy &policy) const;

  bool operator==(const OrchestratorGenerator &o) const {
    return relation_ == o.relation_ && omega_ == o.omega_ && initial_ == o.initial_ &&
           origin_ == o.origin_;
  }

private:
  std::shared_ptr<const CommunityProduct> product_;
  SimulationRelation relation_;
  std::vector<OmegaEntry> omega_;
  SimPair initial_;
  std::vector<ServiceIndex> origin_;
};

/// Builds omega from a largest relation. The initial pair is the product's
/// initial config with `t_start` (default: the target's initial state);
/// throws E_UNREALIZABLE when it is not in the relation. An empty `origin`
/// means the identity numbering.
OrchestratorGenerator build_generator(std::shared_ptr<const CommunityProduct> product,
                                      SimulationRelation relation,
                                      std::vector<ServiceIndex> origin = {},
                                      StateIndex t_start = kNoState);

/// instance -> product -> largest simulation -> generator.
OrchestratorGenerator synthesize(const CompositionInstance &instance, Kernel kernel = Kernel::openmp);

/// Outcome chosen by the environment for a nondeterministic step: the new
/// state of the executing service and the new data-box state.
struct Observation {
  StateIndex service_state;
  StateIndex db_state = kNoState;
};

struct HistoryEntry {
  OpIndex op;
  ServiceIndex svc; // original index
  CommunityConfig config;
  StateIndex t_state;

  bool operator==(const HistoryEntry &) const = default;
};

struct OrchestrationState {
  SimPair pair;
  std::vector<HistoryEntry> history;
  Policy policy;
  ServiceIndex last = 0;
};

OrchestrationState start(const OrchestratorGenerator &generator, Policy policy = {});

/// Delegates `op` from `state`. Errors: E_NO_TARGET_TRANSITION,
/// E_OBSERVATION_MISMATCH, E_OBSERVATION_REQUIRED.
OrchestrationState step(const OrchestratorGenerator &generator, const OrchestrationState &state,
                        OpIndex op, std::optional<Observation> observed = std::nullopt);

/// The delegate `step` would pick, as an original index.
ServiceIndex choose_delegate(const OrchestratorGenerator &generator, const OrchestrationState &state,
                             OpIndex op);

/// Recomputes over the community without `failed` (original indices),
/// starting from the projection of the current pair. Throws
/// E_UNREALIZABLE_FROM_HERE when that pair is not simulated any more.
OrchestratorGenerator handle_failure(const OrchestratorGenerator &generator,
                                     const OrchestrationState &state,
                                     const std::set<ServiceIndex> &failed);

/// Moves `state` onto a generator returned by handle_failure, keeping the
/// history.
OrchestrationState resume(const OrchestrationState &state, const OrchestratorGenerator &generator);

/// Re-executes `history` from the generator's initial pair, using each
/// entry's recorded config as the observation.
OrchestrationState replay(const OrchestratorGenerator &generator, Policy policy,
                          const std::vector<HistoryEntry> &history);

} // namespace roman
