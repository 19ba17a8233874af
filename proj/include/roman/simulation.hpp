#pragma once

#include "roman/product.hpp"

#include <compare>
#include <string>
#include <vector>

namespace roman {

struct SimPair {
  StateIndex t_state;
  ConfigIndex config;

  auto operator<=>(const SimPair &) const = default;
  bool operator==(const SimPair &) const = default;
};

/// A set of (target state, community config) pairs over a fixed product,
/// kept as a dense membership table plus the sorted pair list.
class SimulationRelation {
public:
  SimulationRelation() = default;
  SimulationRelation(std::size_t target_states, std::size_t configs, std::vector<char> members,
                     bool is_largest);

  bool contains(SimPair p) const { return members_[index(p)] != 0; }
  bool contains(StateIndex t, ConfigIndex c) const { return contains(SimPair{t, c}); }
  const std::vector<SimPair> &pairs() const { return pairs_; }
  const std::vector<char> &members() const { return members_; }
  std::size_t size() const { return pairs_.size(); }
  bool is_largest() const { return is_largest_; }

  std::size_t target_states() const { return target_states_; }
  std::size_t configs() const { return configs_; }

  bool operator==(const SimulationRelation &o) const { return pairs_ == o.pairs_; }

private:
  std::size_t index(SimPair p) const { return static_cast<std::size_t>(p.t_state) * configs_ + p.config; }

  std::size_t target_states_ = 0;
  std::size_t configs_ = 0;
  std::vector<char> members_;
  std::vector<SimPair> pairs_;
  bool is_largest_ = false;
};

struct SimulationStats {
  std::size_t candidates = 0; // pairs passing the finality filter
  std::size_t rechecks = 0;   // pair evaluations, including the first
  std::size_t removals = 0;
  std::size_t rounds = 0;     // refinement rounds (openmp kernel)
  std::vector<std::size_t> round_sizes; // live pairs after each round
};

/// Largest ND-simulation of the target by the community product.
SimulationRelation compute_largest_simulation(const CommunityProduct &product,
                                              Kernel kernel = Kernel::openmp,
                                              SimulationStats *stats = nullptr);

/// Whether service k can take target transition (t --op--> t') from config
/// c: k has at least one move on op at c and every such move lands in a
/// pair (t', c') accepted by `member`.
template <class Member>
bool can_delegate(const CommunityProduct &product, const Member &member, StateIndex t_next,
                  ConfigIndex c, OpIndex op, ServiceIndex k) {
  auto succ = product.successors(c, op, k);
  if (succ.empty())
    return false;
  for (auto next : succ)
    if (!member(t_next, next))
      return false;
  return true;
}

/// Both simulation conditions at (t, c) with respect to `member`.
template <class Member>
bool satisfies_conditions(const CommunityProduct &product, const Member &member, SimPair p) {
  const auto &model = product.model();
  if (model.target().final[p.t_state] && !product.is_final(p.config))
    return false;
  const auto n = static_cast<ServiceIndex>(model.num_services());
  for (OpIndex op = 0; op < model.num_ops(); ++op) {
    auto t_next = model.target_next(p.t_state, op);
    if (t_next == kNoState)
      continue;
    bool matched = false;
    for (ServiceIndex k = 1; k <= n && !matched; ++k)
      matched = can_delegate(product, member, t_next, p.config, op, k);
    if (!matched)
      return false;
  }
  return true;
}

/// True iff every pair of `pairs` satisfies both conditions relative to
/// `pairs` itself, i.e. the set is a simulation.
bool is_simulation(const CommunityProduct &product, const std::vector<SimPair> &pairs);

bool is_realizable(const CommunityProduct &product, const SimulationRelation &relation);
bool is_realizable(const CompositionInstance &instance);

/// Standalone check: does `big` simulate `small`? `small` must be
/// deterministic (E_NONDET_TARGET otherwise). Alphabet is the union of labels.
bool simulates(const TransitionSystem &big, const TransitionSystem &small);

/// Canonical JSON array of pairs, sorted by (target state, config).
std::string relation_to_json(const CommunityProduct &product, const SimulationRelation &relation);

} // namespace roman
