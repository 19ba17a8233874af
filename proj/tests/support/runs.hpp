#pragma once

// Run enumeration over a generator and sampling of realizable instances.

#include "roman/synthesis.hpp"
#include "support/random_instance.hpp"

#include <functional>

namespace roman::testing {

inline CompositionInstance realizable_instance(InstanceGenerator &gen, int min_services = 1) {
  for (;;) {
    auto inst = gen.instance();
    if (static_cast<int>(inst.services.size()) < min_services)
      continue;
    if (is_realizable(inst))
      return inst;
  }
}

/// Every observation the environment may pick after `k` runs `op` at `pair`.
inline std::vector<Observation> outcomes(const OrchestratorGenerator &g, SimPair pair, OpIndex op,
                                         ServiceIndex k) {
  std::vector<Observation> out;
  auto local = *g.local(k);
  for (auto c : g.product().successors(pair.config, op, local)) {
    const auto &cfg = g.product().config(c);
    out.push_back({cfg.services[local - 1], cfg.db});
  }
  return out;
}

/// Visits every target-conformant request sequence of length <= depth with
/// every environment resolution. `visit` sees each reached state; a thrown
/// roman::Error propagates.
inline void enumerate_runs(const OrchestratorGenerator &g, const OrchestrationState &from,
                           std::size_t depth,
                           const std::function<void(const OrchestrationState &)> &visit) {
  visit(from);
  if (depth == 0)
    return;
  const auto &model = g.model();
  for (OpIndex op = 0; op < model.num_ops(); ++op) {
    if (model.target_next(from.pair.t_state, op) == kNoState)
      continue;
    auto k = choose_delegate(g, from, op);
    for (const auto &obs : outcomes(g, from.pair, op, k))
      enumerate_runs(g, step(g, from, op, obs), depth - 1, visit);
  }
}

/// One random conformant run of up to `len` steps; stops early at target
/// states without outgoing transitions.
inline OrchestrationState random_run(const OrchestratorGenerator &g, OrchestrationState s,
                                     std::size_t len, InstanceGenerator &rng,
                                     std::vector<OpIndex> *ops = nullptr,
                                     std::vector<Observation> *obs = nullptr) {
  const auto &model = g.model();
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<OpIndex> enabled;
    for (OpIndex op = 0; op < model.num_ops(); ++op)
      if (model.target_next(s.pair.t_state, op) != kNoState)
        enabled.push_back(op);
    if (enabled.empty())
      break;
    auto op = enabled[rng.uniform(0, static_cast<int>(enabled.size()) - 1)];
    auto k = choose_delegate(g, s, op);
    auto choices = outcomes(g, s.pair, op, k);
    auto o = choices[rng.uniform(0, static_cast<int>(choices.size()) - 1)];
    if (ops)
      ops->push_back(op);
    if (obs)
      obs->push_back(o);
    s = step(g, s, op, o);
  }
  return s;
}

} // namespace roman::testing
