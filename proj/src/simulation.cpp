#include "roman/simulation.hpp"

#include "roman/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <set>

namespace roman {

SimulationRelation::SimulationRelation(std::size_t target_states, std::size_t configs,
                                       std::vector<char> members, bool is_largest)
    : target_states_(target_states), configs_(configs), members_(std::move(members)),
      is_largest_(is_largest) {
  for (std::size_t t = 0; t < target_states_; ++t)
    for (std::size_t c = 0; c < configs_; ++c)
      if (members_[t * configs_ + c])
        pairs_.push_back({static_cast<StateIndex>(t), static_cast<ConfigIndex>(c)});
}

namespace {

struct TargetPred {
  StateIndex from;
  OpIndex op;
};

std::vector<std::vector<TargetPred>> target_predecessors(const LinkedInstance &model) {
  const auto &tgt = model.target();
  std::vector<std::vector<TargetPred>> preds(tgt.size());
  for (StateIndex t = 0; t < tgt.size(); ++t)
    for (OpIndex op = 0; op < model.num_ops(); ++op)
      if (auto nx = model.target_next(t, op); nx != kNoState)
        preds[nx].push_back({t, op});
  return preds;
}

// Pairs that can only be in the relation if not ruled out by finality.
std::vector<char> initial_candidates(const CommunityProduct &product) {
  const auto &tgt = product.model().target();
  const std::size_t nc = product.size();
  std::vector<char> alive(tgt.size() * nc, 0);
  for (StateIndex t = 0; t < tgt.size(); ++t)
    for (ConfigIndex c = 0; c < nc; ++c)
      alive[t * nc + c] = (!tgt.final[t] || product.is_final(c)) ? 1 : 0;
  return alive;
}

// Calls `visit(t_prev, c_prev)` for every pair whose check reads (t, c).
template <class Visit>
void for_each_dependent(const CommunityProduct &product,
                        const std::vector<std::vector<TargetPred>> &tpreds, SimPair p,
                        Visit &&visit) {
  for (const auto &cp : product.predecessors(p.config))
    for (const auto &tp : tpreds[p.t_state])
      if (tp.op == cp.op)
        visit(tp.from, cp.from);
}

SimulationRelation reference_kernel(const CommunityProduct &product, SimulationStats &stats) {
  const std::size_t nc = product.size();
  const std::size_t nt = product.model().target().size();
  auto alive = initial_candidates(product);
  auto tpreds = target_predecessors(product.model());
  auto member = [&](StateIndex t, ConfigIndex c) { return alive[t * nc + c] != 0; };

  std::deque<SimPair> work;
  std::vector<char> queued(alive.size(), 0);
  for (StateIndex t = 0; t < nt; ++t)
    for (ConfigIndex c = 0; c < nc; ++c)
      if (alive[t * nc + c]) {
        work.push_back({t, c});
        queued[t * nc + c] = 1;
        ++stats.candidates;
      }

  while (!work.empty()) {
    SimPair p = work.front();
    work.pop_front();
    queued[p.t_state * nc + p.config] = 0;
    ++stats.rechecks;
    if (satisfies_conditions(product, member, p))
      continue;
    alive[p.t_state * nc + p.config] = 0;
    ++stats.removals;
    for_each_dependent(product, tpreds, p, [&](StateIndex t, ConfigIndex c) {
      const std::size_t i = t * nc + c;
      if (alive[i] && !queued[i]) {
        queued[i] = 1;
        work.push_back({t, c});
      }
    });
  }
  return SimulationRelation(nt, nc, std::move(alive), true);
}

// Round-based refinement: each round re-evaluates the dirty pairs in
// parallel against the membership snapshot taken at the start of the round,
// then applies all removals at once. Dependents of removed pairs form the
// next round's dirty set. The result is the same greatest fixpoint.
SimulationRelation openmp_kernel(const CommunityProduct &product, SimulationStats &stats) {
  const std::size_t nc = product.size();
  const std::size_t nt = product.model().target().size();
  auto alive = initial_candidates(product);
  auto tpreds = target_predecessors(product.model());
  auto member = [&](StateIndex t, ConfigIndex c) { return alive[t * nc + c] != 0; };

  std::vector<SimPair> dirty;
  for (StateIndex t = 0; t < nt; ++t)
    for (ConfigIndex c = 0; c < nc; ++c)
      if (alive[t * nc + c])
        dirty.push_back({t, c});
  stats.candidates = dirty.size();
  std::size_t live = dirty.size();

  std::vector<char> marked(alive.size(), 0);
  while (!dirty.empty()) {
    const auto count = static_cast<std::ptrdiff_t>(dirty.size());
    std::vector<char> fails(dirty.size(), 0);

#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < count; ++i)
      fails[static_cast<std::size_t>(i)] =
          satisfies_conditions(product, member, dirty[static_cast<std::size_t>(i)]) ? 0 : 1;

    stats.rechecks += dirty.size();
    ++stats.rounds;
    std::vector<SimPair> removed;
    for (std::size_t i = 0; i < dirty.size(); ++i)
      if (fails[i]) {
        alive[dirty[i].t_state * nc + dirty[i].config] = 0;
        removed.push_back(dirty[i]);
      }
    stats.removals += removed.size();
    live -= removed.size();
    stats.round_sizes.push_back(live);

    std::vector<SimPair> next;
    for (const auto &p : removed)
      for_each_dependent(product, tpreds, p, [&](StateIndex t, ConfigIndex c) {
        const std::size_t i = t * nc + c;
        if (alive[i] && !marked[i]) {
          marked[i] = 1;
          next.push_back({t, c});
        }
      });
    std::sort(next.begin(), next.end());
    for (const auto &p : next)
      marked[p.t_state * nc + p.config] = 0;
    dirty = std::move(next);
  }
  return SimulationRelation(nt, nc, std::move(alive), true);
}

} // namespace

SimulationRelation compute_largest_simulation(const CommunityProduct &product, Kernel kernel,
                                              SimulationStats *stats) {
  SimulationStats local;
  auto &s = stats ? *stats : local;
  s = SimulationStats{};
  return kernel == Kernel::reference ? reference_kernel(product, s) : openmp_kernel(product, s);
}

bool is_simulation(const CommunityProduct &product, const std::vector<SimPair> &pairs) {
  const std::size_t nc = product.size();
  std::vector<char> in(product.model().target().size() * nc, 0);
  for (const auto &p : pairs)
    in[p.t_state * nc + p.config] = 1;
  auto member = [&](StateIndex t, ConfigIndex c) { return in[t * nc + c] != 0; };
  return std::all_of(pairs.begin(), pairs.end(),
                     [&](const SimPair &p) { return satisfies_conditions(product, member, p); });
}

bool is_realizable(const CommunityProduct &product, const SimulationRelation &relation) {
  return relation.contains(product.model().target().initial, product.initial());
}

bool is_realizable(const CompositionInstance &instance) {
  auto product = build_product(instance);
  return is_realizable(*product, compute_largest_simulation(*product));
}

bool simulates(const TransitionSystem &big, const TransitionSystem &small) {
  CompositionInstance inst;
  std::set<std::string> seen;
  for (const auto *sys : {&big, &small})
    for (const auto &tr : sys->transitions)
      if (seen.insert(tr.op).second)
        inst.alphabet.push_back(tr.op);
  inst.services.push_back(big);
  inst.services.front().id = "big";
  inst.target = small;
  inst.target.id = "small";

  for (const auto &d : validate(inst))
    if (d.code == "E_NONDET_TARGET")
      throw Error(d.code, "simulated system must be deterministic: " + d.message);
  auto product = build_product(inst);
  return is_realizable(*product, compute_largest_simulation(*product));
}

std::string relation_to_json(const CommunityProduct &product, const SimulationRelation &relation) {
  const auto &model = product.model();
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto &p : relation.pairs()) {
    const auto &cfg = product.config(p.config);
    nlohmann::ordered_json j;
    j["target"] = model.target().states[p.t_state];
    std::vector<std::string> svc;
    for (std::size_t i = 0; i < cfg.services.size(); ++i)
      svc.push_back(model.services()[i].states[cfg.services[i]]);
    j["services"] = svc;
    if (cfg.db != kNoState)
      j["db"] = model.databox().states[cfg.db];
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

} // namespace roman
