#include "roman/game.hpp"

#include "roman/error.hpp"

#include <algorithm>
#include <deque>

namespace roman {

std::string SafetyGame::label(GameStateIndex s) const {
  const auto &st = states[s];
  if (!st.alive)
    return "sink";
  const auto &model = product->model();
  std::string out = st.turn == Turn::env ? "env" : "ctrl";
  out += "(" + model.target().states[st.t_state] + "," + product->config_label(st.config);
  if (st.pending)
    out += "," + model.op_name(*st.pending);
  return out + ")";
}

SafetyGame encode_game(std::shared_ptr<const CommunityProduct> product) {
  const auto &model = product->model();
  const auto nt = static_cast<StateIndex>(model.target().size());
  const auto nc = static_cast<ConfigIndex>(product->size());
  const auto n = static_cast<ServiceIndex>(model.num_services());

  SafetyGame g;
  g.product = product;
  for (StateIndex t = 0; t < nt; ++t)
    for (ConfigIndex c = 0; c < nc; ++c)
      g.states.push_back({Turn::env, t, c, std::nullopt, true});
  g.env_moves.resize(g.states.size());
  for (StateIndex t = 0; t < nt; ++t)
    for (ConfigIndex c = 0; c < nc; ++c)
      for (OpIndex op = 0; op < model.num_ops(); ++op)
        if (model.target_next(t, op) != kNoState) {
          g.env_moves[g.env_state(t, c)].push_back(static_cast<GameStateIndex>(g.states.size()));
          g.states.push_back({Turn::ctrl, t, c, op, true});
        }
  g.sink = static_cast<GameStateIndex>(g.states.size());
  g.states.push_back({Turn::env, 0, 0, std::nullopt, false});
  g.env_moves.resize(g.states.size());
  g.ctrl_moves.resize(g.states.size());

  const auto count = static_cast<std::ptrdiff_t>(g.states.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto &st = g.states[static_cast<std::size_t>(i)];
    if (st.turn != Turn::ctrl)
      continue;
    auto t_next = model.target_next(st.t_state, *st.pending);
    auto &moves = g.ctrl_moves[static_cast<std::size_t>(i)];
    for (ServiceIndex k = 1; k <= n; ++k) {
      CtrlMove m{k, {}};
      for (auto c : product->successors(st.config, *st.pending, k))
        m.outcomes.push_back(g.env_state(t_next, c));
      if (m.outcomes.empty())
        m.outcomes.push_back(g.sink);
      moves.push_back(std::move(m));
    }
  }

  g.safe.resize(g.states.size());
  for (std::size_t s = 0; s < g.states.size(); ++s) {
    const auto &st = g.states[s];
    g.safe[s] = st.alive && (!model.target().final[st.t_state] || product->is_final(st.config));
  }
  g.initial = g.env_state(model.target().initial, product->initial());
  return g;
}

namespace {

bool stays(const CtrlMove &m, const std::vector<char> &zone) {
  return std::all_of(m.outcomes.begin(), m.outcomes.end(), [&](auto s) { return zone[s] != 0; });
}

bool cpre_holds(const SafetyGame &g, const std::vector<char> &zone, std::size_t s) {
  if (!g.safe[s])
    return false;
  if (g.states[s].turn == Turn::env)
    return std::all_of(g.env_moves[s].begin(), g.env_moves[s].end(),
                       [&](auto x) { return zone[x] != 0; });
  return std::any_of(g.ctrl_moves[s].begin(), g.ctrl_moves[s].end(),
                     [&](const CtrlMove &m) { return stays(m, zone); });
}

// Backward propagation with per-state counters: an env state dies with its
// first losing successor, a ctrl state when every delegation is broken.
std::vector<char> reference_fixpoint(const SafetyGame &g) {
  const std::size_t ns = g.size();
  struct Pred {
    GameStateIndex state;
    std::uint32_t move; // ctrl move index; unused for env predecessors
  };
  std::vector<std::vector<Pred>> preds(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    for (auto x : g.env_moves[s])
      preds[x].push_back({static_cast<GameStateIndex>(s), 0});
    for (std::uint32_t m = 0; m < g.ctrl_moves[s].size(); ++m)
      for (auto x : g.ctrl_moves[s][m].outcomes)
        preds[x].push_back({static_cast<GameStateIndex>(s), m});
  }

  std::vector<char> zone(g.safe);
  std::vector<std::vector<char>> broken(ns);
  std::vector<std::size_t> intact(ns, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    broken[s].assign(g.ctrl_moves[s].size(), 0);
    intact[s] = g.ctrl_moves[s].size();
  }

  std::deque<GameStateIndex> dead;
  for (std::size_t s = 0; s < ns; ++s)
    if (!zone[s])
      dead.push_back(static_cast<GameStateIndex>(s));
  auto kill = [&](GameStateIndex s) {
    if (zone[s]) {
      zone[s] = 0;
      dead.push_back(s);
    }
  };
  // A ctrl state can start without any usable move.
  for (std::size_t s = 0; s < ns; ++s)
    if (g.states[s].turn == Turn::ctrl && g.ctrl_moves[s].empty())
      kill(static_cast<GameStateIndex>(s));

  while (!dead.empty()) {
    auto s = dead.front();
    dead.pop_front();
    for (const auto &p : preds[s]) {
      if (!zone[p.state])
        continue;
      if (g.states[p.state].turn == Turn::env) {
        kill(p.state);
      } else if (!broken[p.state][p.move]) {
        broken[p.state][p.move] = 1;
        if (--intact[p.state] == 0)
          kill(p.state);
      }
    }
  }
  return zone;
}

std::vector<char> openmp_fixpoint(const SafetyGame &g) {
  std::vector<char> zone(g.safe);
  const auto ns = static_cast<std::ptrdiff_t>(g.size());
  for (;;) {
    std::vector<char> next(zone.size());
    int changed = 0;
#pragma omp parallel for schedule(dynamic, 256) reduction(| : changed)
    for (std::ptrdiff_t s = 0; s < ns; ++s) {
      const auto i = static_cast<std::size_t>(s);
      next[i] = zone[i] && cpre_holds(g, zone, i);
      changed |= next[i] != zone[i];
    }
    zone = std::move(next);
    if (!changed)
      return zone;
  }
}

} // namespace

std::vector<char> controllable_predecessor(const SafetyGame &game, const std::vector<char> &zone) {
  std::vector<char> out(game.size());
  for (std::size_t s = 0; s < game.size(); ++s)
    out[s] = cpre_holds(game, zone, s);
  return out;
}

WinningRegion solve_game(const SafetyGame &game, Kernel kernel) {
  WinningRegion r;
  r.winning = kernel == Kernel::reference ? reference_fixpoint(game) : openmp_fixpoint(game);
  r.strategy.assign(game.size(), 0);
  for (std::size_t s = 0; s < game.size(); ++s) {
    if (!r.winning[s] || game.states[s].turn != Turn::ctrl)
      continue;
    for (const auto &m : game.ctrl_moves[s])
      if (stays(m, r.winning)) {
        r.strategy[s] = m.k;
        break;
      }
  }
  return r;
}

OrchestratorGenerator region_to_generator(const SafetyGame &game, const WinningRegion &region) {
  const auto &product = *game.product;
  const auto &model = product.model();
  if (!region.contains(game.initial))
    throw Error("E_UNREALIZABLE", "initial game state is not winning");

  const std::size_t nt = model.target().size();
  const std::size_t nc = product.size();
  std::vector<char> members(nt * nc, 0);
  std::vector<OrchestratorGenerator::OmegaEntry> omega;
  for (std::size_t s = 0; s < nt * nc; ++s) {
    if (!region.contains(static_cast<GameStateIndex>(s)))
      continue;
    members[s] = 1;
    const auto &env = game.states[s];
    for (auto ctrl : game.env_moves[s]) {
      OrchestratorGenerator::OmegaEntry e{{env.t_state, env.config}, *game.states[ctrl].pending, {}};
      for (const auto &m : game.ctrl_moves[ctrl])
        if (stays(m, region.winning))
          e.delegates.push_back(m.k);
      omega.push_back(std::move(e));
    }
  }
  std::vector<ServiceIndex> origin;
  for (ServiceIndex k = 1; k <= model.num_services(); ++k)
    origin.push_back(k);
  const auto &init = game.states[game.initial];
  return OrchestratorGenerator(game.product, SimulationRelation(nt, nc, std::move(members), true),
                               std::move(omega), {init.t_state, init.config}, std::move(origin));
}

} // namespace roman
