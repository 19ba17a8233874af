#include "roman/synthesis.hpp"

#include "roman/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <queue>
#include <sstream>

namespace roman {

// ---------------------------------------------------------------------------
// Policy

Policy Policy::parse(std::string_view text) {
  if (text == "lowest-index")
    return lowest_index();
  if (text == "round-robin")
    return round_robin();
  constexpr std::string_view prefix = "avoid-set";
  if (text.substr(0, prefix.size()) == prefix) {
    std::set<ServiceIndex> avoid;
    auto rest = text.substr(prefix.size());
    if (!rest.empty()) {
      if (rest.front() != ':')
        throw Error("E_BAD_POLICY", "unknown policy '" + std::string(text) + "'");
      rest.remove_prefix(1);
      while (!rest.empty()) {
        auto comma = rest.find(',');
        auto item = rest.substr(0, comma);
        ServiceIndex k = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), k);
        if (ec != std::errc{} || ptr != item.data() + item.size() || k == 0)
          throw Error("E_BAD_POLICY", "bad service index '" + std::string(item) + "'");
        avoid.insert(k);
        if (comma == std::string_view::npos)
          break;
        rest.remove_prefix(comma + 1);
      }
    }
    return avoid_set(std::move(avoid));
  }
  throw Error("E_BAD_POLICY", "unknown policy '" + std::string(text) + "'");
}

std::string Policy::name() const {
  switch (kind_) {
  case Kind::lowest_index:
    return "lowest-index";
  case Kind::round_robin:
    return "round-robin";
  case Kind::avoid_set: {
    std::string out = "avoid-set";
    char sep = ':';
    for (auto k : avoid_) {
      out += sep + std::to_string(k);
      sep = ',';
    }
    return out;
  }
  }
  return "?";
}

ServiceIndex Policy::choose(const std::vector<ServiceIndex> &candidates, ServiceIndex last) const {
  switch (kind_) {
  case Kind::lowest_index:
    break;
  case Kind::round_robin: {
    auto it = std::upper_bound(candidates.begin(), candidates.end(), last);
    if (it != candidates.end())
      return *it;
    break;
  }
  case Kind::avoid_set:
    for (auto k : candidates)
      if (!avoid_.count(k))
        return k;
    break;
  }
  return candidates.front();
}

// ---------------------------------------------------------------------------
// Generator

OrchestratorGenerator::OrchestratorGenerator(std::shared_ptr<const CommunityProduct> product,
                                             SimulationRelation relation, std::vector<OmegaEntry> omega,
                                             SimPair initial, std::vector<ServiceIndex> origin)
    : product_(std::move(product)), relation_(std::move(relation)), omega_(std::move(omega)),
      initial_(initial), origin_(std::move(origin)) {}

std::optional<ServiceIndex> OrchestratorGenerator::local(ServiceIndex original) const {
  auto it = std::find(origin_.begin(), origin_.end(), original);
  if (it == origin_.end())
    return std::nullopt;
  return static_cast<ServiceIndex>(it - origin_.begin() + 1);
}

const std::vector<ServiceIndex> &OrchestratorGenerator::delegates(SimPair p, OpIndex op) const {
  static const std::vector<ServiceIndex> none;
  auto it = std::lower_bound(omega_.begin(), omega_.end(), std::pair{p, op},
                             [](const OmegaEntry &e, const std::pair<SimPair, OpIndex> &key) {
                               return std::pair{e.pair, e.op} < key;
                             });
  if (it == omega_.end() || it->pair != p || it->op != op)
    return none;
  return it->delegates;
}

std::vector<ServiceIndex> OrchestratorGenerator::original_delegates(SimPair p, OpIndex op) const {
  std::vector<ServiceIndex> out;
  for (auto k : delegates(p, op))
    out.push_back(original(k));
  std::sort(out.begin(), out.end());
  return out;
}

std::string OrchestratorGenerator::pair_label(SimPair p) const {
  return "(" + model().target().states[p.t_state] + "," + product_->config_label(p.config) + ")";
}

namespace {

nlohmann::ordered_json pair_json(const OrchestratorGenerator &g, SimPair p) {
  const auto &model = g.model();
  const auto &cfg = g.product().config(p.config);
  nlohmann::ordered_json j;
  j["target"] = model.target().states[p.t_state];
  std::vector<std::string> svc;
  for (std::size_t i = 0; i < cfg.services.size(); ++i)
    svc.push_back(model.services()[i].states[cfg.services[i]]);
  j["services"] = svc;
  if (cfg.db != kNoState)
    j["db"] = model.databox().states[cfg.db];
  return j;
}

} // namespace

std::string OrchestratorGenerator::to_json() const {
  nlohmann::ordered_json root;
  root["initial"] = pair_json(*this, initial_);
  root["services"] = origin_;
  auto pairs = nlohmann::ordered_json::array();
  for (const auto &p : relation_.pairs())
    pairs.push_back(pair_json(*this, p));
  root["pairs"] = std::move(pairs);
  auto omega = nlohmann::ordered_json::array();
  for (const auto &e : omega_) {
    nlohmann::ordered_json j = pair_json(*this, e.pair);
    j["op"] = model().op_name(e.op);
    j["delegates"] = original_delegates(e.pair, e.op);
    omega.push_back(std::move(j));
  }
  root["omega"] = std::move(omega);
  return root.dump(2) + "\n";
}

std::string OrchestratorGenerator::to_dot(const Policy &policy) const {
  // A node is a generator pair plus the last executor, which only
  // round-robin reads.
  using Node = std::pair<SimPair, ServiceIndex>;
  std::map<Node, std::size_t> ids;
  std::vector<Node> nodes;
  std::ostringstream edges;
  auto intern = [&](Node n) {
    auto [it, fresh] = ids.emplace(n, nodes.size());
    if (fresh)
      nodes.push_back(n);
    return it->second;
  };
  const bool track_last = policy.kind() == Policy::Kind::round_robin;
  intern({initial_, 0});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto [p, last] = nodes[i];
    for (OpIndex op = 0; op < model().num_ops(); ++op) {
      auto t_next = model().target_next(p.t_state, op);
      if (t_next == kNoState)
        continue;
      auto cands = original_delegates(p, op);
      if (cands.empty())
        continue;
      auto k = policy.choose(cands, last);
      for (auto c : product_->successors(p.config, op, *local(k))) {
        auto j = intern({SimPair{t_next, c}, track_last ? k : 0});
        edges << "  n" << i << " -> n" << j << " [label=\"" << model().op_name(op) << '/' << k
              << "\"];\n";
      }
    }
  }
  std::ostringstream os;
  os << "digraph orchestrator {\n  rankdir=LR;\n  init [shape=point];\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto p = nodes[i].first;
    os << "  n" << i << " [label=\"" << pair_label(p) << "\""
       << (model().target().final[p.t_state] ? ", shape=doublecircle" : ", shape=circle") << "];\n";
  }
  os << "  init -> n0;\n" << edges.str() << "}\n";
  return os.str();
}

OrchestratorGenerator build_generator(std::shared_ptr<const CommunityProduct> product,
                                      SimulationRelation relation, std::vector<ServiceIndex> origin,
                                      StateIndex t_start) {
  const auto &model = product->model();
  if (!relation.is_largest())
    throw Error("E_PRECONDITION", "generator requires the largest simulation");
  SimPair initial{t_start == kNoState ? model.target().initial : t_start, product->initial()};
  if (!relation.contains(initial))
    throw Error("E_UNREALIZABLE", "initial pair is not in the largest simulation");
  if (origin.empty())
    for (ServiceIndex k = 1; k <= model.num_services(); ++k)
      origin.push_back(k);

  const auto &pairs = relation.pairs();
  const auto count = static_cast<std::ptrdiff_t>(pairs.size());
  const auto n = static_cast<ServiceIndex>(model.num_services());
  auto member = [&](StateIndex t, ConfigIndex c) { return relation.contains(t, c); };
  std::vector<std::vector<OrchestratorGenerator::OmegaEntry>> per_pair(pairs.size());

#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto p = pairs[static_cast<std::size_t>(i)];
    auto &out = per_pair[static_cast<std::size_t>(i)];
    for (OpIndex op = 0; op < model.num_ops(); ++op) {
      auto t_next = model.target_next(p.t_state, op);
      if (t_next == kNoState)
        continue;
      OrchestratorGenerator::OmegaEntry e{p, op, {}};
      for (ServiceIndex k = 1; k <= n; ++k)
        if (can_delegate(*product, member, t_next, p.config, op, k))
          e.delegates.push_back(k);
      out.push_back(std::move(e));
    }
  }

  std::vector<OrchestratorGenerator::OmegaEntry> omega;
  for (auto &v : per_pair)
    for (auto &e : v)
      omega.push_back(std::move(e));
  return OrchestratorGenerator(std::move(product), std::move(relation), std::move(omega), initial,
                               std::move(origin));
}

OrchestratorGenerator synthesize(const CompositionInstance &instance, Kernel kernel) {
  auto product = build_product(instance, kernel);
  auto relation = compute_largest_simulation(*product, kernel);
  return build_generator(product, std::move(relation));
}

// ---------------------------------------------------------------------------
// Execution

OrchestrationState start(const OrchestratorGenerator &generator, Policy policy) {
  OrchestrationState s;
  s.pair = generator.initial();
  s.policy = std::move(policy);
  return s;
}

ServiceIndex choose_delegate(const OrchestratorGenerator &generator, const OrchestrationState &state,
                             OpIndex op) {
  const auto &model = generator.model();
  if (op >= model.num_ops() || model.target_next(state.pair.t_state, op) == kNoState)
    throw Error("E_NO_TARGET_TRANSITION",
                "target state '" + model.target().states[state.pair.t_state] +
                    "' has no transition on '" + (op < model.num_ops() ? model.op_name(op) : "?") +
                    "'");
  auto cands = generator.original_delegates(state.pair, op);
  if (cands.empty())
    throw Error("E_NO_DELEGATE", "no service can take '" + model.op_name(op) + "' at " +
                                     generator.pair_label(state.pair));
  return state.policy.choose(cands, state.last);
}

OrchestrationState step(const OrchestratorGenerator &generator, const OrchestrationState &state,
                        OpIndex op, std::optional<Observation> observed) {
  const auto &model = generator.model();
  const auto &product = generator.product();
  const ServiceIndex k = choose_delegate(generator, state, op);
  const ServiceIndex local = *generator.local(k);
  const auto t_next = model.target_next(state.pair.t_state, op);
  auto succ = product.successors(state.pair.config, op, local);

  ConfigIndex next;
  if (observed) {
    CommunityConfig cfg = product.config(state.pair.config);
    cfg.services[local - 1] = observed->service_state;
    cfg.db = model.has_databox() ? observed->db_state : kNoState;
    auto found = product.find(cfg);
    if (!found || !std::binary_search(succ.begin(), succ.end(), *found))
      throw Error("E_OBSERVATION_MISMATCH", "observed outcome " + product.config_label(cfg) +
                                                " is not a move of service " + std::to_string(k) +
                                                " on '" + model.op_name(op) + "'");
    next = *found;
  } else {
    if (succ.size() != 1)
      throw Error("E_OBSERVATION_REQUIRED", "service " + std::to_string(k) + " has " +
                                                std::to_string(succ.size()) + " outcomes on '" +
                                                model.op_name(op) + "'");
    next = succ.front();
  }

  OrchestrationState out = state;
  out.pair = {t_next, next};
  out.last = k;
  out.history.push_back({op, k, product.config(next), t_next});
  return out;
}

OrchestratorGenerator handle_failure(const OrchestratorGenerator &generator,
                                     const OrchestrationState &state,
                                     const std::set<ServiceIndex> &failed) {
  const auto &model = generator.model();
  for (auto k : failed)
    if (!generator.local(k))
      throw Error("E_BAD_INDEX", "service " + std::to_string(k) + " is not part of the community");

  CompositionInstance reduced = model.source();
  reduced.services.clear();
  std::vector<ServiceIndex> origin;
  const auto &current = generator.product().config(state.pair.config);
  CommunityConfig projected;
  projected.db = current.db;
  for (ServiceIndex local = 1; local <= model.num_services(); ++local) {
    if (failed.count(generator.original(local)))
      continue;
    reduced.services.push_back(model.source().services[local - 1]);
    origin.push_back(generator.original(local));
    projected.services.push_back(current.services[local - 1]);
  }
  if (reduced.services.empty())
    throw Error("E_UNREALIZABLE_FROM_HERE", "no available service left");

  auto product = build_product_from(LinkedInstance::link(reduced), projected);
  auto relation = compute_largest_simulation(*product);
  SimPair here{state.pair.t_state, product->initial()};
  if (!relation.contains(here))
    throw Error("E_UNREALIZABLE_FROM_HERE",
                "target not realizable from " + generator.pair_label(state.pair) +
                    " without the failed services");
  return build_generator(std::move(product), std::move(relation), std::move(origin), here.t_state);
}

OrchestrationState resume(const OrchestrationState &state, const OrchestratorGenerator &generator) {
  OrchestrationState out = state;
  out.pair = generator.initial();
  return out;
}

OrchestrationState replay(const OrchestratorGenerator &generator, Policy policy,
                          const std::vector<HistoryEntry> &history) {
  auto state = start(generator, std::move(policy));
  for (const auto &h : history) {
    auto local = generator.local(h.svc);
    if (!local)
      throw Error("E_BAD_INDEX", "history names service " + std::to_string(h.svc));
    Observation obs{h.config.services[*local - 1], h.config.db};
    state = step(generator, state, h.op, obs);
  }
  return state;
}

} // namespace roman
