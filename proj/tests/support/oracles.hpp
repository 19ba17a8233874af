#pragma once

// Independent oracles over the string-level instance. They share no code
// with the library algorithms: configurations are vectors of state names,
// moves are recomputed from the raw transition lists on every query.

#include "roman/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace roman::testing {

/// Service states (in service order) followed by the data-box state, or ""
/// when there is no data box.
using NamedConfig = std::vector<std::string>;

struct NamedMove {
  NamedConfig from;
  std::string op;
  int svc; // 1-based
  NamedConfig to;

  auto operator<=>(const NamedMove &) const = default;
};

class Oracle {
public:
  explicit Oracle(CompositionInstance inst) : inst_(std::move(inst)) { explore(); }

  const CompositionInstance &instance() const { return inst_; }
  const std::set<NamedConfig> &configs() const { return configs_; }
  const std::set<NamedMove> &moves() const { return moves_; }
  NamedConfig initial() const {
    NamedConfig c;
    for (const auto &s : inst_.services)
      c.push_back(s.initial);
    c.push_back(inst_.databox ? inst_.databox->initial : "");
    return c;
  }

  /// Successors of `c` when service `k` performs `op`.
  std::set<NamedConfig> step(const NamedConfig &c, const std::string &op, int k) const {
    std::set<NamedConfig> out;
    const auto &svc = inst_.services[k - 1];
    const std::string &db = c.back();
    for (const auto &tr : svc.transitions) {
      if (tr.from != c[k - 1] || tr.op != op)
        continue;
      if (tr.guard && std::find(tr.guard->begin(), tr.guard->end(), db) == tr.guard->end())
        continue;
      for (const auto &d : db_next(db, op)) {
        NamedConfig n = c;
        n[k - 1] = tr.to;
        n.back() = d;
        out.insert(n);
      }
    }
    return out;
  }

  bool config_final(const NamedConfig &c) const {
    for (std::size_t i = 0; i < inst_.services.size(); ++i) {
      const auto &f = inst_.services[i].finals;
      if (std::find(f.begin(), f.end(), c[i]) == f.end())
        return false;
    }
    return true;
  }

  bool target_final(const std::string &t) const {
    const auto &f = inst_.target.finals;
    return std::find(f.begin(), f.end(), t) != f.end();
  }

  std::vector<std::pair<std::string, std::string>> target_out(const std::string &t) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &tr : inst_.target.transitions)
      if (tr.from == t)
        out.emplace_back(tr.op, tr.to);
    return out;
  }

  using Pair = std::pair<std::string, NamedConfig>;

  /// Greatest fixpoint by plain Kleene iteration from the full relation.
  std::set<Pair> naive_simulation() const {
    std::set<Pair> rel;
    for (const auto &t : inst_.target.states)
      for (const auto &c : configs_)
        rel.insert({t, c});
    for (bool changed = true; changed;) {
      changed = false;
      std::set<Pair> next;
      for (const auto &p : rel)
        if (pair_ok(p, rel))
          next.insert(p);
        else
          changed = true;
      rel = std::move(next);
    }
    return rel;
  }

  bool pair_ok(const Pair &p, const std::set<Pair> &rel) const {
    const auto &[t, c] = p;
    if (target_final(t) && !config_final(c))
      return false;
    for (const auto &[op, t2] : target_out(t)) {
      bool some = false;
      for (int k = 1; k <= static_cast<int>(inst_.services.size()) && !some; ++k) {
        auto succ = step(c, op, k);
        if (succ.empty())
          continue;
        some = std::all_of(succ.begin(), succ.end(),
                           [&](const NamedConfig &n) { return rel.count({t2, n}) > 0; });
      }
      if (!some)
        return false;
    }
    return true;
  }

  /// Top-down bounded-depth search over delegation strategies: the
  /// orchestrator survives `depth` more requests from (t, c).
  bool survives(const std::string &t, const NamedConfig &c, std::size_t depth) const {
    auto key = std::make_tuple(t, c, depth);
    if (auto it = memo_.find(key); it != memo_.end())
      return it->second;
    bool ok = !(target_final(t) && !config_final(c));
    if (ok && depth > 0) {
      for (const auto &[op, t2] : target_out(t)) {
        bool some = false;
        for (int k = 1; k <= static_cast<int>(inst_.services.size()) && !some; ++k) {
          auto succ = step(c, op, k);
          if (succ.empty())
            continue;
          some = std::all_of(succ.begin(), succ.end(), [&](const NamedConfig &n) {
            return survives(t2, n, depth - 1);
          });
        }
        if (!some) {
          ok = false;
          break;
        }
      }
    }
    memo_[key] = ok;
    return ok;
  }

  /// Realizable iff the orchestrator survives as many requests as there
  /// are (target state, configuration) pairs.
  bool realizable_by_search() const {
    std::size_t bound = inst_.target.states.size() * configs_.size();
    return survives(inst_.target.initial, initial(), bound);
  }

private:
  std::vector<std::string> db_next(const std::string &db, const std::string &op) const {
    if (!inst_.databox)
      return {""};
    std::vector<std::string> out;
    for (const auto &tr : inst_.databox->transitions)
      if (tr.from == db && tr.op == op)
        out.push_back(tr.to);
    if (out.empty())
      out.push_back(db);
    return out;
  }

  void explore() {
    std::vector<NamedConfig> stack{initial()};
    configs_.insert(stack.back());
    while (!stack.empty()) {
      NamedConfig c = stack.back();
      stack.pop_back();
      for (const auto &op : inst_.alphabet)
        for (int k = 1; k <= static_cast<int>(inst_.services.size()); ++k)
          for (const auto &n : step(c, op, k)) {
            moves_.insert({c, op, k, n});
            if (configs_.insert(n).second)
              stack.push_back(n);
          }
    }
  }

  CompositionInstance inst_;
  std::set<NamedConfig> configs_;
  std::set<NamedMove> moves_;
  mutable std::map<std::tuple<std::string, NamedConfig, std::size_t>, bool> memo_;
};

} // namespace roman::testing

#include "roman/product.hpp"

namespace roman::testing {

inline NamedConfig named(const CommunityProduct &product, const CommunityConfig &c) {
  const auto &m = product.model();
  NamedConfig out;
  for (std::size_t i = 0; i < c.services.size(); ++i)
    out.push_back(m.service(static_cast<ServiceIndex>(i + 1)).states[c.services[i]]);
  out.push_back(c.db == kNoState ? "" : m.databox().states[c.db]);
  return out;
}

inline NamedConfig named(const CommunityProduct &product, ConfigIndex c) {
  return named(product, product.config(c));
}

} // namespace roman::testing
