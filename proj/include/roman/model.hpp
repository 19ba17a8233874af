#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roman {

using StateIndex = std::uint32_t;
using OpIndex = std::uint32_t;
/// Service indices are 1-based: service k is `services[k - 1]`.
using ServiceIndex = std::uint32_t;

inline constexpr StateIndex kNoState = static_cast<StateIndex>(-1);

struct Transition {
  std::string from;
  std::string op;
  std::optional<std::vector<std::string>> guard;
  std::string to;

  bool operator==(const Transition &) const = default;
};

struct TransitionSystem {
  std::string id;
  std::vector<std::string> states;
  std::string initial;
  std::vector<std::string> finals;
  std::vector<Transition> transitions;

  bool operator==(const TransitionSystem &) const = default;
};

/// Shared finite-state memory. Same shape as a service minus finals; its
/// transitions carry no guards.
struct DataBox {
  std::string id;
  std::vector<std::string> states;
  std::string initial;
  std::vector<Transition> transitions;

  bool operator==(const DataBox &) const = default;
};

struct CompositionInstance {
  std::vector<std::string> alphabet;
  std::vector<TransitionSystem> services;
  std::optional<DataBox> databox;
  TransitionSystem target;

  bool operator==(const CompositionInstance &) const = default;
};

struct Diagnostic {
  std::string code;
  std::string message;

  bool operator==(const Diagnostic &) const = default;
};

/// Checks every structural invariant of an instance. Returns one diagnostic
/// per violation, in a stable order; empty means the instance is usable.
std::vector<Diagnostic> validate(const CompositionInstance &instance);

/// Parses the JSON instance format. Throws roman::Error with code E_SYNTAX
/// (message carries the byte offset), E_SCHEMA for shape problems, or the
/// code of the first validation diagnostic.
CompositionInstance parse_instance(std::string_view text);

/// Schema-level parse only: no invariant checks beyond JSON shape. Lets
/// callers report every diagnostic at once via validate().
CompositionInstance read_instance(std::string_view text);

/// Canonical JSON encoding (2-space indent, keys in schema order).
std::string serialize_instance(const CompositionInstance &instance);

bool is_identifier(std::string_view name);

/// Index-resolved view of a validated instance used by every algorithm.
/// Guards are stored as per-databox-state membership flags.
class LinkedInstance {
public:
  struct Edge {
    StateIndex to;
    std::vector<bool> guard; // empty: unguarded

    bool enabled_at(StateIndex db) const {
      return guard.empty() || (db != kNoState && guard[db]);
    }
  };

  struct System {
    std::string id;
    std::vector<std::string> states;
    StateIndex initial = 0;
    std::vector<bool> final;
    // succ[state * num_ops + op]
    std::vector<std::vector<Edge>> succ;

    std::size_t size() const { return states.size(); }
  };

  /// Throws roman::Error carrying the first diagnostic if `instance` is
  /// not valid.
  static std::shared_ptr<const LinkedInstance> link(const CompositionInstance &instance);

  const CompositionInstance &source() const { return source_; }
  std::size_t num_ops() const { return ops_.size(); }
  std::size_t num_services() const { return services_.size(); }
  const std::vector<std::string> &ops() const { return ops_; }
  const std::string &op_name(OpIndex op) const { return ops_[op]; }
  std::optional<OpIndex> find_op(std::string_view name) const;

  const System &service(ServiceIndex k) const { return services_[k - 1]; }
  const std::vector<System> &services() const { return services_; }
  const System &target() const { return target_; }
  bool has_databox() const { return databox_.has_value(); }
  const System &databox() const { return *databox_; }

  const std::vector<Edge> &service_edges(ServiceIndex k, StateIndex s, OpIndex op) const {
    return services_[k - 1].succ[s * ops_.size() + op];
  }
  /// Target successor on `op`, or kNoState.
  StateIndex target_next(StateIndex t, OpIndex op) const;
  /// Data-box successors on `op`; a state with no declared transition
  /// self-loops.
  std::vector<StateIndex> databox_next(StateIndex db, OpIndex op) const;

  std::optional<StateIndex> find_state(const System &sys, std::string_view name) const;

private:
  CompositionInstance source_;
  std::vector<std::string> ops_;
  std::vector<System> services_;
  System target_;
  std::optional<System> databox_;
};

} // namespace roman
