#pragma once

#include "roman/synthesis.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roman {

enum class Turn : std::uint8_t { env, ctrl };

/// A node of the bipartite arena. Env nodes wait for the client's next
/// request; ctrl nodes carry the pending request and wait for the
/// orchestrator's delegation. The single sink has alive == false.
struct GameState {
  Turn turn = Turn::env;
  StateIndex t_state = 0;
  ConfigIndex config = 0;
  std::optional<OpIndex> pending;
  bool alive = true;

  bool operator==(const GameState &) const = default;
};

using GameStateIndex = std::uint32_t;

/// Delegation to service k; the environment then picks any of `outcomes`.
struct CtrlMove {
  ServiceIndex k;
  std::vector<GameStateIndex> outcomes;

  bool operator==(const CtrlMove &) const = default;
};

/// Canonical layout: env states first, ordered by (target state, config);
/// then ctrl states by (target state, config, op); the sink last.
struct SafetyGame {
  std::shared_ptr<const CommunityProduct> product;
  std::vector<GameState> states;
  GameStateIndex initial = 0;
  GameStateIndex sink = 0;
  std::vector<std::vector<GameStateIndex>> env_moves; // empty for ctrl states
  std::vector<std::vector<CtrlMove>> ctrl_moves;      // empty for env states
  std::vector<char> safe;

  std::size_t size() const { return states.size(); }
  GameStateIndex env_state(StateIndex t, ConfigIndex c) const {
    return static_cast<GameStateIndex>(static_cast<std::size_t>(t) * product->size() + c);
  }
  std::string label(GameStateIndex s) const;

  /// Structural equality (the product pointer is not compared).
  bool operator==(const SafetyGame &o) const {
    return states == o.states && initial == o.initial && sink == o.sink &&
           env_moves == o.env_moves && ctrl_moves == o.ctrl_moves && safe == o.safe;
  }
};

struct WinningRegion {
  std::vector<char> winning;
  std::vector<ServiceIndex> strategy; // per state; 0 where undefined

  bool contains(GameStateIndex s) const { return winning[s] != 0; }
  bool operator==(const WinningRegion &) const = default;
};

SafetyGame encode_game(std::shared_ptr<const CommunityProduct> product);

/// Greatest fixpoint of safe ∩ CPre.
WinningRegion solve_game(const SafetyGame &game, Kernel kernel = Kernel::openmp);

/// One application of safe ∩ CPre(zone).
std::vector<char> controllable_predecessor(const SafetyGame &game, const std::vector<char> &zone);

/// Projects winning env states onto pairs and reads omega off the ctrl
/// states. Throws E_UNREALIZABLE when the initial state is losing.
OrchestratorGenerator region_to_generator(const SafetyGame &game, const WinningRegion &region);

enum class GameFormat { neutral, smv };

std::string export_game(const SafetyGame &game, GameFormat format);

/// Reads the neutral format back over the product it was exported from.
/// Throws E_GAME_SYNTAX.
SafetyGame parse_neutral_game(std::string_view text, std::shared_ptr<const CommunityProduct> product);

} // namespace roman
