#pragma once

#include "roman/model.hpp"

#include <compare>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace roman {

/// Execution strategy for the data-parallel kernels. `reference` is the
/// serial implementation kept for cross-checking; `openmp` is the default.
enum class Kernel { reference, openmp };

struct CommunityConfig {
  std::vector<StateIndex> services; // services[k - 1] is the state of service k
  StateIndex db = kNoState;         // kNoState when there is no data box

  auto operator<=>(const CommunityConfig &) const = default;
  bool operator==(const CommunityConfig &) const = default;
};

using ConfigIndex = std::uint32_t;

struct Move {
  ConfigIndex from;
  OpIndex op;
  ServiceIndex svc;
  ConfigIndex to;

  auto operator<=>(const Move &) const = default;
  bool operator==(const Move &) const = default;
};

/// Reachable part of the data-box-synchronized asynchronous product of the
/// community. Configs are sorted lexicographically by (service states, db);
/// moves by (from, op, svc, to).
class CommunityProduct {
public:
  struct Pred {
    ConfigIndex from;
    OpIndex op;
    ServiceIndex svc;
  };

  CommunityProduct(std::shared_ptr<const LinkedInstance> model, std::vector<CommunityConfig> configs,
                   ConfigIndex initial, std::vector<Move> moves);

  const LinkedInstance &model() const { return *model_; }
  const std::shared_ptr<const LinkedInstance> &model_ptr() const { return model_; }

  std::size_t size() const { return configs_.size(); }
  const std::vector<CommunityConfig> &configs() const { return configs_; }
  const CommunityConfig &config(ConfigIndex c) const { return configs_[c]; }
  ConfigIndex initial() const { return initial_; }
  const std::vector<Move> &moves() const { return moves_; }

  /// Destinations of moves (c, op, k, .), sorted.
  std::span<const ConfigIndex> successors(ConfigIndex c, OpIndex op, ServiceIndex k) const;
  /// All moves whose destination is `c`.
  std::span<const Pred> predecessors(ConfigIndex c) const;
  std::optional<ConfigIndex> find(const CommunityConfig &config) const;
  bool is_final(ConfigIndex c) const { return final_[c]; }

  /// "(a0,b0)" or "(a0,b0|d0)" with a data box.
  std::string config_label(const CommunityConfig &config) const;
  std::string config_label(ConfigIndex c) const { return config_label(configs_[c]); }

  /// Line-oriented dump of configs and moves; equal products give equal text.
  std::string canonical_text() const;
  std::string to_dot() const;

private:
  std::size_t bucket(ConfigIndex c, OpIndex op, ServiceIndex k) const {
    return (static_cast<std::size_t>(c) * model_->num_ops() + op) * model_->num_services() + (k - 1);
  }

  std::shared_ptr<const LinkedInstance> model_;
  std::vector<CommunityConfig> configs_;
  ConfigIndex initial_;
  std::vector<Move> moves_;
  std::vector<std::uint32_t> succ_offsets_;
  std::vector<ConfigIndex> succ_;
  std::vector<std::uint32_t> pred_offsets_;
  std::vector<Pred> pred_;
  std::vector<bool> final_;
};

std::shared_ptr<const CommunityProduct> build_product(std::shared_ptr<const LinkedInstance> model,
                                                      Kernel kernel = Kernel::openmp);

/// Same construction rooted at an arbitrary config (used when resuming a
/// run on a reduced community).
std::shared_ptr<const CommunityProduct> build_product_from(std::shared_ptr<const LinkedInstance> model,
                                                           const CommunityConfig &start,
                                                           Kernel kernel = Kernel::openmp);

inline std::shared_ptr<const CommunityProduct> build_product(const CompositionInstance &instance,
                                                             Kernel kernel = Kernel::openmp) {
  return build_product(LinkedInstance::link(instance), kernel);
}

/// Every service sits in one of its final states; the data box is ignored.
bool community_final(const CommunityConfig &config, const LinkedInstance &model);

/// Product moves leaving `config` (which need not be reachable), in
/// canonical order of (op, svc, successor config).
struct RawMove {
  OpIndex op;
  ServiceIndex svc;
  CommunityConfig to;
};
std::vector<RawMove> expand_config(const CommunityConfig &config, const LinkedInstance &model);

CommunityConfig initial_config(const LinkedInstance &model);

} // namespace roman
