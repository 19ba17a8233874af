#include "roman/product.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace roman {

namespace {

struct ConfigHash {
  std::size_t operator()(const CommunityConfig &c) const noexcept {
    std::size_t h = std::hash<StateIndex>{}(c.db);
    for (auto s : c.services)
      h = h * 1000003u ^ std::hash<StateIndex>{}(s);
    return h;
  }
};

// Sorts configs, remaps the move endpoints and returns the product.
std::shared_ptr<const CommunityProduct>
canonicalize(std::shared_ptr<const LinkedInstance> model, std::vector<CommunityConfig> configs,
             ConfigIndex initial, std::vector<Move> moves) {
  std::vector<ConfigIndex> order(configs.size());
  for (ConfigIndex i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](ConfigIndex a, ConfigIndex b) { return configs[a] < configs[b]; });
  std::vector<ConfigIndex> rank(configs.size());
  std::vector<CommunityConfig> sorted(configs.size());
  for (ConfigIndex i = 0; i < order.size(); ++i) {
    rank[order[i]] = i;
    sorted[i] = std::move(configs[order[i]]);
  }
  for (auto &m : moves) {
    m.from = rank[m.from];
    m.to = rank[m.to];
  }
  std::sort(moves.begin(), moves.end());
  moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
  return std::make_shared<const CommunityProduct>(std::move(model), std::move(sorted), rank[initial],
                                                  std::move(moves));
}

std::shared_ptr<const CommunityProduct> build_reference(std::shared_ptr<const LinkedInstance> model,
                                                        const CommunityConfig &start) {
  std::map<CommunityConfig, ConfigIndex> index;
  std::vector<CommunityConfig> configs;
  std::vector<Move> moves;

  auto intern = [&](const CommunityConfig &c) {
    auto [it, fresh] = index.emplace(c, static_cast<ConfigIndex>(configs.size()));
    if (fresh)
      configs.push_back(c);
    return it->second;
  };

  intern(start);
  for (ConfigIndex next = 0; next < configs.size(); ++next) {
    auto raw = expand_config(configs[next], *model);
    for (auto &m : raw) {
      ConfigIndex to = intern(m.to);
      moves.push_back({next, m.op, m.svc, to});
    }
  }
  return canonicalize(std::move(model), std::move(configs), 0, std::move(moves));
}

// Level-synchronous frontier expansion. Each level is expanded in parallel
// into per-item buffers and merged serially in frontier order, so the
// discovered set is schedule-independent.
std::shared_ptr<const CommunityProduct> build_openmp(std::shared_ptr<const LinkedInstance> model,
                                                     const CommunityConfig &start) {
  std::unordered_map<CommunityConfig, ConfigIndex, ConfigHash> index;
  std::vector<CommunityConfig> configs;
  std::vector<Move> moves;

  index.emplace(start, 0);
  configs.push_back(start);

  std::size_t level_begin = 0;
  while (level_begin < configs.size()) {
    const std::size_t level_end = configs.size();
    const auto width = static_cast<std::ptrdiff_t>(level_end - level_begin);
    std::vector<std::vector<RawMove>> expanded(static_cast<std::size_t>(width));

#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < width; ++i)
      expanded[static_cast<std::size_t>(i)] = expand_config(configs[level_begin + i], *model);

    for (std::ptrdiff_t i = 0; i < width; ++i) {
      const auto from = static_cast<ConfigIndex>(level_begin + i);
      for (auto &m : expanded[static_cast<std::size_t>(i)]) {
        auto [it, fresh] = index.emplace(m.to, static_cast<ConfigIndex>(configs.size()));
        if (fresh)
          configs.push_back(std::move(m.to));
        moves.push_back({from, m.op, m.svc, it->second});
      }
    }
    level_begin = level_end;
  }
  return canonicalize(std::move(model), std::move(configs), 0, std::move(moves));
}

} // namespace

CommunityConfig initial_config(const LinkedInstance &model) {
  CommunityConfig c;
  for (const auto &s : model.services())
    c.services.push_back(s.initial);
  c.db = model.has_databox() ? model.databox().initial : kNoState;
  return c;
}

std::vector<RawMove> expand_config(const CommunityConfig &config, const LinkedInstance &model) {
  std::vector<RawMove> out;
  const auto n = static_cast<ServiceIndex>(model.num_services());
  for (OpIndex op = 0; op < model.num_ops(); ++op) {
    auto db_next = model.databox_next(config.db, op);
    for (ServiceIndex k = 1; k <= n; ++k) {
      for (const auto &edge : model.service_edges(k, config.services[k - 1], op)) {
        if (!edge.enabled_at(config.db))
          continue;
        for (auto d : db_next) {
          RawMove m{op, k, config};
          m.to.services[k - 1] = edge.to;
          m.to.db = d;
          out.push_back(std::move(m));
        }
      }
    }
  }
  return out;
}

bool community_final(const CommunityConfig &config, const LinkedInstance &model) {
  for (std::size_t i = 0; i < config.services.size(); ++i)
    if (!model.services()[i].final[config.services[i]])
      return false;
  return true;
}

std::shared_ptr<const CommunityProduct> build_product(std::shared_ptr<const LinkedInstance> model,
                                                      Kernel kernel) {
  auto start = initial_config(*model);
  return build_product_from(std::move(model), start, kernel);
}

std::shared_ptr<const CommunityProduct> build_product_from(std::shared_ptr<const LinkedInstance> model,
                                                           const CommunityConfig &start, Kernel kernel) {
  return kernel == Kernel::reference ? build_reference(std::move(model), start)
                                     : build_openmp(std::move(model), start);
}

CommunityProduct::CommunityProduct(std::shared_ptr<const LinkedInstance> model,
                                   std::vector<CommunityConfig> configs, ConfigIndex initial,
                                   std::vector<Move> moves)
    : model_(std::move(model)), configs_(std::move(configs)), initial_(initial),
      moves_(std::move(moves)) {
  const std::size_t buckets = configs_.size() * model_->num_ops() * model_->num_services();
  succ_offsets_.assign(buckets + 1, 0);
  for (const auto &m : moves_)
    ++succ_offsets_[bucket(m.from, m.op, m.svc) + 1];
  for (std::size_t i = 0; i < buckets; ++i)
    succ_offsets_[i + 1] += succ_offsets_[i];
  // moves_ is sorted by (from, op, svc, to), which is bucket order.
  succ_.reserve(moves_.size());
  for (const auto &m : moves_)
    succ_.push_back(m.to);

  pred_offsets_.assign(configs_.size() + 1, 0);
  for (const auto &m : moves_)
    ++pred_offsets_[m.to + 1];
  for (std::size_t i = 0; i < configs_.size(); ++i)
    pred_offsets_[i + 1] += pred_offsets_[i];
  pred_.resize(moves_.size());
  auto fill = pred_offsets_;
  for (const auto &m : moves_)
    pred_[fill[m.to]++] = {m.from, m.op, m.svc};

  final_.resize(configs_.size());
  for (std::size_t i = 0; i < configs_.size(); ++i)
    final_[i] = community_final(configs_[i], *model_);
}

std::span<const ConfigIndex> CommunityProduct::successors(ConfigIndex c, OpIndex op,
                                                          ServiceIndex k) const {
  auto b = bucket(c, op, k);
  return {succ_.data() + succ_offsets_[b], succ_offsets_[b + 1] - succ_offsets_[b]};
}

std::span<const CommunityProduct::Pred> CommunityProduct::predecessors(ConfigIndex c) const {
  return {pred_.data() + pred_offsets_[c], pred_offsets_[c + 1] - pred_offsets_[c]};
}

std::optional<ConfigIndex> CommunityProduct::find(const CommunityConfig &config) const {
  auto it = std::lower_bound(configs_.begin(), configs_.end(), config);
  if (it == configs_.end() || *it != config)
    return std::nullopt;
  return static_cast<ConfigIndex>(it - configs_.begin());
}

std::string CommunityProduct::config_label(const CommunityConfig &config) const {
  std::string out = "(";
  for (std::size_t i = 0; i < config.services.size(); ++i) {
    if (i)
      out += ',';
    out += model_->services()[i].states[config.services[i]];
  }
  if (config.db != kNoState)
    out += "|" + model_->databox().states[config.db];
  return out + ")";
}

std::string CommunityProduct::canonical_text() const {
  std::ostringstream os;
  os << "initial " << config_label(initial_) << '\n';
  for (ConfigIndex c = 0; c < configs_.size(); ++c)
    os << "config " << c << ' ' << config_label(c) << (final_[c] ? " final" : "") << '\n';
  for (const auto &m : moves_)
    os << "move " << m.from << ' ' << model_->op_name(m.op) << ' ' << m.svc << ' ' << m.to << '\n';
  return os.str();
}

std::string CommunityProduct::to_dot() const {
  std::ostringstream os;
  os << "digraph product {\n  rankdir=LR;\n  init [shape=point];\n";
  for (ConfigIndex c = 0; c < configs_.size(); ++c)
    os << "  n" << c << " [label=\"" << config_label(c) << "\""
       << (final_[c] ? ", shape=doublecircle" : ", shape=circle") << "];\n";
  os << "  init -> n" << initial_ << ";\n";
  for (const auto &m : moves_)
    os << "  n" << m.from << " -> n" << m.to << " [label=\"" << model_->op_name(m.op) << '/'
       << m.svc << "\"];\n";
  os << "}\n";
  return os.str();
}

} // namespace roman
