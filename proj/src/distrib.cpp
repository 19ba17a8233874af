#include "roman/distrib.hpp"

#include "roman/error.hpp"

#include <algorithm>
#include <sstream>

namespace roman {

LocalOrchestrator::LocalOrchestrator(ServiceIndex svc,
                                     std::shared_ptr<const OrchestratorGenerator> generator,
                                     Policy policy)
    : svc_(svc), generator_(std::move(generator)), belief_(start(*generator_, std::move(policy))) {
  auto local = generator_->local(svc_);
  if (!local)
    throw Error("E_BAD_INDEX", "service " + std::to_string(svc_) + " is not in the community");
  own_state_ = generator_->product().config(belief_.pair.config).services[*local - 1];
}

Message LocalOrchestrator::pop() {
  if (inbox_.empty())
    throw Error("E_PROTOCOL", "peer " + std::to_string(svc_) + " has an empty inbox");
  Message m = inbox_.front();
  inbox_.erase(inbox_.begin());
  return m;
}

std::optional<Message> LocalOrchestrator::handle_request(std::optional<Observation> observed) {
  Message m = pop();
  const auto *req = std::get_if<Request>(&m.body);
  if (!req)
    throw Error("E_PROTOCOL", "peer " + std::to_string(svc_) + " expected a request");
  const ServiceIndex k = choose_delegate(*generator_, belief_, req->op);
  pending_ = req->op;
  if (k != svc_)
    return std::nullopt;

  // Execute on our own service: its moves from our own state, synchronized
  // with the data-box state we believe in.
  const auto &model = generator_->model();
  const auto local = *generator_->local(svc_);
  const auto db = generator_->product().config(belief_.pair.config).db;
  std::vector<Observation> outcomes;
  for (const auto &edge : model.service_edges(local, own_state_, req->op)) {
    if (!edge.enabled_at(db))
      continue;
    for (auto d : model.databox_next(db, req->op))
      outcomes.push_back({edge.to, d});
  }

  Observation chosen;
  if (observed) {
    Observation o{observed->service_state, model.has_databox() ? observed->db_state : kNoState};
    auto it = std::find_if(outcomes.begin(), outcomes.end(), [&](const Observation &x) {
      return x.service_state == o.service_state && x.db_state == o.db_state;
    });
    if (it == outcomes.end())
      throw Error("E_OBSERVATION_MISMATCH", "peer " + std::to_string(svc_) +
                                                " cannot reach the observed outcome on '" +
                                                model.op_name(req->op) + "'");
    chosen = o;
  } else {
    if (outcomes.size() != 1)
      throw Error("E_OBSERVATION_REQUIRED", "peer " + std::to_string(svc_) + " has " +
                                                std::to_string(outcomes.size()) + " outcomes on '" +
                                                model.op_name(req->op) + "'");
    chosen = outcomes.front();
  }
  own_state_ = chosen.service_state;
  return Message{m.round, svc_, Outcome{req->op, svc_, chosen.service_state, chosen.db_state}};
}

void LocalOrchestrator::handle_outcome() {
  Message m = pop();
  const auto *out = std::get_if<Outcome>(&m.body);
  if (!out || !pending_ || *pending_ != out->op)
    throw Error("E_PROTOCOL", "peer " + std::to_string(svc_) + " got an unexpected outcome");
  if (choose_delegate(*generator_, belief_, out->op) != out->executor)
    throw Error("E_PROTOCOL", "outcome from service " + std::to_string(out->executor) +
                                  " disagrees with the shared policy");
  belief_ = step(*generator_, belief_, out->op, Observation{out->service_state, out->db_state});
  pending_.reset();
}

void LocalOrchestrator::adopt(std::shared_ptr<const OrchestratorGenerator> generator) {
  generator_ = std::move(generator);
  belief_ = resume(belief_, *generator_);
}

std::vector<LocalOrchestrator> derive_locals(const OrchestratorGenerator &generator, Policy policy) {
  std::vector<LocalOrchestrator> out;
  for (auto svc : generator.origin())
    out.emplace_back(svc, std::make_shared<const OrchestratorGenerator>(generator), policy);
  return out;
}

// ---------------------------------------------------------------------------

NetworkHarness::NetworkHarness(const OrchestratorGenerator &generator, Policy policy)
    : peers_(derive_locals(generator, std::move(policy))) {
  const auto &model = generator.model();
  op_names_ = model.ops();
  for (ServiceIndex k = 1; k <= model.num_services(); ++k)
    state_names_.emplace_back(generator.original(k), model.service(k).states);
  if (model.has_databox())
    db_names_ = model.databox().states;
}

const LocalOrchestrator *NetworkHarness::peer(ServiceIndex svc) const {
  for (const auto &p : peers_)
    if (p.svc_index() == svc)
      return &p;
  return nullptr;
}

void NetworkHarness::mark_failed(ServiceIndex svc) {
  if (!peer(svc))
    throw Error("E_BAD_INDEX", "no peer " + std::to_string(svc));
  failed_.insert(svc);
}

bool NetworkHarness::coherent() const {
  std::optional<SimPair> seen;
  for (const auto &p : peers_) {
    if (failed_.count(p.svc_index()))
      continue;
    if (seen && *seen != p.tracked())
      return false;
    seen = p.tracked();
  }
  return true;
}

void NetworkHarness::broadcast(const Message &m) {
  transcript_.push_back(m);
  for (auto &p : peers_)
    if (!failed_.count(p.svc_index()))
      p.deliver(m);
}

std::string NetworkHarness::trace_log() const {
  auto state_name = [&](ServiceIndex svc, StateIndex st) {
    for (const auto &[k, names] : state_names_)
      if (k == svc)
        return names[st];
    return std::to_string(st);
  };
  std::ostringstream os;
  for (const auto &r : trace_)
    os << r.round << ' ' << op_names_[r.op] << ' ' << r.executor << ' ' << r.pair_label << '\n';
  if (!log_.empty()) {
    os << "# events\n";
    for (const auto &l : log_)
      os << l << '\n';
  }
  os << "# messages\n";
  for (const auto &m : transcript_) {
    os << "msg " << m.round << ' ' << m.sender << ' ';
    if (const auto *req = std::get_if<Request>(&m.body)) {
      os << "request " << op_names_[req->op];
    } else {
      const auto &o = std::get<Outcome>(m.body);
      os << "outcome " << op_names_[o.op] << ' ' << o.executor << ' '
         << state_name(o.executor, o.service_state) << ' '
         << (o.db_state == kNoState ? std::string("-") : db_names_[o.db_state]);
    }
    os << '\n';
  }
  return os.str();
}

NetworkHarness dist_round(NetworkHarness h, OpIndex op, std::optional<Observation> observed) {
  auto live = std::find_if(h.peers_.begin(), h.peers_.end(),
                           [&](const auto &p) { return !h.failed_.count(p.svc_index()); });
  if (live == h.peers_.end())
    throw Error("E_EXECUTOR_FAILED", "no live peers");
  const ServiceIndex k = choose_delegate(live->generator(), live->belief(), op);
  if (h.failed_.count(k) || !h.peer(k))
    throw Error("E_EXECUTOR_FAILED", "the policy picks failed peer " + std::to_string(k));

  ++h.round_;
  h.broadcast(Message{h.round_, 0, Request{op}});
  std::vector<Message> outcomes;
  for (auto &p : h.peers_)
    if (!h.failed_.count(p.svc_index()))
      if (auto out = p.handle_request(observed))
        outcomes.push_back(std::move(*out));
  if (outcomes.size() != 1)
    throw Error("E_PROTOCOL", std::to_string(outcomes.size()) + " executors in round " +
                                  std::to_string(h.round_));
  h.broadcast(outcomes.front());
  for (auto &p : h.peers_)
    if (!h.failed_.count(p.svc_index()))
      p.handle_outcome();

  const auto *exec = h.peer(k);
  const auto pair = exec->tracked();
  h.trace_.push_back({h.round_, op, k, pair, exec->generator().product().config(pair.config),
                      exec->generator().pair_label(pair)});
  return h;
}

NetworkHarness dist_handle_failure(NetworkHarness h, const std::set<ServiceIndex> &failed) {
  if (failed.empty()) {
    h.log_.push_back("round " + std::to_string(h.round_) + ": no failure");
    return h;
  }
  for (auto svc : failed)
    h.mark_failed(svc);

  std::vector<std::shared_ptr<const OrchestratorGenerator>> fresh;
  std::vector<ServiceIndex> unrealizable;
  for (const auto &p : h.peers_) {
    if (h.failed_.count(p.svc_index()))
      continue;
    std::set<ServiceIndex> gone;
    for (auto svc : h.failed_)
      if (p.generator().local(svc))
        gone.insert(svc);
    try {
      fresh.push_back(std::make_shared<const OrchestratorGenerator>(
          handle_failure(p.generator(), p.belief(), gone)));
    } catch (const Error &e) {
      if (e.code() != "E_UNREALIZABLE_FROM_HERE")
        throw;
      unrealizable.push_back(p.svc_index());
    }
  }
  if (fresh.empty() && unrealizable.empty())
    throw Error("E_UNREALIZABLE_FROM_HERE", "every peer has failed");
  if (!unrealizable.empty()) {
    if (!fresh.empty())
      throw Error("E_PROTOCOL", "survivors disagree on realizability");
    std::string who;
    for (auto svc : unrealizable)
      who += (who.empty() ? "" : ",") + std::to_string(svc);
    throw Error("E_UNREALIZABLE_FROM_HERE",
                "reported by peers " + who + " after round " + std::to_string(h.round_));
  }
  for (const auto &g : fresh)
    if (!(*g == *fresh.front()))
      throw Error("E_PROTOCOL", "survivors computed different generators");

  std::size_t i = 0;
  std::vector<LocalOrchestrator> survivors;
  for (auto &p : h.peers_) {
    if (h.failed_.count(p.svc_index()))
      continue;
    p.adopt(fresh[i++]);
    survivors.push_back(std::move(p));
  }
  std::string names;
  for (auto svc : failed)
    names += (names.empty() ? "" : ",") + std::to_string(svc);
  h.log_.push_back("round " + std::to_string(h.round_) + ": peers " + names +
                   " failed; survivors switched generator");
  h.peers_ = std::move(survivors);
  return h;
}

NetworkHarness run_distributed(NetworkHarness h, const std::vector<OpIndex> &requests,
                               const std::vector<std::optional<Observation>> &observations,
                               const std::vector<FailureEvent> &failures) {
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const std::size_t round = h.round() + 1;
    std::set<ServiceIndex> now;
    for (const auto &f : failures)
      if (f.round == round)
        now.insert(f.peer);
    if (!now.empty())
      h = dist_handle_failure(std::move(h), now);
    h = dist_round(std::move(h), requests[i], i < observations.size() ? observations[i] : std::nullopt);
  }
  return h;
}

} // namespace roman
