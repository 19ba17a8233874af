#include "roman/model.hpp"

#include "roman/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace roman {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_identifier(std::string_view name) {
  if (name.empty())
    return false;
  auto word = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  };
  if (!word(name.front()))
    return false;
  return std::all_of(name.begin(), name.end(),
                     [&](char c) { return word(c) || c == '.' || c == '-'; });
}

namespace {

class Checker {
public:
  explicit Checker(const CompositionInstance &inst) : inst_(inst) {}

  std::vector<Diagnostic> run() {
    std::set<std::string> seen_ops;
    for (const auto &op : inst_.alphabet) {
      if (!is_identifier(op))
        add("E_BAD_IDENTIFIER", "operation name '" + op + "' is not an identifier");
      if (!seen_ops.insert(op).second)
        add("E_DUPLICATE_OP", "operation '" + op + "' declared twice");
    }
    if (inst_.services.empty())
      add("E_NO_SERVICES", "the community has no available services");

    std::set<std::string> ids;
    auto check_id = [&](const std::string &id) {
      if (!is_identifier(id))
        add("E_BAD_IDENTIFIER", "system id '" + id + "' is not an identifier");
      if (!ids.insert(id).second)
        add("E_DUPLICATE_SYSTEM_ID", "system id '" + id + "' used twice");
    };

    std::set<std::string> db_states;
    if (inst_.databox) {
      const auto &db = *inst_.databox;
      check_id(db.id);
      db_states = states_of(db.id, db.states, db.initial, {});
      for (const auto &tr : db.transitions) {
        edge(db.id, db_states, tr);
        if (tr.guard)
          add("E_DATABOX_GUARD", db.id + ": data-box transitions cannot be guarded");
      }
    }

    for (const auto &svc : inst_.services) {
      check_id(svc.id);
      auto states = states_of(svc.id, svc.states, svc.initial, svc.finals);
      for (const auto &tr : svc.transitions) {
        edge(svc.id, states, tr);
        if (!tr.guard)
          continue;
        if (!inst_.databox) {
          add("E_GUARD_NO_DATABOX", svc.id + ": guard on " + tr.from + " -" + tr.op +
                                        "-> " + tr.to + " but the instance has no data box");
          continue;
        }
        if (tr.guard->empty())
          add("E_EMPTY_GUARD", svc.id + ": empty guard on " + tr.from + " -" + tr.op + "->");
        for (const auto &g : *tr.guard)
          if (!db_states.count(g))
            add("E_GUARD_UNKNOWN_STATE", svc.id + ": guard names unknown data-box state '" + g + "'");
      }
    }

    const auto &tgt = inst_.target;
    check_id(tgt.id);
    auto tstates = states_of(tgt.id, tgt.states, tgt.initial, tgt.finals);
    std::set<std::pair<std::string, std::string>> outgoing;
    for (const auto &tr : tgt.transitions) {
      edge(tgt.id, tstates, tr);
      if (tr.guard)
        add("E_TARGET_GUARD", tgt.id + ": target transitions cannot be guarded");
      if (!outgoing.insert({tr.from, tr.op}).second)
        add("E_NONDET_TARGET",
            tgt.id + ": more than one transition from '" + tr.from + "' on '" + tr.op + "'");
    }
    return std::move(out_);
  }

private:
  void add(std::string code, std::string message) {
    out_.push_back({std::move(code), std::move(message)});
  }

  std::set<std::string> states_of(const std::string &id, const std::vector<std::string> &states,
                                  const std::string &initial,
                                  const std::vector<std::string> &finals) {
    std::set<std::string> set;
    if (states.empty())
      add("E_EMPTY_STATES", id + ": no states");
    for (const auto &s : states) {
      if (!is_identifier(s))
        add("E_BAD_IDENTIFIER", id + ": state '" + s + "' is not an identifier");
      if (!set.insert(s).second)
        add("E_DUPLICATE_STATE", id + ": state '" + s + "' declared twice");
    }
    if (!set.count(initial))
      add("E_INITIAL_UNKNOWN_STATE", id + ": initial state '" + initial + "' is not declared");
    std::set<std::string> fin;
    for (const auto &f : finals) {
      if (!set.count(f))
        add("E_FINAL_UNKNOWN_STATE", id + ": final state '" + f + "' is not declared");
      if (!fin.insert(f).second)
        add("E_DUPLICATE_FINAL", id + ": final state '" + f + "' listed twice");
    }
    return set;
  }

  void edge(const std::string &id, const std::set<std::string> &states, const Transition &tr) {
    if (!states.count(tr.from))
      add("E_TRANSITION_UNKNOWN_STATE", id + ": transition source '" + tr.from + "' is not declared");
    if (!states.count(tr.to))
      add("E_TRANSITION_UNKNOWN_STATE", id + ": transition target '" + tr.to + "' is not declared");
    if (std::find(inst_.alphabet.begin(), inst_.alphabet.end(), tr.op) == inst_.alphabet.end())
      add("E_UNKNOWN_OP", id + ": operation '" + tr.op + "' is not in the alphabet");
  }

  const CompositionInstance &inst_;
  std::vector<Diagnostic> out_;
};

[[noreturn]] void schema_error(const std::string &what) { throw Error("E_SCHEMA", what); }

void check_keys(const json &obj, std::initializer_list<std::string_view> allowed,
                std::initializer_list<std::string_view> required, const std::string &where) {
  if (!obj.is_object())
    schema_error(where + " must be an object");
  for (const auto &[key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error("E_UNKNOWN_KEY", where + ": unknown key '" + key + "'");
  for (auto key : required)
    if (!obj.contains(key))
      schema_error(where + ": missing key '" + std::string(key) + "'");
}

std::string get_string(const json &j, const std::string &where) {
  if (!j.is_string())
    schema_error(where + " must be a string");
  return j.get<std::string>();
}

std::vector<std::string> get_strings(const json &j, const std::string &where) {
  if (!j.is_array())
    schema_error(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto &e : j)
    out.push_back(get_string(e, where + " element"));
  return out;
}

std::vector<Transition> get_transitions(const json &j, const std::string &where) {
  if (!j.is_array())
    schema_error(where + ".transitions must be an array");
  std::vector<Transition> out;
  for (const auto &t : j) {
    check_keys(t, {"from", "op", "guard", "to"}, {"from", "op", "to"}, where + " transition");
    Transition tr;
    tr.from = get_string(t["from"], where + " transition.from");
    tr.op = get_string(t["op"], where + " transition.op");
    tr.to = get_string(t["to"], where + " transition.to");
    if (t.contains("guard"))
      tr.guard = get_strings(t["guard"], where + " transition.guard");
    out.push_back(std::move(tr));
  }
  return out;
}

TransitionSystem get_system(const json &j, const std::string &where) {
  check_keys(j, {"id", "states", "initial", "finals", "transitions"},
             {"id", "states", "initial", "finals", "transitions"}, where);
  TransitionSystem ts;
  ts.id = get_string(j["id"], where + ".id");
  ts.states = get_strings(j["states"], where + ".states");
  ts.initial = get_string(j["initial"], where + ".initial");
  ts.finals = get_strings(j["finals"], where + ".finals");
  ts.transitions = get_transitions(j["transitions"], where);
  return ts;
}

ordered_json put_transitions(const std::vector<Transition> &trs) {
  ordered_json arr = ordered_json::array();
  for (const auto &tr : trs) {
    ordered_json t;
    t["from"] = tr.from;
    t["op"] = tr.op;
    if (tr.guard)
      t["guard"] = *tr.guard;
    t["to"] = tr.to;
    arr.push_back(std::move(t));
  }
  return arr;
}

ordered_json put_system(const TransitionSystem &ts) {
  ordered_json j;
  j["id"] = ts.id;
  j["states"] = ts.states;
  j["initial"] = ts.initial;
  j["finals"] = ts.finals;
  j["transitions"] = put_transitions(ts.transitions);
  return j;
}

} // namespace

std::vector<Diagnostic> validate(const CompositionInstance &instance) {
  return Checker(instance).run();
}

CompositionInstance read_instance(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error &e) {
    throw Error("E_SYNTAX", "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  check_keys(root, {"alphabet", "services", "databox", "target"},
             {"alphabet", "services", "target"}, "instance");

  CompositionInstance inst;
  inst.alphabet = get_strings(root["alphabet"], "alphabet");
  if (!root["services"].is_array())
    schema_error("services must be an array");
  for (std::size_t i = 0; i < root["services"].size(); ++i)
    inst.services.push_back(get_system(root["services"][i], "services[" + std::to_string(i) + "]"));
  if (root.contains("databox")) {
    const auto &d = root["databox"];
    check_keys(d, {"id", "states", "initial", "transitions"},
               {"id", "states", "initial", "transitions"}, "databox");
    DataBox db;
    db.id = get_string(d["id"], "databox.id");
    db.states = get_strings(d["states"], "databox.states");
    db.initial = get_string(d["initial"], "databox.initial");
    db.transitions = get_transitions(d["transitions"], "databox");
    inst.databox = std::move(db);
  }
  inst.target = get_system(root["target"], "target");
  return inst;
}

CompositionInstance parse_instance(std::string_view text) {
  auto inst = read_instance(text);
  auto diags = validate(inst);
  if (!diags.empty()) {
    std::string msg = diags.front().message;
    if (diags.size() > 1)
      msg += " (+" + std::to_string(diags.size() - 1) + " more)";
    throw Error(diags.front().code, msg);
  }
  return inst;
}

std::string serialize_instance(const CompositionInstance &instance) {
  ordered_json root;
  root["alphabet"] = instance.alphabet;
  ordered_json svcs = ordered_json::array();
  for (const auto &s : instance.services)
    svcs.push_back(put_system(s));
  root["services"] = std::move(svcs);
  if (instance.databox) {
    ordered_json d;
    d["id"] = instance.databox->id;
    d["states"] = instance.databox->states;
    d["initial"] = instance.databox->initial;
    d["transitions"] = put_transitions(instance.databox->transitions);
    root["databox"] = std::move(d);
  }
  root["target"] = put_system(instance.target);
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

LinkedInstance::System link_system(const std::string &id, const std::vector<std::string> &states,
                                   const std::string &initial,
                                   const std::vector<std::string> &finals,
                                   const std::vector<Transition> &transitions,
                                   const std::unordered_map<std::string, OpIndex> &ops,
                                   const std::optional<LinkedInstance::System> &db) {
  LinkedInstance::System sys;
  sys.id = id;
  sys.states = states;
  std::unordered_map<std::string, StateIndex> index;
  for (StateIndex i = 0; i < states.size(); ++i)
    index[states[i]] = i;
  sys.initial = index.at(initial);
  sys.final.assign(states.size(), false);
  for (const auto &f : finals)
    sys.final[index.at(f)] = true;
  sys.succ.resize(states.size() * ops.size());
  for (const auto &tr : transitions) {
    LinkedInstance::Edge e{index.at(tr.to), {}};
    if (tr.guard) {
      std::unordered_map<std::string, StateIndex> dbi;
      for (StateIndex i = 0; i < db->states.size(); ++i)
        dbi[db->states[i]] = i;
      e.guard.assign(db->states.size(), false);
      for (const auto &g : *tr.guard)
        e.guard[dbi.at(g)] = true;
    }
    auto &bucket = sys.succ[index.at(tr.from) * ops.size() + ops.at(tr.op)];
    // Duplicate declarations of the same edge collapse; guards union.
    auto same = std::find_if(bucket.begin(), bucket.end(), [&](const auto &x) { return x.to == e.to; });
    if (same == bucket.end()) {
      bucket.push_back(std::move(e));
    } else if (!same->guard.empty()) {
      if (e.guard.empty())
        same->guard.clear();
      else
        for (std::size_t i = 0; i < e.guard.size(); ++i)
          same->guard[i] = same->guard[i] || e.guard[i];
    }
  }
  for (auto &bucket : sys.succ)
    std::sort(bucket.begin(), bucket.end(), [](const auto &a, const auto &b) { return a.to < b.to; });
  return sys;
}

} // namespace

std::shared_ptr<const LinkedInstance> LinkedInstance::link(const CompositionInstance &instance) {
  auto diags = validate(instance);
  if (!diags.empty())
    throw Error(diags.front().code, diags.front().message);

  auto out = std::make_shared<LinkedInstance>();
  out->source_ = instance;
  out->ops_ = instance.alphabet;
  std::unordered_map<std::string, OpIndex> ops;
  for (OpIndex i = 0; i < out->ops_.size(); ++i)
    ops[out->ops_[i]] = i;
  if (instance.databox) {
    const auto &d = *instance.databox;
    out->databox_ = link_system(d.id, d.states, d.initial, {}, d.transitions, ops, std::nullopt);
  }
  for (const auto &s : instance.services)
    out->services_.push_back(
        link_system(s.id, s.states, s.initial, s.finals, s.transitions, ops, out->databox_));
  const auto &t = instance.target;
  out->target_ = link_system(t.id, t.states, t.initial, t.finals, t.transitions, ops, out->databox_);
  return out;
}

std::optional<OpIndex> LinkedInstance::find_op(std::string_view name) const {
  auto it = std::find(ops_.begin(), ops_.end(), name);
  if (it == ops_.end())
    return std::nullopt;
  return static_cast<OpIndex>(it - ops_.begin());
}

StateIndex LinkedInstance::target_next(StateIndex t, OpIndex op) const {
  const auto &bucket = target_.succ[t * ops_.size() + op];
  return bucket.empty() ? kNoState : bucket.front().to;
}

std::vector<StateIndex> LinkedInstance::databox_next(StateIndex db, OpIndex op) const {
  if (!databox_)
    return {kNoState};
  const auto &bucket = databox_->succ[db * ops_.size() + op];
  if (bucket.empty())
    return {db};
  std::vector<StateIndex> out;
  out.reserve(bucket.size());
  for (const auto &e : bucket)
    out.push_back(e.to);
  return out;
}

std::optional<StateIndex> LinkedInstance::find_state(const System &sys, std::string_view name) const {
  auto it = std::find(sys.states.begin(), sys.states.end(), name);
  if (it == sys.states.end())
    return std::nullopt;
  return static_cast<StateIndex>(it - sys.states.begin());
}

} // namespace roman
