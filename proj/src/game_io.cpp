#include "roman/game.hpp"

#include "roman/error.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace roman {

namespace {

std::string services_field(const CommunityProduct &product, ConfigIndex c) {
  const auto &model = product.model();
  const auto &cfg = product.config(c);
  std::string out;
  for (std::size_t i = 0; i < cfg.services.size(); ++i) {
    if (i)
      out += ',';
    out += model.services()[i].states[cfg.services[i]];
  }
  return out;
}

std::string db_field(const CommunityProduct &product, ConfigIndex c) {
  auto db = product.config(c).db;
  return db == kNoState ? "-" : product.model().databox().states[db];
}

// Neutral format:
//
//   game    := "GAME 1" NL states init env ctrl safe "END" NL
//   states  := "STATES" NL { id "env" t svcs db NL | id "ctrl" t svcs db op NL | id "sink" NL }
//   init    := "INIT" NL id NL
//   env     := "ENV" NL { id id NL }
//   ctrl    := "CTRL" NL { id k id NL }
//   safe    := "SAFE" NL { id NL }
//   svcs    := name { "," name }      db := name | "-"
//
// Every section lists tuples in ascending numeric order.
std::string export_neutral(const SafetyGame &g) {
  const auto &product = *g.product;
  const auto &model = product.model();
  std::ostringstream os;
  os << "GAME 1\nSTATES\n";
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto &st = g.states[s];
    os << s << ' ';
    if (!st.alive) {
      os << "sink\n";
      continue;
    }
    os << (st.turn == Turn::env ? "env" : "ctrl") << ' ' << model.target().states[st.t_state] << ' '
       << services_field(product, st.config) << ' ' << db_field(product, st.config);
    if (st.pending)
      os << ' ' << model.op_name(*st.pending);
    os << '\n';
  }
  os << "INIT\n" << g.initial << "\nENV\n";
  for (std::size_t s = 0; s < g.size(); ++s)
    for (auto x : g.env_moves[s])
      os << s << ' ' << x << '\n';
  os << "CTRL\n";
  for (std::size_t s = 0; s < g.size(); ++s)
    for (const auto &m : g.ctrl_moves[s])
      for (auto x : m.outcomes)
        os << s << ' ' << m.k << ' ' << x << '\n';
  os << "SAFE\n";
  for (std::size_t s = 0; s < g.size(); ++s)
    if (g.safe[s])
      os << s << '\n';
  os << "END\n";
  return os.str();
}

std::string join_set(const std::vector<std::string> &names, const std::vector<bool> &keep) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (keep[i]) {
      out += (first ? "" : ", ") + names[i];
      first = false;
    }
  return out + "}";
}

std::string join_all(const std::vector<std::string> &names) {
  return join_set(names, std::vector<bool>(names.size(), true));
}

// SMV-style dialect: one VAR per target/service/data-box component plus
// `turn`, `pending` and `delegate`; TRANS is a disjunction with one clause
// per game edge; INVAR states the safe set symbolically.
std::string export_smv(const SafetyGame &g) {
  const auto &product = *g.product;
  const auto &model = product.model();
  const auto n = model.num_services();

  auto assign = [&](const GameState &st, bool next) {
    auto v = [&](const std::string &name) { return next ? "next(" + name + ")" : name; };
    std::ostringstream os;
    if (!st.alive) {
      os << v("turn") << " = sink";
      return os.str();
    }
    const auto &cfg = product.config(st.config);
    os << v("turn") << " = " << (st.turn == Turn::env ? "env" : "ctrl") << " & " << v("t_state")
       << " = " << model.target().states[st.t_state];
    for (std::size_t i = 0; i < n; ++i)
      os << " & " << v("s" + std::to_string(i + 1)) << " = " << model.services()[i].states[cfg.services[i]];
    if (cfg.db != kNoState)
      os << " & " << v("db") << " = " << model.databox().states[cfg.db];
    os << " & " << v("pending") << " = " << (st.pending ? model.op_name(*st.pending) : "none");
    return os.str();
  };

  std::ostringstream os;
  os << "-- smv-style safety game\n"
     << "-- turn = env: client requests an operation; turn = ctrl: orchestrator delegates it\n"
     << "MODULE main\nVAR\n"
     << "  turn : {env, ctrl, sink};\n"
     << "  t_state : " << join_all(model.target().states) << ";\n";
  for (std::size_t i = 0; i < n; ++i)
    os << "  s" << i + 1 << " : " << join_all(model.services()[i].states) << ";\n";
  if (model.has_databox())
    os << "  db : " << join_all(model.databox().states) << ";\n";
  std::vector<std::string> pending{"none"};
  pending.insert(pending.end(), model.ops().begin(), model.ops().end());
  os << "  pending : " << join_all(pending) << ";\n"
     << "  delegate : 0.." << n << ";\n";

  os << "INIT\n  " << assign(g.states[g.initial], false) << " & delegate = 0\n";

  os << "TRANS\n";
  bool first = true;
  auto clause = [&](GameStateIndex from, GameStateIndex to, ServiceIndex k) {
    os << (first ? "    (" : "  | (") << assign(g.states[from], false) << " & "
       << assign(g.states[to], true) << " & next(delegate) = " << k << ")\n";
    first = false;
  };
  for (std::size_t s = 0; s < g.size(); ++s) {
    for (auto x : g.env_moves[s])
      clause(static_cast<GameStateIndex>(s), x, 0);
    for (const auto &m : g.ctrl_moves[s])
      for (auto x : m.outcomes)
        clause(static_cast<GameStateIndex>(s), x, m.k);
  }
  if (first)
    os << "    FALSE\n";

  os << "INVAR\n  turn != sink";
  if (std::find(model.target().final.begin(), model.target().final.end(), true) !=
      model.target().final.end()) {
    os << " & (t_state in " << join_set(model.target().states, model.target().final) << " -> (";
    for (std::size_t i = 0; i < n; ++i)
      os << (i ? " & " : "") << "s" << i + 1 << " in "
         << join_set(model.services()[i].states, model.services()[i].final);
    os << "))";
  }
  os << "\n";
  return os.str();
}

[[noreturn]] void syntax(std::size_t line, const std::string &what) {
  throw Error("E_GAME_SYNTAX", "line " + std::to_string(line) + ": " + what);
}

std::uint32_t number(std::string_view tok, std::size_t line) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    syntax(line, "expected a number, got '" + std::string(tok) + "'");
  return v;
}

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      if (sep != ' ' || !cur.empty())
        out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (sep != ' ' || !cur.empty())
    out.push_back(cur);
  return out;
}

} // namespace

std::string export_game(const SafetyGame &game, GameFormat format) {
  return format == GameFormat::neutral ? export_neutral(game) : export_smv(game);
}

SafetyGame parse_neutral_game(std::string_view text, std::shared_ptr<const CommunityProduct> product) {
  const auto &model = product->model();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> std::vector<std::string> {
    if (!std::getline(in, line))
      syntax(lineno, "unexpected end of input");
    ++lineno;
    return split(line, ' ');
  };
  auto expect = [&](const char *keyword) {
    auto toks = next_line();
    if (toks.size() != 1 || toks[0] != keyword)
      syntax(lineno, std::string("expected ") + keyword);
  };

  {
    auto toks = next_line();
    if (toks.size() != 2 || toks[0] != "GAME" || toks[1] != "1")
      syntax(lineno, "expected header 'GAME 1'");
  }
  expect("STATES");

  SafetyGame g;
  g.product = product;
  auto resolve_config = [&](const std::string &svcs, const std::string &db) {
    auto names = split(svcs, ',');
    if (names.size() != model.num_services())
      syntax(lineno, "wrong number of service states");
    CommunityConfig cfg;
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto s = model.find_state(model.services()[i], names[i]);
      if (!s)
        syntax(lineno, "unknown state '" + names[i] + "'");
      cfg.services.push_back(*s);
    }
    if (db != "-") {
      if (!model.has_databox())
        syntax(lineno, "data-box state without a data box");
      auto d = model.find_state(model.databox(), db);
      if (!d)
        syntax(lineno, "unknown data-box state '" + db + "'");
      cfg.db = *d;
    }
    auto c = product->find(cfg);
    if (!c)
      syntax(lineno, "config is not in the product");
    return *c;
  };

  std::vector<std::string> toks;
  for (;;) {
    toks = next_line();
    if (toks.size() == 1 && toks[0] == "INIT")
      break;
    if (toks.size() < 2 || number(toks[0], lineno) != g.states.size())
      syntax(lineno, "state ids must be consecutive from 0");
    GameState st;
    if (toks[1] == "sink" && toks.size() == 2) {
      st.alive = false;
      g.sink = static_cast<GameStateIndex>(g.states.size());
    } else if ((toks[1] == "env" && toks.size() == 5) || (toks[1] == "ctrl" && toks.size() == 6)) {
      st.turn = toks[1] == "env" ? Turn::env : Turn::ctrl;
      auto t = model.find_state(model.target(), toks[2]);
      if (!t)
        syntax(lineno, "unknown target state '" + toks[2] + "'");
      st.t_state = *t;
      st.config = resolve_config(toks[3], toks[4]);
      if (st.turn == Turn::ctrl) {
        auto op = model.find_op(toks[5]);
        if (!op)
          syntax(lineno, "unknown operation '" + toks[5] + "'");
        st.pending = *op;
      }
    } else {
      syntax(lineno, "malformed state line");
    }
    g.states.push_back(st);
  }
  const std::size_t ns = g.states.size();
  auto state_id = [&](const std::string &tok) {
    auto v = number(tok, lineno);
    if (v >= ns)
      syntax(lineno, "state id out of range");
    return v;
  };

  g.initial = state_id(next_line().at(0));
  g.env_moves.resize(ns);
  g.ctrl_moves.resize(ns);
  g.safe.assign(ns, 0);

  expect("ENV");
  for (;;) {
    toks = next_line();
    if (toks.size() == 1 && toks[0] == "CTRL")
      break;
    if (toks.size() != 2)
      syntax(lineno, "malformed ENV line");
    g.env_moves[state_id(toks[0])].push_back(state_id(toks[1]));
  }
  for (;;) {
    toks = next_line();
    if (toks.size() == 1 && toks[0] == "SAFE")
      break;
    if (toks.size() != 3)
      syntax(lineno, "malformed CTRL line");
    auto from = state_id(toks[0]);
    auto k = number(toks[1], lineno);
    auto &moves = g.ctrl_moves[from];
    if (moves.empty() || moves.back().k != k)
      moves.push_back({k, {}});
    moves.back().outcomes.push_back(state_id(toks[2]));
  }
  for (;;) {
    toks = next_line();
    if (toks.size() == 1 && toks[0] == "END")
      break;
    if (toks.size() != 1)
      syntax(lineno, "malformed SAFE line");
    g.safe[state_id(toks[0])] = 1;
  }
  return g;
}

} // namespace roman
