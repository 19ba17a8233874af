#include "roman/cli.hpp"

#include "roman/distrib.hpp"
#include "roman/error.hpp"
#include "roman/game.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace roman {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kInputError = 2;

std::string read_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error("E_IO", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_output(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error("E_IO", "cannot write '" + path + "'");
  f << text;
}

std::vector<std::string> words(const std::string &line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string w; is >> w;)
    out.push_back(w);
  return out;
}

// "op [service-state [db-state]]" -> op plus the optional observation for
// the service the policy will pick.
struct RequestLine {
  OpIndex op;
  std::optional<Observation> observed;
};

RequestLine parse_request(const std::vector<std::string> &w, const OrchestratorGenerator &g,
                          const OrchestrationState &state) {
  const auto &model = g.model();
  auto op = model.find_op(w.at(0));
  if (!op)
    throw Error("E_UNKNOWN_OP", "unknown operation '" + w[0] + "'");
  RequestLine r{*op, std::nullopt};
  if (w.size() > 1) {
    auto k = *g.local(choose_delegate(g, state, *op));
    auto s = model.find_state(model.service(k), w[1]);
    if (!s)
      throw Error("E_OBSERVATION_MISMATCH", "unknown state '" + w[1] + "' for service " +
                                                std::to_string(g.original(k)));
    Observation obs{*s, kNoState};
    if (w.size() > 2) {
      if (!model.has_databox())
        throw Error("E_OBSERVATION_MISMATCH", "no data box to observe");
      auto d = model.find_state(model.databox(), w[2]);
      if (!d)
        throw Error("E_OBSERVATION_MISMATCH", "unknown data-box state '" + w[2] + "'");
      obs.db_state = *d;
    } else if (model.has_databox()) {
      obs.db_state = g.product().config(state.pair.config).db;
    }
    r.observed = obs;
  }
  return r;
}

struct Context {
  std::istream &in;
  std::ostream &out;
  std::ostream &err;
  bool json = false;
};

int cmd_validate(Context &cx, const std::string &file) {
  auto inst = read_instance(read_file(file));
  auto diags = validate(inst);
  if (cx.json) {
    ordered_json j;
    j["valid"] = diags.empty();
    auto arr = ordered_json::array();
    for (const auto &d : diags)
      arr.push_back({{"code", d.code}, {"message", d.message}});
    j["diagnostics"] = arr;
    cx.out << j.dump(2) << '\n';
  } else if (diags.empty()) {
    cx.out << "VALID\n";
  }
  for (const auto &d : diags)
    cx.err << d.code << ": " << d.message << '\n';
  return diags.empty() ? kOk : kInputError;
}

int cmd_check(Context &cx, const std::string &file) {
  auto product = build_product(parse_instance(read_file(file)));
  auto relation = compute_largest_simulation(*product);
  const bool ok = is_realizable(*product, relation);
  if (cx.json) {
    ordered_json j;
    j["realizable"] = ok;
    j["configs"] = product->size();
    j["moves"] = product->moves().size();
    j["pairs"] = relation.size();
    cx.out << j.dump(2) << '\n';
  } else {
    cx.out << (ok ? "REALIZABLE" : "UNREALIZABLE") << '\n';
  }
  return ok ? kOk : kNegative;
}

int cmd_compose(Context &cx, const std::string &file, const std::string &output,
                const std::string &dot, const std::string &policy) {
  auto product = build_product(parse_instance(read_file(file)));
  auto relation = compute_largest_simulation(*product);
  if (!is_realizable(*product, relation)) {
    cx.out << (cx.json ? "{\n  \"realizable\": false\n}\n" : "UNREALIZABLE\n");
    return kNegative;
  }
  auto generator = build_generator(product, std::move(relation));
  write_output(output, generator.to_json(), cx.out);
  if (!dot.empty())
    write_output(dot, generator.to_dot(Policy::parse(policy)), cx.out);
  return kOk;
}

int cmd_export_game(Context &cx, const std::string &file, const std::string &format,
                    const std::string &output) {
  auto product = build_product(parse_instance(read_file(file)));
  auto game = encode_game(product);
  auto text = export_game(game, format == "smv" ? GameFormat::smv : GameFormat::neutral);
  if (cx.json) {
    ordered_json j;
    j["format"] = format;
    j["states"] = game.size();
    j["text"] = text;
    write_output(output, j.dump(2) + "\n", cx.out);
  } else {
    write_output(output, text, cx.out);
  }
  return kOk;
}

int cmd_simulate(Context &cx, const std::string &file, const std::string &policy_name) {
  auto product = build_product(parse_instance(read_file(file)));
  auto relation = compute_largest_simulation(*product);
  if (!is_realizable(*product, relation)) {
    cx.out << (cx.json ? "{\n  \"realizable\": false\n}\n" : "UNREALIZABLE\n");
    return kNegative;
  }
  auto generator = build_generator(product, std::move(relation));
  auto state = start(generator, Policy::parse(policy_name));

  auto emit = [&](ordered_json j, const std::string &plain) {
    if (cx.json)
      cx.out << j.dump() << '\n';
    else
      cx.out << plain << '\n';
  };
  emit({{"event", "start"}, {"pair", generator.pair_label(state.pair)}},
       "start " + generator.pair_label(state.pair));

  for (std::string line; std::getline(cx.in, line);) {
    auto w = words(line);
    if (w.empty())
      continue;
    if (w[0] == "quit")
      break;
    if (w[0] == "fail") {
      std::set<ServiceIndex> failed;
      for (std::size_t i = 1; i < w.size(); ++i)
        failed.insert(static_cast<ServiceIndex>(std::stoul(w[i])));
      try {
        generator = handle_failure(generator, state, failed);
        state = resume(state, generator);
        emit({{"event", "fail"}, {"failed", failed}, {"pair", generator.pair_label(state.pair)}},
             "switched " + generator.pair_label(state.pair));
      } catch (const Error &e) {
        if (e.code() != "E_UNREALIZABLE_FROM_HERE")
          throw;
        emit({{"event", "fail"}, {"failed", failed}, {"result", "UNREALIZABLE_FROM_HERE"}},
             "UNREALIZABLE_FROM_HERE");
        return kNegative;
      }
      continue;
    }
    try {
      auto req = parse_request(w, generator, state);
      state = step(generator, state, req.op, req.observed);
      const auto &h = state.history.back();
      emit({{"event", "step"},
            {"op", w[0]},
            {"service", h.svc},
            {"pair", generator.pair_label(state.pair)}},
           w[0] + " -> " + std::to_string(h.svc) + " " + generator.pair_label(state.pair));
    } catch (const Error &e) {
      emit({{"event", "rejected"}, {"op", w[0]}, {"code", e.code()}}, "rejected " + e.code());
      cx.err << e.what() << '\n';
    }
  }
  return kOk;
}

int cmd_dist_sim(Context &cx, const std::string &file, const std::string &requests_file,
                 const std::vector<std::string> &fail_specs, const std::string &policy_name) {
  auto product = build_product(parse_instance(read_file(file)));
  auto relation = compute_largest_simulation(*product);
  if (!is_realizable(*product, relation)) {
    cx.out << (cx.json ? "{\n  \"realizable\": false\n}\n" : "UNREALIZABLE\n");
    return kNegative;
  }
  std::vector<FailureEvent> failures;
  for (const auto &spec : fail_specs) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
      throw Error("E_USAGE", "--fail expects ROUND:PEER, got '" + spec + "'");
    failures.push_back({std::stoul(spec.substr(0, colon)),
                        static_cast<ServiceIndex>(std::stoul(spec.substr(colon + 1)))});
  }

  NetworkHarness harness(build_generator(product, std::move(relation)), Policy::parse(policy_name));
  std::istringstream requests(read_file(requests_file));
  std::string result = "COMPLETED";
  for (std::string line; std::getline(requests, line);) {
    auto w = words(line);
    if (w.empty() || w[0][0] == '#')
      continue;
    const std::size_t round = harness.round() + 1;
    std::set<ServiceIndex> now;
    for (const auto &f : failures)
      if (f.round == round)
        now.insert(f.peer);
    try {
      if (!now.empty())
        harness = dist_handle_failure(std::move(harness), now);
    } catch (const Error &e) {
      if (e.code() != "E_UNREALIZABLE_FROM_HERE")
        throw;
      result = "UNREALIZABLE_FROM_HERE";
      cx.err << e.what() << '\n';
      break;
    }
    const auto &lead = harness.peers().front();
    auto req = parse_request(w, lead.generator(), lead.belief());
    harness = dist_round(std::move(harness), req.op, req.observed);
    if (!harness.coherent())
      throw Error("E_PROTOCOL", "peers disagree after round " + std::to_string(harness.round()));
  }

  if (cx.json) {
    ordered_json j;
    auto rounds = ordered_json::array();
    for (const auto &r : harness.trace())
      rounds.push_back({{"round", r.round},
                        {"op", harness.peers().front().generator().model().op_name(r.op)},
                        {"executor", r.executor},
                        {"pair", r.pair_label}});
    j["rounds"] = rounds;
    j["events"] = harness.log();
    j["transcript"] = harness.trace_log();
    j["result"] = result;
    cx.out << j.dump(2) << '\n';
  } else {
    cx.out << harness.trace_log() << result << '\n';
  }
  return result == "COMPLETED" ? kOk : kNegative;
}

int cmd_bench(Context &cx, const std::string &file, int repeat) {
  using clock = std::chrono::steady_clock;
  auto model = LinkedInstance::link(parse_instance(read_file(file)));
  ordered_json report = ordered_json::array();
  for (auto kernel : {Kernel::reference, Kernel::openmp}) {
    double product_ms = 0, sim_ms = 0, game_ms = 0;
    std::size_t configs = 0, pairs = 0;
    for (int r = 0; r < repeat; ++r) {
      auto t0 = clock::now();
      auto product = build_product(model, kernel);
      auto t1 = clock::now();
      auto relation = compute_largest_simulation(*product, kernel);
      auto t2 = clock::now();
      auto region = solve_game(encode_game(product), kernel);
      auto t3 = clock::now();
      product_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
      sim_ms += std::chrono::duration<double, std::milli>(t2 - t1).count();
      game_ms += std::chrono::duration<double, std::milli>(t3 - t2).count();
      configs = product->size();
      pairs = relation.size();
      (void)region;
    }
    const char *name = kernel == Kernel::reference ? "reference" : "openmp";
    ordered_json j;
    j["kernel"] = name;
    j["repeat"] = repeat;
    j["configs"] = configs;
    j["pairs"] = pairs;
    j["product_ms"] = product_ms / repeat;
    j["simulation_ms"] = sim_ms / repeat;
    j["game_ms"] = game_ms / repeat;
    report.push_back(j);
    if (!cx.json) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-9s configs=%zu pairs=%zu product=%.3fms simulation=%.3fms game=%.3fms\n",
                    name, configs, pairs, product_ms / repeat, sim_ms / repeat, game_ms / repeat);
      cx.out << buf;
    }
  }
  if (cx.json)
    cx.out << report.dump(2) << '\n';
  return kOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Service composition synthesizer: realizability, orchestrator generators, "
               "safety-game export and orchestration runs"};
  app.name("roman");
  app.require_subcommand(1);

  Context cx{in, out, err};
  std::string file, output, dot, format = "neutral", policy = "lowest-index", requests;
  std::vector<std::string> fails;
  int repeat = 5;

  auto add = [&](const char *name, const char *help) {
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("FILE", file, "instance file (JSON)")->required();
    sub->add_flag("--json", cx.json, "machine-readable output");
    return sub;
  };
  auto *validate_cmd = add("validate", "check an instance file for structural errors");
  auto *check_cmd = add("check", "decide realizability");
  auto *compose_cmd = add("compose", "synthesize the orchestrator generator");
  compose_cmd->add_option("-o,--output", output, "generator JSON destination (default stdout)");
  compose_cmd->add_option("--dot", dot, "also write a policy-resolved orchestrator as DOT");
  compose_cmd->add_option("--policy", policy, "policy for --dot");
  auto *export_cmd = add("export-game", "encode the instance as a safety game");
  export_cmd->add_option("--format", format, "neutral | smv")
      ->check(CLI::IsMember({"neutral", "smv"}));
  export_cmd->add_option("-o,--output", output, "destination (default stdout)");
  auto *simulate_cmd = add("simulate", "interactive stepper reading requests from stdin");
  simulate_cmd->add_option("--policy", policy, "lowest-index | round-robin | avoid-set:K,...");
  auto *dist_cmd = add("dist-sim", "run the distributed local orchestrators");
  dist_cmd->add_option("--requests", requests, "request sequence file")->required();
  dist_cmd->add_option("--fail", fails, "ROUND:PEER, peer fails before that round");
  dist_cmd->add_option("--policy", policy, "shared delegation policy");
  auto *bench_cmd = add("bench", "time the reference and OpenMP kernels");
  bench_cmd->add_option("--repeat", repeat, "repetitions")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInputError;
  }

  try {
    if (validate_cmd->parsed())
      return cmd_validate(cx, file);
    if (check_cmd->parsed())
      return cmd_check(cx, file);
    if (compose_cmd->parsed())
      return cmd_compose(cx, file, output, dot, policy);
    if (export_cmd->parsed())
      return cmd_export_game(cx, file, format, output);
    if (simulate_cmd->parsed())
      return cmd_simulate(cx, file, policy);
    if (dist_cmd->parsed())
      return cmd_dist_sim(cx, file, requests, fails, policy);
    if (bench_cmd->parsed())
      return cmd_bench(cx, file, repeat);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

} // namespace roman
