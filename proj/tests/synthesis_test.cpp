#include "roman/error.hpp"
#include "roman/synthesis.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/runs.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

using namespace roman;
using namespace roman::testing;

namespace {

std::string error_code(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return "";
}

SimPair find_pair(const OrchestratorGenerator &g, const std::string &label) {
  for (const auto &p : g.relation().pairs())
    if (g.pair_label(p) == label)
      return p;
  ADD_FAILURE() << "no pair " << label;
  return {};
}

OpIndex op(const OrchestratorGenerator &g, const std::string &name) { return *g.model().find_op(name); }

// Recompute-and-check oracle: the reduced community restarted at the
// projected states simulates the current target state.
bool survives_failure(const OrchestratorGenerator &g, const OrchestrationState &s,
                      const std::set<ServiceIndex> &failed) {
  const auto &model = g.model();
  const auto &cfg = g.product().config(s.pair.config);
  CompositionInstance reduced = model.source();
  reduced.services.clear();
  for (ServiceIndex local = 1; local <= model.num_services(); ++local) {
    if (failed.count(g.original(local)))
      continue;
    auto svc = model.source().services[local - 1];
    svc.initial = model.service(local).states[cfg.services[local - 1]];
    reduced.services.push_back(svc);
  }
  if (reduced.services.empty())
    return false;
  if (reduced.databox)
    reduced.databox->initial = model.databox().states[cfg.db];
  Oracle oracle(reduced);
  auto rel = oracle.naive_simulation();
  return rel.count({model.target().states[s.pair.t_state], oracle.initial()}) > 0;
}

} // namespace

TEST(Generator, ExampleOneOmega) {
  auto g = synthesize(load("example1.json"));
  EXPECT_EQ(g.delegates(find_pair(g, "(c0,(a0,b0))"), op(g, "login")), std::vector<ServiceIndex>{1});
  EXPECT_EQ(g.delegates(find_pair(g, "(c2,(a1,b1))"), op(g, "stock")), std::vector<ServiceIndex>{2});
  EXPECT_TRUE(g.delegates(find_pair(g, "(c0,(a0,b0))"), op(g, "stock")).empty());
}

TEST(Generator, UnrealizableInstanceThrows) {
  EXPECT_EQ(error_code([] { synthesize(load("stock_first.json")); }), "E_UNREALIZABLE");
}

TEST(Generator, SingleServiceIdenticalToTarget) {
  CompositionInstance inst;
  inst.alphabet = {"a", "b"};
  auto t = make_system("T", {"x", "y"}, "x", {"x"}, {tr("x", "a", "y"), tr("y", "b", "x")});
  inst.target = t;
  t.id = "S";
  inst.services.push_back(t);
  auto g = synthesize(inst);
  ASSERT_FALSE(g.omega().empty());
  for (const auto &e : g.omega())
    EXPECT_EQ(e.delegates, std::vector<ServiceIndex>{1});
}

TEST(Generator, JsonAndDotExports) {
  auto g = synthesize(load("example1.json"));
  auto j = nlohmann::json::parse(g.to_json());
  EXPECT_EQ(j["initial"]["target"], "c0");
  EXPECT_EQ(j["services"], nlohmann::json::array({1, 2}));
  EXPECT_EQ(j["pairs"].size(), g.relation().size());
  EXPECT_EQ(j["omega"].size(), g.omega().size());
  auto dot = g.to_dot(Policy::lowest_index());
  EXPECT_NE(dot.find("label=\"login/1\""), std::string::npos);
  EXPECT_NE(dot.find("label=\"country/2\""), std::string::npos);
  EXPECT_EQ(dot.find("login/2"), std::string::npos);
}

TEST(Policy, ParseAndChoose) {
  EXPECT_EQ(Policy::parse("lowest-index"), Policy::lowest_index());
  EXPECT_EQ(Policy::parse("round-robin"), Policy::round_robin());
  EXPECT_EQ(Policy::parse("avoid-set:2,3"), Policy::avoid_set({2, 3}));
  EXPECT_EQ(Policy::parse("avoid-set:2,3").name(), "avoid-set:2,3");
  EXPECT_EQ(error_code([] { Policy::parse("random"); }), "E_BAD_POLICY");
  EXPECT_EQ(error_code([] { Policy::parse("avoid-set:x"); }), "E_BAD_POLICY");

  std::vector<ServiceIndex> c{1, 3, 4};
  EXPECT_EQ(Policy::lowest_index().choose(c, 3), 1u);
  EXPECT_EQ(Policy::round_robin().choose(c, 0), 1u);
  EXPECT_EQ(Policy::round_robin().choose(c, 3), 4u);
  EXPECT_EQ(Policy::round_robin().choose(c, 4), 1u);
  EXPECT_EQ(Policy::avoid_set({1, 3}).choose(c, 0), 4u);
  EXPECT_EQ(Policy::avoid_set({1, 3, 4}).choose(c, 0), 1u);
}

TEST(Step, ExampleOneLogin) {
  auto g = synthesize(load("example1.json"));
  auto s = step(g, start(g), op(g, "login"));
  EXPECT_EQ(g.pair_label(s.pair), "(c1,(a1,b0))");
  ASSERT_EQ(s.history.size(), 1u);
  EXPECT_EQ(s.history[0].svc, 1u);
  EXPECT_EQ(s.last, 1u);
}

TEST(Step, ErrorCodes) {
  auto g = synthesize(load("example1.json"));
  EXPECT_EQ(error_code([&] { step(g, start(g), op(g, "stock")); }), "E_NO_TARGET_TRANSITION");

  auto d = synthesize(load("databox_demo.json"));
  auto s = step(d, start(d), op(d, "open"));
  EXPECT_EQ(error_code([&] { step(d, s, op(d, "edit")); }), "E_OBSERVATION_REQUIRED");
  auto clean = *d.model().find_state(d.model().databox(), "clean");
  auto dirty = *d.model().find_state(d.model().databox(), "dirty");
  EXPECT_EQ(error_code([&] { step(d, s, op(d, "edit"), Observation{1, clean}); }),
            "E_OBSERVATION_MISMATCH");
  auto after = step(d, s, op(d, "edit"), Observation{0, dirty});
  EXPECT_EQ(d.pair_label(after.pair), "(d2,(e0,s0|dirty))");
}

TEST(Step, ExampleOneCycleReturnsToTargetInitial) {
  auto g = synthesize(load("example1.json"));
  auto s = start(g);
  for (const char *o : {"login", "country", "stock", "logout"})
    s = step(g, s, op(g, o));
  EXPECT_EQ(g.pair_label(s.pair), "(c0,(a0,b1))");
  std::vector<ServiceIndex> who;
  for (const auto &h : s.history)
    who.push_back(h.svc);
  EXPECT_EQ(who, (std::vector<ServiceIndex>{1, 2, 2, 1}));
}

TEST(Step, DeterministicInstanceNeverNeedsObservations) {
  auto g = synthesize(load("example1.json"));
  std::function<void(const OrchestrationState &, int)> walk = [&](const OrchestrationState &s, int d) {
    if (d == 0)
      return;
    for (OpIndex o = 0; o < g.model().num_ops(); ++o)
      if (g.model().target_next(s.pair.t_state, o) != kNoState)
        walk(step(g, s, o), d - 1);
  };
  EXPECT_NO_THROW(walk(start(g), 10));
}

TEST(HandleFailure, ExampleOneLosesTheOnlyStockProvider) {
  auto g = synthesize(load("example1.json"));
  EXPECT_EQ(error_code([&] { handle_failure(g, start(g), {2}); }), "E_UNREALIZABLE_FROM_HERE");
  EXPECT_EQ(error_code([&] { handle_failure(g, start(g), {7}); }), "E_BAD_INDEX");
}

TEST(HandleFailure, EmptyFailureSetKeepsTheGenerator) {
  auto g = synthesize(load("example1.json"));
  auto same = handle_failure(g, start(g), {});
  EXPECT_EQ(same, g);
}

TEST(HandleFailure, DuplicateTakesOverWhereverTheOracleAgrees) {
  auto g = synthesize(load("example1_dup.json"));
  std::size_t switched = 0;
  enumerate_runs(g, start(g), 6, [&](const OrchestrationState &s) {
    const bool expect = survives_failure(g, s, {2});
    OrchestratorGenerator fresh = g;
    try {
      fresh = handle_failure(g, s, {2});
    } catch (const Error &e) {
      EXPECT_FALSE(expect) << g.pair_label(s.pair);
      EXPECT_EQ(e.code(), "E_UNREALIZABLE_FROM_HERE");
      return;
    }
    ASSERT_TRUE(expect) << g.pair_label(s.pair);
    ++switched;
    EXPECT_EQ(fresh.origin(), (std::vector<ServiceIndex>{1, 3}));
    const auto &t = g.model().target().states[s.pair.t_state];
    auto here = fresh.initial();
    if (t == "c1")
      EXPECT_EQ(fresh.original_delegates(here, op(fresh, "country")), std::vector<ServiceIndex>{3});
    for (const auto &e : fresh.omega())
      for (auto k : fresh.original_delegates(e.pair, e.op)) {
        const auto &name = fresh.model().op_name(e.op);
        EXPECT_EQ(k, (name == "login" || name == "logout") ? 1u : 3u);
      }
  });
  EXPECT_GT(switched, 0u);
}

TEST(HandleFailure, DuplicateCompletesTheConversation) {
  auto g = synthesize(load("example1_dup.json"));
  auto s = step(g, start(g), op(g, "login"));
  auto fresh = handle_failure(g, s, {2});
  s = resume(s, fresh);
  EXPECT_EQ(s.history.size(), 1u);
  for (const char *o : {"country", "stock", "logout"})
    s = step(fresh, s, op(fresh, o));
  std::vector<ServiceIndex> who;
  for (const auto &h : s.history)
    who.push_back(h.svc);
  EXPECT_EQ(who, (std::vector<ServiceIndex>{1, 3, 3, 1}));
}

TEST(SynthesisProperties, OmegaSoundness) {
  InstanceGenerator gen(test_seed() + 30);
  for (int i = 0; i < 100; ++i) {
    auto g = synthesize(realizable_instance(gen));
    const auto &model = g.model();
    for (const auto &p : g.relation().pairs())
      for (OpIndex o = 0; o < model.num_ops(); ++o) {
        auto t2 = model.target_next(p.t_state, o);
        if (t2 == kNoState)
          continue;
        const auto &ks = g.delegates(p, o);
        EXPECT_FALSE(ks.empty());
        for (auto k : ks) {
          auto succ = g.product().successors(p.config, o, k);
          EXPECT_FALSE(succ.empty());
          for (auto c : succ)
            EXPECT_TRUE(g.relation().contains(t2, c));
        }
      }
  }
}

TEST(SynthesisProperties, PolicyIrrelevanceForRealizability) {
  InstanceGenerator gen(test_seed() + 31);
  for (int i = 0; i < 60; ++i) {
    auto g = synthesize(realizable_instance(gen));
    for (auto policy : {Policy::lowest_index(), Policy::round_robin(), Policy::avoid_set({1})})
      EXPECT_NO_THROW(enumerate_runs(g, start(g, policy), 6, [](const OrchestrationState &) {}));
  }
}

TEST(SynthesisProperties, ReplayReproducesThePair) {
  InstanceGenerator gen(test_seed() + 32);
  for (int i = 0; i < 100; ++i) {
    auto g = synthesize(realizable_instance(gen));
    auto policy = i % 2 ? Policy::round_robin() : Policy::lowest_index();
    auto s = random_run(g, start(g, policy), 20, gen);
    auto r = replay(g, policy, s.history);
    EXPECT_EQ(r.pair, s.pair);
    EXPECT_EQ(r.history, s.history);
  }
}

TEST(SynthesisProperties, SwitchingSoundness) {
  InstanceGenerator gen(test_seed() + 33);
  int switched = 0, refused = 0;
  for (int i = 0; i < 150; ++i) {
    auto g = synthesize(realizable_instance(gen, 2));
    auto s = random_run(g, start(g), static_cast<std::size_t>(gen.uniform(0, 8)), gen);
    std::set<ServiceIndex> failed{static_cast<ServiceIndex>(gen.uniform(1, static_cast<int>(g.model().num_services())))};
    const bool expect = survives_failure(g, s, failed);
    try {
      auto fresh = handle_failure(g, s, failed);
      ASSERT_TRUE(expect);
      for (auto k : fresh.origin())
        EXPECT_FALSE(failed.count(k));
      auto resumed = resume(s, fresh);
      EXPECT_NO_THROW(enumerate_runs(fresh, resumed, 5, [](const OrchestrationState &) {}));
      ++switched;
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), "E_UNREALIZABLE_FROM_HERE");
      EXPECT_FALSE(expect);
      ++refused;
    }
  }
  EXPECT_GT(switched, 10);
  EXPECT_GT(refused, 10);
}

TEST(SynthesisProperties, KernelsProduceEqualGenerators) {
  InstanceGenerator gen(test_seed() + 34);
  for (int i = 0; i < 100; ++i) {
    auto inst = realizable_instance(gen);
    EXPECT_EQ(synthesize(inst, Kernel::openmp), synthesize(inst, Kernel::reference));
  }
}
