#include "optsession/examples.hpp"
#include "optsession/explorer.hpp"
#include "optsession/printer.hpp"

#include <gtest/gtest.h>
#include "json.hpp"

using namespace optsession;

namespace {

Fixture link() { return gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"}); }

}  // namespace

TEST(Policy, ParsesEveryForm) {
  EXPECT_TRUE(std::holds_alternative<NeverFail>(parse_policy("never")));
  EXPECT_TRUE(std::holds_alternative<AlwaysOffer>(parse_policy("always")));
  auto prob = parse_policy("prob:0.25:7");
  ASSERT_TRUE(std::holds_alternative<Probabilistic>(prob));
  EXPECT_DOUBLE_EQ(std::get<Probabilistic>(prob).p, 0.25);
  EXPECT_EQ(std::get<Probabilistic>(prob).seed, 7u);
  auto script = parse_policy("script", {"comC*", "fail*"});
  ASSERT_TRUE(std::holds_alternative<Scripted>(script));
  EXPECT_EQ(std::get<Scripted>(script).selectors.size(), 2u);
  EXPECT_THROW(parse_policy("sometimes"), std::invalid_argument);
  EXPECT_THROW(parse_policy("prob:1.5"), std::invalid_argument);
}

TEST(Policy, LabelSelectors) {
  EXPECT_TRUE(label_matches("comC a1<s>", "comC a1<s>"));
  EXPECT_TRUE(label_matches("comC*", "comC a1<s>"));
  EXPECT_TRUE(label_matches("*p1*", "fail p1[p1,p2]"));
  EXPECT_FALSE(label_matches("succ*", "fail p1[p1,p2]"));
  EXPECT_TRUE(label_matches("*", ""));
}

TEST(Run, EndTerminatesImmediately) {
  auto t = run(p::end(), NeverFail{}, 0, 10);
  EXPECT_EQ(t.verdict, Verdict::Terminated);
  EXPECT_TRUE(t.steps.empty());
}

TEST(Run, DeterministicForEqualSeeds) {
  auto f = gen_rc(3);
  auto a = run(f.process, Probabilistic{0.3, 11}, 4, 400);
  auto b = run(f.process, Probabilistic{0.3, 11}, 4, 400);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].label, b.steps[i].label);
  EXPECT_EQ(trace_json(a), trace_json(b));
}

TEST(Run, BudgetIsReported) {
  auto f = gen_rc(3);
  auto t = run(f.process, NeverFail{}, 0, 2);
  EXPECT_EQ(t.verdict, Verdict::BudgetExceeded);
  EXPECT_EQ(t.steps.size(), 2u);
}

TEST(Run, RandomFailuresStillTerminate) {
  auto f = gen_rc(2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto t = run(f.process, Probabilistic{0.5, seed}, seed, 500, TypedContext{f.gamma, f.delta});
    EXPECT_EQ(t.verdict, Verdict::Terminated) << seed << " " << t.note;
    ASSERT_TRUE(t.envTrace);
    EXPECT_EQ(t.envTrace->size(), t.steps.size());
  }
}

TEST(Run, NeverFailDeliversEverything) {
  // Without failures every coordinator's broadcast reaches everyone: all end with the minimum.
  auto f = gen_rc(3);
  auto t = run(f.process, NeverFail{}, 1, 500);
  ASSERT_EQ(t.verdict, Verdict::Terminated);
  for (auto& [role, vals] : t.finalValues) {
    ASSERT_FALSE(vals.empty());
    EXPECT_EQ(vals.back().id, "0") << role.id;
  }
}

TEST(TraceJson, CarriesTheSchema) {
  auto f = link();
  auto t = run(f.process, AlwaysOffer{}, 0, 100, TypedContext{f.gamma, f.delta});
  auto j = nlohmann::json::parse(trace_json(t));
  for (auto key : {"initial", "steps", "final", "verdict"}) EXPECT_TRUE(j.contains(key)) << key;
  ASSERT_TRUE(j["steps"].is_array());
  ASSERT_EQ(j["steps"].size(), t.steps.size());
  if (!t.steps.empty()) {
    EXPECT_TRUE(j["steps"][0].contains("rule"));
    EXPECT_TRUE(j["steps"][0].contains("label"));
  }
}

TEST(Explore, EndIsASingleTerminal) {
  auto g = explore(p::end(), true);
  EXPECT_EQ(g.states.size(), 1u);
  EXPECT_EQ(g.endTerminals, 1u);
  EXPECT_TRUE(g.allTerminalsEnd());
  EXPECT_TRUE(g.relianceToEnd);
}

TEST(Explore, UnreliableLinkReachesEndEverywhere) {
  auto f = link();
  auto g = explore(f.process, true);
  EXPECT_TRUE(g.complete);
  EXPECT_TRUE(g.allTerminalsEnd());
  EXPECT_TRUE(g.relianceToEnd);
  EXPECT_EQ(g.optStatesWithoutFailEdge, 0u);
  bool fail = false;
  for (auto& e : g.edges) fail |= e.fail;
  EXPECT_TRUE(fail);
}

TEST(Explore, RotatingCoordinatorsTwoWithFailures) {
  auto f = gen_rc(2);
  auto g = explore(f.process, true);
  EXPECT_TRUE(g.complete);
  EXPECT_TRUE(g.allTerminalsEnd()) << g.stuckTerminals;
  EXPECT_TRUE(g.relianceToEnd);
  EXPECT_EQ(g.optStatesWithoutFailEdge, 0u);
}

TEST(Explore, FailFreeGraphIsASubgraph) {
  auto f = gen_rc(2);
  auto with = explore(f.process, true);
  auto without = explore(f.process, false);
  EXPECT_LE(without.states.size(), with.states.size());
  for (auto& key : without.states) EXPECT_TRUE(with.ids.contains(key));
  for (auto& e : without.edges) EXPECT_FALSE(e.fail);
}

TEST(Explore, FailFreeOutcomesAreAmongAllOutcomes) {
  auto f = link();
  auto all = terminal_outcomes(f.process, true);
  auto reliable = terminal_outcomes(f.process, false);
  ASSERT_FALSE(reliable.empty());
  for (auto& o : reliable) EXPECT_TRUE(all.contains(o));
  EXPECT_LT(reliable.size(), all.size());
}

TEST(Explore, StateCapMarksIncomplete) {
  auto f = gen_rc(3);
  auto g = explore(f.process, true, 0, 50);
  EXPECT_FALSE(g.complete);
  EXPECT_LE(g.states.size(), 51u);
}

TEST(Explore, ReportIsJson) {
  auto g = explore(link().process, true);
  auto j = nlohmann::json::parse(graph_report_json(g));
  EXPECT_EQ(j["states"].get<size_t>(), g.states.size());
  EXPECT_EQ(j["endTerminals"].get<size_t>(), g.endTerminals);
}

TEST(SubjectReduction, HoldsOnTheLink) {
  auto f = link();
  auto rep = check_subject_reduction(f.gamma, f.process, f.delta, 20, 10, 1);
  EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations[0].message);
  EXPECT_EQ(rep.walks, 20u);
  EXPECT_GT(rep.steps, 0u);
}

TEST(Reliance, FailFreePathReplaysToEnd) {
  for (auto f : {link(), gen_rc(3), gen_rc_subsessions(2), gen_rc_nested_opt(2)}) {
    auto path = fail_free_path(f.process);
    ASSERT_TRUE(path) << f.name;
    Proc cur = canonicalize(f.process);
    for (auto& st : *path) {
      EXPECT_FALSE(is_fail(st)) << f.name;
      cur = apply_step(cur, st);
    }
    EXPECT_TRUE(is<PEnd>(canonicalize(cur))) << f.name;
  }
}

TEST(Reliance, NoFailFreePathWhenOnlyFailureEnds) {
  // The block body waits for a message nobody sends: only failure gets past it.
  auto body = p::get1(Name{"s"}, Role{"q"}, Role{"r"}, Label{"c"}, {Name{"x"}}, p::optend(Role{"r"}, {}));
  auto t = p::opt(Role{"r"}, {Role{"r"}, Role{"q"}}, body, {}, {}, p::end());
  EXPECT_FALSE(fail_free_path(t));
  EXPECT_FALSE(explore(t, false).relianceToEnd);
  EXPECT_TRUE(explore(t, true).allTerminalsEnd());
}
