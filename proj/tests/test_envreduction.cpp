#include "optsession/envreduction.hpp"
#include "optsession/examples.hpp"
#include "optsession/explorer.hpp"
#include "optsession/printer.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace optsession;

namespace {

const Name s{"s"}, k{"k"};
const Role rp{"p"}, rq{"q"};
const Kind V = Kind::val("V");
const Label c{"c"};

Local send_c(Local cont = l::end()) { return l::send1(rq, c, {Param{Name{"x"}, V}}, cont); }
Local get_c(Local cont = l::end()) { return l::get1(rp, c, {Param{Name{"x"}, V}}, cont); }

std::vector<std::string> rules(const std::vector<EnvStep>& steps) {
  std::vector<std::string> out;
  for (auto& st : steps) out.push_back(st.rule);
  return out;
}

std::map<Name, Global> provenance(const Fixture& f) { return f.gamma.sessions; }

// Environments reached along one scheduled run, plus the initial one.
std::vector<SessionEnv> reached(const Fixture& f, std::uint64_t seed) {
  Trace t = run(f.process, NeverFail{}, seed, 400, TypedContext{f.gamma, f.delta});
  std::vector<SessionEnv> out{f.delta};
  if (t.envTrace)
    for (auto& st : *t.envTrace) out.push_back(st.result);
  return out;
}

}  // namespace

TEST(EnvSteps, Communication) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, send_c());
  d.put({s, rq}, Mode::Plain, get_c());
  auto steps = env_steps(d);
  ASSERT_EQ(rules(steps), std::vector<std::string>{"comS'"});
  EXPECT_TRUE(steps[0].result.empty());
}

TEST(EnvSteps, ExternalInvitationLifts) {
  SessionEnv d;
  d.put({s, rp}, Mode::External, send_c());
  auto steps = env_steps(d);
  ASSERT_EQ(rules(steps), std::vector<std::string>{"comC'"});
  auto* a = steps[0].result.find({s, rp});
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->mode, Mode::Plain);
}

TEST(EnvSteps, CompletedBlockSucceeds) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, l::opt({rp, rq}, l::end(), {Param{Name{"y"}, V}}, send_c()));
  auto steps = env_steps(d);
  bool succ = false;
  for (auto& st : steps)
    if (st.base == "succ'") {
      succ = true;
      EXPECT_TRUE(type_equiv(st.result.find({s, rp})->type, send_c()));
    }
  EXPECT_TRUE(succ);
}

TEST(EnvSteps, BlockCanFailToItsContinuation) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, l::opt({rp, rq}, send_c(), {}, get_c()));
  auto steps = env_steps(d);
  auto it = std::find_if(steps.begin(), steps.end(), [](auto& st) { return st.base == "fail'"; });
  ASSERT_NE(it, steps.end());
  EXPECT_TRUE(type_equiv(it->result.find({s, rp})->type, get_c()));
}

TEST(EnvSteps, FailMayDiscardASubSessionOfTheBody) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, l::opt({rp, rq}, send_c(), {}, l::end()));
  d.put({k, Role{"src"}}, Mode::Internal, send_c());
  bool dropped = false;
  for (auto& st : env_steps(d))
    dropped |= st.base == "fail'" && st.result.empty();
  EXPECT_TRUE(dropped);
}

TEST(EnvSteps, PotentialDecreases) {
  for (auto f : {gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"}), gen_rc(3),
                 gen_rc_subsessions(3), gen_rc_nested_opt(3)}) {
    for (auto& d : reached(f, 5)) {
      auto before = env_potential(d, f.gamma.protocols);
      for (auto& st : env_steps(d, f.gamma.protocols))
        EXPECT_LT(env_potential(st.result, f.gamma.protocols), before) << f.name << " " << st.rule;
    }
  }
}

TEST(MatchingEnv, InitialisationLiftsInvitations) {
  auto f = gen_rc(3);
  Proc cur = f.process;
  SessionEnv d = f.delta;
  for (int i = 0; i < 3; ++i) {
    auto steps = enabled_steps(cur);
    auto it = std::find_if(steps.begin(), steps.end(), [](auto& st) { return st.rule == "comC"; });
    ASSERT_NE(it, steps.end());
    auto env = matching_env_step(f.gamma, d, *it);
    EXPECT_EQ(env.rule, "comC'");
    d = env.result;
    cur = it->result;
  }
  for (auto& [key, a] : d.assignments) EXPECT_EQ(a.mode, Mode::Plain);
}

TEST(MatchingEnv, LinkCommunicationAndFailure) {
  auto f = gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"});
  Proc cur = f.process;
  SessionEnv d = f.delta;
  for (int i = 0; i < 2; ++i) {
    auto st = enabled_steps(cur).front();
    d = matching_env(f.gamma, cur, d, st);
    cur = st.result;
  }
  for (auto& st : enabled_steps(cur)) {
    auto env = matching_env_step(f.gamma, d, st);
    if (st.rule == "cSO") {
      EXPECT_EQ(env.rule, "optCom");
      EXPECT_EQ(env.base, "comS'");
    }
    if (st.rule == "fail") EXPECT_EQ(env.base, "fail'");
    EXPECT_FALSE(typecheck(f.gamma, st.result, env.result)) << st.label;
  }
}

TEST(MatchingEnv, UnmatchedStepIsReported) {
  auto f = gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"});
  auto st = enabled_steps(f.process).front();
  EXPECT_THROW(matching_env(f.gamma, f.process, SessionEnv{}, st), NoMatchingEnvStep);
}

TEST(Coherence, InitialEnvironmentsAreInitiallyCoherent) {
  for (int n = 2; n <= 5; ++n) {
    auto f = gen_rc(n);
    auto v = classify_coherence(f.delta, provenance(f), {}, f.gamma.protocols);
    EXPECT_EQ(v.level, CoherenceLevel::InitiallyCoherent) << n;
    EXPECT_FALSE(v.witnesses.empty());
  }
}

TEST(Coherence, EmptyIsCoherent) {
  EXPECT_EQ(classify_coherence(SessionEnv{}).level, CoherenceLevel::Coherent);
  EXPECT_TRUE(is_coherent(SessionEnv{}));
}

TEST(Coherence, DroppingAReceiverBlockIsIncoherent) {
  auto f = gen_rc(3);
  SessionEnv d = f.delta;
  auto* a = d.find({s, Role{"p2"}});
  ASSERT_NE(a, nullptr);
  auto* o = std::get_if<LOpt>(&a->type->v);
  ASSERT_NE(o, nullptr);
  d.put({s, Role{"p2"}}, a->mode, o->cont);
  auto v = classify_coherence(d, provenance(f), {}, f.gamma.protocols);
  EXPECT_EQ(v.level, CoherenceLevel::Incoherent);
  bool unmatched = false;
  for (auto& w : v.witnesses) unmatched |= w.find("unmatched optional block") != std::string::npos;
  EXPECT_TRUE(unmatched);
}

TEST(Coherence, PlainMatchingPairIsCoherent) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, send_c());
  d.put({s, rq}, Mode::Plain, get_c());
  EXPECT_TRUE(is_coherent(d));
  d.erase({s, rq});
  EXPECT_FALSE(is_coherent(d));
  EXPECT_EQ(classify_coherence(d).level, CoherenceLevel::Incoherent);
}

TEST(Coherence, RestorationAfterEveryStep) {
  for (auto f : {gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"}), gen_rc(2), gen_rc(3),
                 gen_rc_subsessions(2), gen_rc_nested_opt(2)}) {
    for (auto& d : reached(f, 9)) {
      for (auto& st : env_steps(d, f.gamma.protocols)) {
        // Session-drop guesses of fail' are filtered by typing, checked below.
        if (st.detail.find(" drops ") != std::string::npos) continue;
        auto path = find_coherent_successor(st.result, st.result.type_size() + 16, f.gamma.protocols);
        EXPECT_TRUE(path.has_value()) << f.name << " after " << st.rule << " " << st.detail;
      }
    }
  }
}

TEST(Coherence, MatchedEnvironmentsStayRestorable) {
  for (auto f : {gen_rc_subsessions(2), gen_rc_subsessions(3), gen_rc_nested_opt(3)}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Trace t = run(f.process, Probabilistic{0.3, seed}, seed, 400, TypedContext{f.gamma, f.delta});
      ASSERT_TRUE(t.envTrace) << f.name;
      for (auto& st : *t.envTrace) {
        auto path = find_coherent_successor(st.result, st.result.type_size() + 16, f.gamma.protocols);
        EXPECT_TRUE(path.has_value()) << f.name << " seed " << seed << " after " << st.rule << " " << st.detail;
      }
    }
  }
}
