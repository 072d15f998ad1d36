#include "optsession/env.hpp"
#include "optsession/examples.hpp"
#include "optsession/printer.hpp"
#include "optsession/typecheck.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace optsession;

namespace {

const Name s{"s"};
const Role rp{"p"}, rq{"q"};
const Kind V = Kind::val("V");

Local send_c(const Role& to) { return l::send1(to, Label{"c"}, {Param{Name{"x"}, V}}, l::end()); }
Local get_c(const Role& from) { return l::get1(from, Label{"c"}, {Param{Name{"x"}, V}}, l::end()); }

}  // namespace

TEST(Merge, EmptyIsUnit) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, send_c(rq));
  EXPECT_TRUE(env_equiv(merge_env(d, {}), d));
  EXPECT_TRUE(env_equiv(merge_env({}, d), d));
}

TEST(Merge, SharedEndpointBecomesParallel) {
  SessionEnv d1, d2;
  d1.put({s, rp}, Mode::Plain, send_c(rq));
  d2.put({s, rp}, Mode::Plain, get_c(rq));
  auto m = merge_env(d1, d2);
  ASSERT_NE(m.find({s, rp}), nullptr);
  EXPECT_TRUE(type_equiv(m.find({s, rp})->type, l::par(send_c(rq), get_c(rq))));
}

TEST(Merge, DisjointEndpointsUnion) {
  SessionEnv d1, d2;
  d1.put({s, rp}, Mode::Plain, send_c(rq));
  d2.put({s, rq}, Mode::Plain, get_c(rp));
  EXPECT_EQ(merge_env(d1, d2).assignments.size(), 2u);
}

TEST(Merge, ReturnKindsGoToEitherSideButNotBoth) {
  SessionEnv d1, d2;
  d1.returnKinds = ReturnKinds{rp, {V}};
  EXPECT_EQ(merge_env(d1, d2).returnKinds, d1.returnKinds);
  EXPECT_EQ(merge_env(d2, d1).returnKinds, d1.returnKinds);
  d2.returnKinds = ReturnKinds{rq, {}};
  try {
    merge_env(d1, d2);
    FAIL() << "merged two return kinds";
  } catch (const EnvError& e) {
    EXPECT_EQ(e.code, EnvError::Code::DuplicateReturnKinds);
  }
}

TEST(Merge, ModesMustAgree) {
  SessionEnv d1, d2;
  d1.put({s, rp}, Mode::Plain, send_c(rq));
  d2.put({s, rp}, Mode::External, send_c(rq));
  EXPECT_THROW(merge_env(d1, d2), EnvError);
}

TEST(Merge, EndAssignmentsAreNotStored) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, l::end());
  EXPECT_TRUE(d.empty());
}

TEST(Merge, CommutativeOnRandomEnvironments) {
  testkit::Gen gen(3);
  for (int i = 0; i < 200; ++i) {
    auto a = gen.env(Mode::Plain), b = gen.env(Mode::Plain);
    EXPECT_TRUE(env_equiv(merge_env(a, b), merge_env(b, a))) << print(a) << " / " << print(b);
  }
}

TEST(Split, TopLevelParallelOfRotatingCoordinators) {
  auto f = gen_rc(3);
  SessionEnv plain;
  for (auto& [k, a] : f.delta.assignments) plain.put(k, Mode::Plain, a.type);
  // One process per participant, each using only its own endpoint.
  std::vector<Proc> users;
  for (auto& [k, a] : plain.assignments)
    users.push_back(p::send(s, k.role, Role{"x"}, Label{"c"}, {}, p::end()));
  auto cands = split_candidates(users, plain);
  ASSERT_FALSE(cands.empty());
  for (auto& part : cands.front()) EXPECT_EQ(part.assignments.size(), 1u);
}

TEST(Split, EndTakesNothing) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, send_c(rq));
  auto user = p::send(s, rp, rq, Label{"c"}, {Name{"v"}}, p::end());
  auto [left, right] = split_delta(p::end(), user, d);
  EXPECT_TRUE(left.empty());
  EXPECT_TRUE(env_equiv(right, d));
}

TEST(Split, ParallelTypeGoesToRespectiveUsers) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, l::par(send_c(rq), get_c(rq)));
  auto sender = p::send(s, rp, rq, Label{"c"}, {Name{"v"}}, p::end());
  auto receiver = p::get1(s, rq, rp, Label{"c"}, {Name{"y"}}, p::end());
  auto [l1, l2] = split_delta(sender, receiver, d);
  EXPECT_TRUE(type_equiv(l1.find({s, rp})->type, send_c(rq)));
  EXPECT_TRUE(type_equiv(l2.find({s, rp})->type, get_c(rq)));
  EXPECT_TRUE(env_equiv(merge_env(l1, l2), d));
}

TEST(Split, UnusedEndpointIsAmbiguous) {
  SessionEnv d;
  d.put({s, rp}, Mode::Plain, send_c(rq));
  try {
    split_delta(p::end(), p::end(), d);
    FAIL() << "split an unused endpoint";
  } catch (const EnvError& e) {
    EXPECT_EQ(e.code, EnvError::Code::SplitAmbiguous);
  }
}

TEST(InitialEnv, RotatingCoordinators) {
  auto g = gen_rc_global(3);
  auto env = build_initial_env(g, {Role{"p1"}, Role{"p2"}, Role{"p3"}},
                               {Name{"a1"}, Name{"a2"}, Name{"a3"}});
  EXPECT_EQ(env.gamma.sharedChans.size(), 3u);
  EXPECT_EQ(env.gamma.sessions.count(s), 1u);
  for (auto& [k, a] : env.delta.assignments) {
    EXPECT_EQ(a.mode, Mode::External);
    EXPECT_TRUE(type_equiv(a.type, env.gamma.sharedChans.at(Name{"a" + k.role.id.substr(1)}).type));
  }
}

TEST(InitialEnv, EndWithoutRoles) {
  auto env = build_initial_env(g::end(), {}, {});
  EXPECT_TRUE(env.delta.empty());
  EXPECT_TRUE(is<GEnd>(env.gamma.sessions.at(s)));
}

TEST(InitialEnv, SubSessionsDeclareTheProtocol) {
  auto g = gen_rc_subsessions_global(3);
  auto env = build_initial_env(g, {Role{"p1"}, Role{"p2"}, Role{"p3"}},
                               {Name{"a1"}, Name{"a2"}, Name{"a3"}});
  EXPECT_TRUE(env.gamma.protocols.contains(Name{"R3"}));
}

TEST(InitialEnv, OneChannelPerRole) {
  EXPECT_THROW(build_initial_env(g::end(), {rp}, {}), std::invalid_argument);
}
