#include "optsession/examples.hpp"
#include "optsession/parser.hpp"
#include "optsession/printer.hpp"
#include "optsession/projection.hpp"
#include "support.hpp"

#include <fmt/format.h>
#include <gtest/gtest.h>

using namespace optsession;

namespace {

const Kind V = Kind::val("V");
const Label c{"c"};

Role pr(int i) { return Role{fmt::format("p{}", i)}; }
Name val(int i, int j) { return Name{fmt::format("v{}_{}", i, j)}; }

// Local side of one unreliable link, written out by hand.
Local link_send(const Role& src, const Name& v, const Role& trg) {
  return l::opt({src, trg}, l::send1(trg, c, {Param{v, V}}, l::end()), {}, l::end());
}
Local link_recv(const Role& src, const Name& v, const Role& trg, const Name& d, Local cont) {
  return l::opt({src, trg}, l::get1(src, c, {Param{v, V}}, l::end()), {Param{d, V}}, cont);
}

// i-1 receptions, then the n-1 sends of round i in parallel with the n-i later receptions.
Local ltrc_oracle(int n, int i) {
  Local later = l::end();
  for (int j = n; j > i; --j) later = link_recv(pr(j), val(j, j - 1), pr(i), val(i, j - 1), later);
  std::vector<Local> round;
  for (int j = 1; j <= n; ++j)
    if (j != i) round.push_back(link_send(pr(i), val(i, i - 1), pr(j)));
  round.push_back(later);
  Local t = l::par(round);
  for (int j = i - 1; j >= 1; --j) t = link_recv(pr(j), val(j, j - 1), pr(i), val(i, j - 1), t);
  return t;
}

// Segments (a), (b), (c) of the restriction onto p_i as a chain of links.
Global restriction_oracle(int n, int i) {
  std::vector<std::pair<int, int>> links;  // (sender, receiver)
  for (int j = 1; j < i; ++j) links.push_back({j, i});
  for (int j = 1; j <= n; ++j)
    if (j != i) links.push_back({i, j});
  for (int j = i + 1; j <= n; ++j) links.push_back({j, i});
  Global g = g::end();
  for (auto it = links.rbegin(); it != links.rend(); ++it) {
    auto [src, trg] = *it;
    g = unreliable_link(pr(src), val(src, src - 1), pr(trg), val(trg, src - 1), g);
  }
  return g;
}

std::string sorted(const Local& t) { return print(t, PrintOptions{false, true}); }

}  // namespace

TEST(Golden, RotatingCoordinatorsThreeRoles) {
  auto g = gen_rc_global(3);
  for (int i = 1; i <= 3; ++i) {
    auto golden = parse_local(testkit::read_file(fmt::format("{}/ltrc3_p{}.lt", GOLDEN_DIR, i)));
    auto got = project(g, pr(i));
    EXPECT_EQ(print(got), print(golden)) << "p" << i;
    EXPECT_TRUE(alpha_eq(got, golden)) << "p" << i;
  }
}

TEST(Golden, FormulaOracleForSeveralSizes) {
  for (int n = 2; n <= 5; ++n) {
    auto g = gen_rc_global(n);
    for (int i = 1; i <= n; ++i)
      EXPECT_EQ(sorted(project(g, pr(i))), sorted(ltrc_oracle(n, i))) << n << " p" << i;
  }
}

TEST(Restrict, EndStaysEnd) { EXPECT_TRUE(is<GEnd>(restrict(g::end(), Role{"r"}))); }

TEST(Restrict, BlockWithoutTheRoleKeepsOnlyContinuation) {
  auto cont = g::com1(Role{"q"}, Role{"r"}, c, {}, g::end());
  auto g = unreliable_link(Role{"src"}, Name{"v"}, Role{"trg"}, Name{"d"}, cont);
  EXPECT_TRUE(alpha_eq(restrict(g, Role{"q"}), restrict(cont, Role{"q"})));
}

TEST(Restrict, RotatingCoordinatorsThreeSegments) {
  for (int n = 2; n <= 5; ++n)
    for (int i = 1; i <= n; ++i)
      EXPECT_TRUE(alpha_eq(restrict(gen_rc_global(n), pr(i)), restriction_oracle(n, i)))
          << n << " p" << i << "\n" << print(restrict(gen_rc_global(n), pr(i)));
}

TEST(Restrict, SubSessionVariantIsUnchanged) {
  // Every call involves all roles, so nothing can be dropped.
  for (int n = 2; n <= 4; ++n) {
    auto g = gen_rc_subsessions_global(n);
    for (int i = 1; i <= n; ++i) EXPECT_TRUE(alpha_eq(restrict(g, pr(i)), g)) << n << " p" << i;
  }
}

TEST(Project, UnreliableLinkSender) {
  auto g = unreliable_link(Role{"src"}, Name{"v"}, Role{"trg"}, Name{"d"}, g::end());
  auto t = project(g, Role{"src"});
  ASSERT_TRUE(is<LOpt>(t));
  auto& o = std::get<LOpt>(t->v);
  EXPECT_TRUE(o.binders.empty());
  EXPECT_TRUE(is<LSend>(o.body));
  EXPECT_TRUE(alpha_eq(t, link_send(Role{"src"}, Name{"v"}, Role{"trg"})));
}

TEST(Project, UnreliableLinkReceiverHasDefault) {
  auto g = unreliable_link(Role{"src"}, Name{"v"}, Role{"trg"}, Name{"d"}, g::end());
  auto t = project(g, Role{"trg"});
  ASSERT_TRUE(is<LOpt>(t));
  auto& o = std::get<LOpt>(t->v);
  ASSERT_EQ(o.binders.size(), 1u);
  EXPECT_EQ(o.binders[0].name, Name{"d"});
  EXPECT_TRUE(alpha_eq(t, link_recv(Role{"src"}, Name{"v"}, Role{"trg"}, Name{"d"}, l::end())));
}

TEST(Project, EmptyDefaultsPutBlockInParallelWithContinuation) {
  auto cont = g::com1(Role{"src"}, Role{"trg"}, Label{"e"}, {}, g::end());
  auto g = unreliable_link(Role{"src"}, Name{"v"}, Role{"trg"}, Name{"d"}, cont);
  auto t = project(g, Role{"src"});
  EXPECT_TRUE(is<LPar>(t)) << print(t);
  EXPECT_EQ(par_components(t).size(), 2u);
}

TEST(Project, UninvolvedRoleGetsEnd) {
  for (int n = 2; n <= 4; ++n) EXPECT_TRUE(is<LEnd>(project(gen_rc_global(n), Role{"nobody"})));
}

TEST(Project, AgreesWithProjectionOfRestriction) {
  std::vector<Global> gs;
  for (int n = 2; n <= 4; ++n) {
    gs.push_back(gen_rc_global(n));
    gs.push_back(gen_rc_subsessions_global(n));
    gs.push_back(gen_rc_nested_opt_global(n));
  }
  for (auto& g : gs) {
    auto env = declared_protocols(g);
    for (auto& r : roles_of(g))
      EXPECT_TRUE(alpha_eq(project(g, env, r), project(restrict(g, r), env, r))) << r.id;
  }
}

TEST(Project, SubSessionRoundShape) {
  // p2 of three: entry for round 1, then the call of round 2 whose continuation holds its own
  // entry as src, the requests, and the entry of round 3.
  auto g = gen_rc_subsessions_global(3);
  auto t = project(g, declared_protocols(g), pr(2));
  ASSERT_TRUE(is<LEnt>(t)) << print(t);
  auto& e = std::get<LEnt>(t->v);
  EXPECT_EQ(e.inviter, pr(1));
  ASSERT_TRUE(is<LCall>(e.cont)) << print(t);
  auto parts = par_components(std::get<LCall>(e.cont->v).cont);
  int ents = 0, reqs = 0;
  for (auto& part : parts) {
    ents += is<LEnt>(part);
    reqs += is<LReq>(part);
  }
  EXPECT_EQ(ents, 2);  // as src, and the later round as target
  EXPECT_EQ(reqs, 3);  // src plus one per target
}

TEST(Project, UnknownProtocolIsReported) {
  auto g = g::call(Role{"p"}, Name{"Nope"}, {Role{"p"}, Role{"q"}}, {}, g::end());
  EXPECT_THROW(project(g, Role{"p"}), UnknownProtocol);
}

TEST(ProtocolEnv, LookupOfAbsentProtocolFails) {
  ProtocolEnv env;
  EXPECT_THROW(env.at(Name{"R"}), UnknownProtocol);
  auto ext = env.extended(Name{"R"}, ProtocolDef{{Role{"a"}}, {}, {}, g::end()});
  EXPECT_TRUE(ext.contains(Name{"R"}));
  EXPECT_FALSE(env.contains(Name{"R"}));
}
