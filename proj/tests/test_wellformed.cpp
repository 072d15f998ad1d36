#include "optsession/examples.hpp"
#include "optsession/parser.hpp"
#include "optsession/projection.hpp"
#include "optsession/wellformed.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace optsession;

namespace {

const Role rp{"p"}, rq{"q"}, r{"r"};
const Label c{"c"};

KindEnv values_of(const GlobalEnv& gamma) {
  KindEnv env;
  for (auto& [n, k] : gamma.values) env[n.id] = k;
  for (auto& gv : gamma.sessions)
    for (auto& n : value_names(gv.second)) env.emplace(n.id, Kind::val("V"));
  return env;
}

bool has_rule(const WfReport& rep, const std::string& rule) {
  for (auto& v : rep.violations)
    if (v.rule == rule) return true;
  return false;
}

}  // namespace

TEST(Kinding, EndIsFine) { EXPECT_TRUE(check_kinding(g::end(), {}).ok); }

TEST(Kinding, RolePayloadIsRejected) {
  auto g = g::com1(rp, rq, c, {Param{Name{"v"}, Kind::role()}}, g::end());
  auto rep = check_kinding(g, {});
  EXPECT_FALSE(rep.ok);
  EXPECT_TRUE(has_rule(rep, "kind.payload"));
}

TEST(Kinding, ValueInRoleSlotIsRejected) {
  auto g = g::com1(rp, rq, c, {}, g::end());
  auto rep = check_kinding(g, {{"p", Kind::val("V")}});
  EXPECT_TRUE(has_rule(rep, "kind.role-slot"));
}

TEST(Kinding, UndeclaredProtocolIsRejected) {
  auto g = g::call(rp, Name{"R"}, {rp, rq}, {}, g::end());
  EXPECT_TRUE(has_rule(check_kinding(g, {}), "kind.protocol"));
}

TEST(Projectable, SharedRoleInParallel) {
  auto g = g::par(g::com1(rp, rq, c, {}, g::end()), g::com1(rp, r, c, {}, g::end()));
  EXPECT_TRUE(has_rule(check_projectable(g), "proj.par-shared-role"));
}

TEST(Projectable, BlockUsingNonParticipant) {
  auto g = g::opt({GOptPart{rp, {}}, GOptPart{rq, {}}}, g::com1(rp, r, c, {}, g::end()), g::end());
  EXPECT_TRUE(has_rule(check_projectable(g), "proj.opt-roles"));
}

TEST(Projectable, ChoiceBranchesMustAgreeForBystanders) {
  auto g = g::choice(g::com1(rp, rq, c, {}, g::com1(rq, r, c, {}, g::end())), rp,
                     g::com1(rp, rq, Label{"d"}, {}, g::end()));
  EXPECT_TRUE(has_rule(check_projectable(g), "proj.choice-agreement"));
}

TEST(Projectable, BranchesMustAgreeForBystanders) {
  auto g = g::com(rp, rq,
                  {GBranch{c, {}, g::com1(rq, r, c, {}, g::end())}, GBranch{Label{"d"}, {}, g::end()}});
  EXPECT_TRUE(has_rule(check_projectable(g), "proj.branch-agreement"));
}

TEST(Projectable, LetBodyRolesMustBeDeclared) {
  auto g = g::decl(Name{"R"}, {rp}, {}, {}, g::com1(rp, r, c, {}, g::end()), g::end());
  EXPECT_TRUE(has_rule(check_projectable(g), "proj.let-roles"));
}

TEST(Linearity, IdenticalTriplesInParallelAreFlagged) {
  auto g = g::par(g::com1(rp, rq, c, {}, g::end()), g::com1(rp, rq, c, {}, g::end()));
  EXPECT_TRUE(has_rule(check_linearity(g), "linearity"));
}

TEST(Linearity, SingleCommunicationIsFine) {
  EXPECT_TRUE(check_linearity(g::com1(rp, rq, c, {}, g::end())).ok);
}

TEST(WellFormed, ReportOkIffNoViolations) {
  auto bad = g::par(g::com1(rp, rq, c, {}, g::end()), g::com1(rp, rq, c, {}, g::end()));
  auto rep = check_wellformed(bad, {});
  EXPECT_EQ(rep.ok, rep.violations.empty());
  EXPECT_FALSE(rep.ok);
}

TEST(WellFormed, AllGeneratedFixtures) {
  for (int n = 2; n <= 5; ++n) {
    for (auto f : {gen_rc(n), gen_rc_subsessions(n), gen_rc_nested_opt(n)}) {
      auto rep = check_wellformed(f.global, values_of(f.gamma));
      EXPECT_TRUE(rep.ok) << f.name << " " << n << ": "
                          << (rep.violations.empty() ? "" : rep.violations[0].rule + " " + rep.violations[0].message);
    }
  }
  auto link = gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"});
  EXPECT_TRUE(check_wellformed(link.global, values_of(link.gamma)).ok);
}

TEST(WellFormed, ProjectableTypesProjectForEveryRole) {
  testkit::Gen gen(5);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    auto g = gen.global(3);
    if (!check_projectable(g).ok || !check_kinding(g, {}).ok) continue;
    ++checked;
    for (auto& role : roles_of(g)) EXPECT_NO_THROW(project(g, declared_protocols(g), role)) << role.id;
  }
  EXPECT_GT(checked, 20);
}
