#include "optsession/printer.hpp"
#include "optsession/syntax.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace optsession;

namespace {

const Name a{"a"}, b{"b"}, s{"s"}, x{"x"}, y{"y"}, v{"v"};
const Role r{"r"}, q{"q"};

// Naive free-name oracle for the binder-free fragment plus In and Res.
std::set<Name> naive_free(const Proc& t) {
  std::set<Name> out;
  std::visit(overloaded{
                 [&](const PIn& i) {
                   auto inner = naive_free(i.cont);
                   for (auto& bnd : i.binders) inner.erase(bnd);
                   out = inner;
                   out.insert(i.chan);
                 },
                 [&](const POut& o) {
                   out = naive_free(o.cont);
                   out.insert(o.chan);
                   out.insert(o.payload.begin(), o.payload.end());
                 },
                 [&](const PRes& res) {
                   out = naive_free(res.body);
                   out.erase(res.binder);
                 },
                 [&](const PPar& par) {
                   out = naive_free(par.left);
                   auto rr = naive_free(par.right);
                   out.insert(rr.begin(), rr.end());
                 },
                 [&](const auto&) {},
             },
             t->v);
  return out;
}

}  // namespace

TEST(FreeNames, EndHasNone) { EXPECT_TRUE(free_names(p::end()).empty()); }

TEST(FreeNames, OutputMentionsChannelAndPayload) {
  EXPECT_EQ(free_names(p::out(a, {s}, p::end())), (std::set<Name>{a, s}));
}

TEST(FreeNames, RestrictionBindsItsName) {
  auto t = p::res(x, p::out(x, {s}, p::end()));
  EXPECT_EQ(free_names(t), (std::set<Name>{s}));
  EXPECT_EQ(free_names(t), naive_free(t));
}

TEST(FreeNames, AgreesWithNaiveOracleOnChannelFragment) {
  testkit::Gen gen(7);
  std::function<Proc(int)> small = [&](int d) -> Proc {
    if (d == 0) return p::end();
    switch (gen.below(4)) {
      case 0: return p::in(gen.name(), gen.names(2), small(d - 1));
      case 1: return p::out(gen.name(), gen.names(2), small(d - 1));
      case 2: return p::res(gen.name(), small(d - 1));
      default: return p::par(small(d - 1), small(d - 1));
    }
  };
  for (int i = 0; i < 300; ++i) {
    auto t = small(4);
    EXPECT_EQ(free_names(t), naive_free(t)) << print(t);
  }
}

TEST(Substitute, ReplacesSingleFreeOccurrence) {
  auto t = substitute(p::optend(r, {x}), {{x, v}});
  EXPECT_TRUE(alpha_eq(t, p::optend(r, {v})));
}

TEST(Substitute, LeavesBoundOccurrences) {
  auto t = p::in(a, {x}, p::out(b, {x}, p::end()));
  EXPECT_TRUE(alpha_eq(substitute(t, {{x, v}}), t));
}

TEST(Substitute, AvoidsCapture) {
  auto t = p::in(a, {y}, p::out(b, {x}, p::end()));
  auto res = substitute(t, {{x, y}});
  auto& in = std::get<PIn>(res->v);
  EXPECT_NE(in.binders[0], y);
  auto& out = std::get<POut>(in.cont->v);
  EXPECT_EQ(out.payload[0], y);
  // free names of the result: (fn(t) \ {x}) ∪ {y}
  EXPECT_EQ(free_names(res), (std::set<Name>{a, b, y}));
}

TEST(Substitute, FreeNameOracleOnRandomTerms) {
  testkit::Gen gen(11);
  for (int i = 0; i < 300; ++i) {
    auto t = gen.proc(4);
    auto fn = free_names(t);
    if (!fn.count(x)) continue;
    auto res = substitute(t, {{x, y}});
    auto expect = fn;
    expect.erase(x);
    expect.insert(y);
    EXPECT_EQ(free_names(res), expect) << print(t);
  }
}

TEST(AlphaEq, Basics) {
  EXPECT_TRUE(alpha_eq(p::end(), p::end()));
  EXPECT_TRUE(alpha_eq(p::res(x, p::out(x, {}, p::end())), p::res(y, p::out(y, {}, p::end()))));
  EXPECT_FALSE(alpha_eq(p::out(x, {}, p::end()), p::out(y, {}, p::end())));
}

TEST(AlphaEq, FreshenedBindersStayEquivalent) {
  testkit::Gen gen(13);
  for (int i = 0; i < 200; ++i) {
    auto t = gen.proc(4);
    EXPECT_TRUE(alpha_eq(t, freshen_binders(t))) << print(t);
    EXPECT_TRUE(alpha_eq(t, alpha_normalize(t))) << print(t);
  }
}

TEST(FreshName, AppendsPrimesUntilUnused) {
  // Always differs from the base, even when the base is not in the avoid set.
  EXPECT_EQ(fresh_name(x, {}).id, "x'");
  EXPECT_EQ(fresh_name(x, {x}).id, "x'");
  EXPECT_EQ(fresh_name(x, {x, Name{"x'"}}).id, "x''");
}

TEST(ParComponents, FlattensAndDropsEnd) {
  auto t = p::par(p::par(p::out(a, {}, p::end()), p::end()), p::out(b, {}, p::end()));
  EXPECT_EQ(par_components(t).size(), 2u);
  EXPECT_TRUE(par_components(p::end()).empty());
}

TEST(TypeEquiv, IgnoresValueNamesAndParOrder) {
  auto t1 = l::send1(q, Label{"c"}, {Param{x, Kind::val("V")}}, l::end());
  auto t2 = l::send1(q, Label{"c"}, {Param{y, Kind::val("V")}}, l::end());
  auto t3 = l::get1(q, Label{"c"}, {Param{y, Kind::val("V")}}, l::end());
  EXPECT_TRUE(type_equiv(t1, t2));
  EXPECT_TRUE(type_equiv(l::par(t1, t3), l::par(t3, t2)));
  EXPECT_FALSE(type_equiv(t1, t3));
}

TEST(Paths, SubtermAndReplaceAgree) {
  auto t = p::par(p::out(a, {}, p::end()), p::in(b, {x}, p::out(x, {}, p::end())));
  Path path{1, 0};
  EXPECT_TRUE(alpha_eq(subterm(t, path), p::out(x, {}, p::end())));
  auto replaced = replace_at(t, path, p::end());
  EXPECT_TRUE(alpha_eq(subterm(replaced, path), p::end()));
  EXPECT_EQ(to_string(path), "1.0");
}

TEST(Kinds, ArrowEqualityIsStructural) {
  auto k1 = Kind::arrow({Kind::role(), Kind::val("V")}, Kind::protocol());
  auto k2 = Kind::arrow({Kind::role(), Kind::val("V")}, Kind::protocol());
  auto k3 = Kind::arrow({Kind::role()}, Kind::protocol());
  EXPECT_TRUE(k1 == k2);
  EXPECT_FALSE(k1 == k3);
}
