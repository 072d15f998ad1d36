#include "optsession/examples.hpp"
#include "optsession/printer.hpp"
#include "optsession/reduction.hpp"
#include "optsession/typecheck.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace optsession;
using testkit::rewrite_opt;

namespace {

const Name s{"s"}, x{"x"}, v{"v"}, w{"w"};
const Role p1{"p1"}, p2{"p2"};
const Label c{"c"};
const Kind V = Kind::val("V");

Fixture link() { return gen_unreliable_link(p1, Name{"v1"}, p2, Name{"v2"}); }

std::string rule_of(const std::optional<TypeError>& e) { return e ? e->rule : "ok"; }

// The receiver block of the link fixture is the second Opt in pre-order.
Proc with_receiver_body(const Proc& proc, const std::function<Proc(const PGet&)>& body) {
  return rewrite_opt(proc, 1, [&](const POpt& o) {
    return p::opt(o.owner, o.parts, body(std::get<PGet>(o.body->v)), o.binders, o.defaults, o.cont);
  });
}

}  // namespace

TEST(Rules, EndWithEmptyEnvironment) { EXPECT_FALSE(typecheck({}, p::end(), {})); }

TEST(Rules, EndWithLeftoverEnvironmentFails) {
  SessionEnv d;
  d.put({s, p1}, Mode::Plain, l::send1(p2, c, {}, l::end()));
  EXPECT_EQ(rule_of(typecheck({}, p::end(), d)), "N");
}

TEST(Rules, OptEndConsumesReturnKinds) {
  GlobalEnv gamma;
  gamma.values[v] = V;
  SessionEnv d;
  d.returnKinds = ReturnKinds{p1, {V}};
  EXPECT_FALSE(typecheck(gamma, p::optend(p1, {v}), d));
  gamma.values[v] = Kind::val("W");
  EXPECT_EQ(rule_of(typecheck(gamma, p::optend(p1, {v}), d)), "OptE");
}

TEST(Rules, SendAndReceiveAgainstLocalTypes) {
  GlobalEnv gamma;
  gamma.values[v] = V;
  SessionEnv d;
  d.put({s, p1}, Mode::Plain, l::send1(p2, c, {Param{x, V}}, l::end()));
  EXPECT_FALSE(typecheck(gamma, p::send(s, p1, p2, c, {v}, p::end()), d));
  SessionEnv r;
  r.put({s, p2}, Mode::Plain, l::get1(p1, c, {Param{x, V}}, l::end()));
  EXPECT_FALSE(typecheck(gamma, p::get1(s, p1, p2, c, {x}, p::end()), r));
  EXPECT_EQ(rule_of(typecheck(gamma, p::send(s, p1, p2, Label{"d"}, {v}, p::end()), d)), "S");
}

TEST(Rules, UnknownChannel) {
  EXPECT_EQ(rule_of(typecheck({}, p::out(Name{"a"}, {s}, p::end()), {})), "UnknownChannel");
}

TEST(Fixtures, AllGeneratedFixturesTypecheck) {
  std::vector<Fixture> fs{link()};
  for (int n = 2; n <= 5; ++n) fs.push_back(gen_rc(n));
  fs.push_back(gen_rc_subsessions(3));
  fs.push_back(gen_rc_nested_opt(3));
  for (auto& f : fs) {
    auto e = typecheck(f.gamma, f.process, f.delta);
    EXPECT_FALSE(e) << f.name << ": " << to_string(*e);
  }
}

TEST(Fixtures, SubSessionsNeedTheExtendedSystem) {
  auto f = gen_rc_subsessions(3);
  CheckOptions plain;
  plain.subsessions = false;
  EXPECT_EQ(rule_of(typecheck(f.gamma, f.process, f.delta, plain)), "New");
}

TEST(Mutations, MissingOptEnd) {
  auto f = link();
  auto broken = with_receiver_body(f.process, [](const PGet& g) {
    auto& b = g.branches[0];
    return p::get1(g.session, g.from, g.to, b.label, b.binders, p::end());
  });
  EXPECT_EQ(rule_of(typecheck(f.gamma, broken, f.delta)), "Opt");
}

TEST(Mutations, MissingOptEndInRotatingCoordinators) {
  auto f = gen_rc(3);
  // Some receiving block of p2; all of them lose their optend.
  auto broken = rewrite_opt(f.process, 4, [](const POpt& o) {
    return p::opt(o.owner, o.parts, testkit::strip_optends(o.body), o.binders, o.defaults, o.cont);
  });
  ASSERT_FALSE(alpha_eq(broken, f.process));
  EXPECT_EQ(rule_of(typecheck(f.gamma, broken, f.delta)), "Opt");
}

TEST(Mutations, WrongDefaultKind) {
  auto f = link();
  f.gamma.values[w] = Kind::val("W");
  auto broken = rewrite_opt(f.process, 1, [](const POpt& o) {
    return p::opt(o.owner, o.parts, o.body, o.binders, {w}, o.cont);
  });
  auto e = typecheck(f.gamma, broken, f.delta);
  EXPECT_EQ(rule_of(e), "Opt");
}

TEST(Mutations, OwnerNotAParticipant) {
  auto f = link();
  auto broken = rewrite_opt(f.process, 0, [](const POpt& o) {
    return p::opt(Role{"p3"}, o.parts, o.body, o.binders, o.defaults, o.cont);
  });
  auto e = typecheck(f.gamma, broken, f.delta);
  EXPECT_EQ(rule_of(e), "Opt");
  EXPECT_NE(e->expected.find("among the participants"), std::string::npos);
}

TEST(Mutations, NestedReturnKinds) {
  // An inner block whose body returns the values of the surrounding block.
  auto f = link();
  auto broken = with_receiver_body(f.process, [](const PGet& g) {
    auto& b = g.branches[0];
    Proc inner = p::opt(p1, {p1, p2}, p::optend(p2, b.binders), {}, {}, p::end());
    return p::get1(g.session, g.from, g.to, b.label, b.binders, inner);
  });
  auto e = typecheck(f.gamma, broken, f.delta);
  EXPECT_EQ(rule_of(e), "Opt");
  EXPECT_NE(e->expected.find("no return kinds"), std::string::npos);
}

TEST(Mutations, ParticipantSetsMustMatch) {
  auto f = link();
  auto broken = rewrite_opt(f.process, 0, [](const POpt& o) {
    return p::opt(o.owner, {p1, Role{"p3"}}, o.body, o.binders, o.defaults, o.cont);
  });
  auto e = typecheck(f.gamma, broken, f.delta);
  EXPECT_EQ(rule_of(e), "Opt");
  EXPECT_NE(e->expected.find("participants equal as sets"), std::string::npos);
}

TEST(Mutations, ParticipantOrderDoesNotMatter) {
  auto f = link();
  auto swapped = rewrite_opt(f.process, 0, [](const POpt& o) {
    return p::opt(o.owner, {p2, p1}, o.body, o.binders, o.defaults, o.cont);
  });
  EXPECT_FALSE(typecheck(f.gamma, swapped, f.delta));
}

TEST(Mutations, OptEndOfWrongKind) {
  auto f = link();
  f.gamma.values[w] = Kind::val("W");
  auto broken = with_receiver_body(f.process, [](const PGet& g) {
    auto& b = g.branches[0];
    return p::get1(g.session, g.from, g.to, b.label, b.binders, p::optend(p2, {w}));
  });
  EXPECT_EQ(rule_of(typecheck(f.gamma, broken, f.delta)), "OptE");
}

TEST(Congruence, CanonicalFormsStayTyped) {
  std::vector<Fixture> fs{link(), gen_rc(2), gen_rc(3), gen_rc_subsessions(2), gen_rc_nested_opt(2)};
  for (auto& f : fs) {
    EXPECT_FALSE(typecheck(f.gamma, canonicalize(f.process), f.delta)) << f.name;
    EXPECT_FALSE(typecheck(f.gamma, freshen_binders(f.process), f.delta)) << f.name;
  }
}

TEST(Substitution, SessionNameForVariable) {
  // x[p1] : T typed, then {s/x} against s[p1] : T.
  GlobalEnv gamma;
  gamma.values[v] = V;
  Local t = l::send1(p2, c, {Param{Name{"y"}, V}}, l::end());
  Proc body = p::send(x, p1, p2, c, {v}, p::end());
  SessionEnv dx, ds;
  dx.put({x, p1}, Mode::Plain, t);
  ds.put({s, p1}, Mode::Plain, t);
  ASSERT_FALSE(typecheck(gamma, body, dx));
  EXPECT_FALSE(typecheck(gamma, substitute(body, {{x, s}}), ds));
}

TEST(Substitution, ValueOfEqualKind) {
  auto f = link();
  f.gamma.values[w] = V;
  auto moved = substitute(f.process, {{Name{"v1"}, w}});
  ASSERT_FALSE(alpha_eq(moved, f.process));
  EXPECT_FALSE(typecheck(f.gamma, moved, f.delta));
}

TEST(Choice, ProcessChoiceAgainstInternalChoice) {
  GlobalEnv gamma;
  SessionEnv d;
  d.put({s, p1}, Mode::Plain,
        l::choice(l::send1(p2, c, {}, l::end()), l::send1(p2, Label{"d"}, {}, l::end())));
  auto proc = p::choice(p::send(s, p1, p2, c, {}, p::end()), p::send(s, p1, p2, Label{"d"}, {}, p::end()));
  EXPECT_FALSE(typecheck(gamma, proc, d));
  // A single branch picks one side of the choice.
  EXPECT_FALSE(typecheck(gamma, p::send(s, p1, p2, c, {}, p::end()), d));
}

TEST(Errors, LocationAddressesASubterm) {
  auto f = link();
  auto broken = rewrite_opt(f.process, 0, [](const POpt& o) {
    return p::opt(Role{"p3"}, o.parts, o.body, o.binders, o.defaults, o.cont);
  });
  auto e = typecheck(f.gamma, broken, f.delta);
  ASSERT_TRUE(e);
  Path path;
  std::string loc = e->location;
  for (size_t i = 0; i < loc.size();) {
    auto dot = loc.find('.', i);
    path.push_back(std::stoi(loc.substr(i, dot - i)));
    i = dot == std::string::npos ? loc.size() : dot + 1;
  }
  EXPECT_TRUE(is<POpt>(subterm(broken, path))) << loc;
}
