#include "optsession/examples.hpp"
#include "optsession/parser.hpp"
#include "optsession/printer.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace optsession;

TEST(ParseGlobal, End) { EXPECT_TRUE(is<GEnd>(parse_global("end"))); }

TEST(ParseGlobal, SingleCommunication) {
  auto g = parse_global("p1 -> p2 : { c(v:V). end }");
  auto expect = g::com(Role{"p1"}, Role{"p2"},
                       {GBranch{Label{"c"}, {Param{Name{"v"}, Kind::val("V")}}, g::end()}});
  EXPECT_TRUE(alpha_eq(g, expect));
}

TEST(ParseGlobal, TrailingEndMayBeOmitted) {
  EXPECT_TRUE(alpha_eq(parse_global("p1 -> p2 : { c(v:V) }"), parse_global("p1 -> p2 : { c(v:V). end }")));
}

TEST(ParseGlobal, RotatingCoordinatorsMatchesGenerator) {
  for (int n = 2; n <= 4; ++n) {
    auto g = gen_rc_global(n);
    EXPECT_TRUE(alpha_eq(parse_global(print(g)), g)) << n;
  }
}

TEST(ParseProcess, Zero) { EXPECT_TRUE(is<PEnd>(parse_process("0"))); }

TEST(ParseProcess, OptWithoutDefaults) {
  auto t = parse_process("opt[p1; p1,p2]{ optend p1<> } ()<- (0)");
  auto expect = p::opt(Role{"p1"}, {Role{"p1"}, Role{"p2"}}, p::optend(Role{"p1"}, {}), {}, {}, p::end());
  EXPECT_TRUE(alpha_eq(t, expect));
}

TEST(ParseProcess, AbbreviatedOptPrintsWithoutDefaults) {
  auto t = p::opt(Role{"p1"}, {Role{"p1"}, Role{"p2"}}, p::optend(Role{"p1"}, {}), {}, {}, p::end());
  auto text = print(t);
  EXPECT_EQ(text.find("<-"), std::string::npos) << text;
  EXPECT_TRUE(alpha_eq(parse_process(text), t));
}

TEST(ParseProcess, RotatingCoordinatorsMatchesGenerator) {
  for (int n = 2; n <= 4; ++n) {
    auto f = gen_rc(n);
    EXPECT_TRUE(alpha_eq(parse_process(print(f.process)), f.process)) << n;
  }
}

TEST(ParseProcess, OwnerOutsideParticipantsIsRejected) {
  try {
    parse_process("opt[p3; p1,p2]{ optend p3<> }");
    FAIL() << "accepted";
  } catch (const SyntaxError& e) {
    EXPECT_NE(std::string(e.what()).find("not among its participants"), std::string::npos);
    EXPECT_EQ(e.line, 1);
  }
}

TEST(ParseErrors, ReportPositionAndExpectedTokens) {
  try {
    parse_global("p1 -> p2 : {\n  c(v:V) . ");
    FAIL() << "accepted";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line, 2);
    EXPECT_FALSE(e.expected.empty());
  }
}

TEST(ParseErrors, TrailingInputRejected) {
  EXPECT_THROW(parse_process("0 0"), SyntaxError);
}

TEST(Comments, LineCommentsAreSkipped) {
  EXPECT_TRUE(alpha_eq(parse_global("-- a comment\nend -- another"), g::end()));
}

TEST(SourceFile, DeclarationsAndLookups) {
  auto src = parse_source(R"(
    global G = opt[p1, p2(d:V)]{ p1 -> p2 : { c(v:V) } };
    process P = a1<s> | a1(s). 0;
    gamma a1 : invite p1;
    gamma v : V;
    delta D = { <s>[p1] : p2 ! { c(v:V) }; ~k[src] : end; ov p1(V) };
  )");
  EXPECT_EQ(src.decls.size(), 5u);
  EXPECT_NO_THROW(src.global("G"));
  EXPECT_NO_THROW(src.process("P"));
  EXPECT_THROW(src.global("H"), std::invalid_argument);
  auto d = src.delta("D");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].mode, DeltaEntryDecl::Mode::External);
  EXPECT_EQ(d[1].mode, DeltaEntryDecl::Mode::Internal);
  EXPECT_EQ(d[2].mode, DeltaEntryDecl::Mode::ReturnKinds);
  EXPECT_EQ(print(parse_source(print(src))), print(src));
}

TEST(RoundTrip, RandomProcesses) {
  testkit::Gen gen(1);
  for (int i = 0; i < 300; ++i) {
    auto t = gen.proc(4);
    EXPECT_TRUE(alpha_eq(parse_process(print(t)), t)) << print(t);
  }
}

TEST(RoundTrip, RandomGlobalAndLocalTypes) {
  testkit::Gen gen(2);
  for (int i = 0; i < 300; ++i) {
    auto g = gen.global(4);
    EXPECT_TRUE(alpha_eq(parse_global(print(g)), g)) << print(g);
    auto t = gen.local(4);
    EXPECT_TRUE(alpha_eq(parse_local(print(t)), t)) << print(t);
  }
}

TEST(RoundTrip, ShippedFixtureFiles) {
  for (auto& fx : testkit::shipped_fixtures()) {
    auto src = parse_source(testkit::read_file(std::string(FIXTURE_DIR) + "/" + fx.file));
    auto again = parse_source(print(src));
    EXPECT_TRUE(alpha_eq(again.process("P"), src.process("P"))) << fx.file;
    EXPECT_TRUE(alpha_eq(again.global("G"), src.global("G"))) << fx.file;
  }
}
