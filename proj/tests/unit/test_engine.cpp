#include <gtest/gtest.h>

#include "kf/cdsl/program.hpp"
#include "kf/engine/engine.hpp"
#include "kf/minilang/parser.hpp"
#include "support.hpp"

namespace kf::engine {
namespace {

std::shared_ptr<const CheckerHooks> npd_hooks() {
  auto parsed = cdsl::parse_checker(testing::kEquivalenceCheckers[0]);
  EXPECT_TRUE(parsed.ok()) << parsed.error_text();
  return cdsl::instantiate_hooks(*parsed.program);
}

AnalysisResult run(const std::string &src, const EngineBudget &budget = {}) {
  const auto m = minilang::parse_module(src, "t.mc");
  return analyze_function(m.functions.at(0), *npd_hooks(), budget);
}

TEST(State, NullnessContradiction) {
  ProgramState s;
  EXPECT_TRUE(s.assume({Literal::Kind::IsNull, 1, 0}));
  EXPECT_EQ(s.nullness(1), Nullness::MustNull);
  EXPECT_FALSE(s.assume({Literal::Kind::NonNull, 1, 0}));
  EXPECT_EQ(s.nullness(1), Nullness::MustNull);
}

TEST(State, EqualityPropagatesNullness) {
  ProgramState s;
  EXPECT_TRUE(s.assume({Literal::Kind::Eq, 1, 2}));
  EXPECT_TRUE(s.must_equal(1, 2));
  EXPECT_TRUE(s.assume({Literal::Kind::IsNull, 1, 0}));
  EXPECT_EQ(s.nullness(2), Nullness::MustNull);
  EXPECT_FALSE(s.assume({Literal::Kind::NonNull, 2, 0}));
  EXPECT_FALSE(s.assume({Literal::Kind::Neq, 2, 1}));
}

TEST(State, TwoNullSymbolsAreEqual) {
  ProgramState s;
  EXPECT_TRUE(s.assume({Literal::Kind::IsNull, 1, 0}));
  EXPECT_TRUE(s.assume({Literal::Kind::IsNull, 2, 0}));
  EXPECT_FALSE(s.assume({Literal::Kind::Neq, 1, 2}));
}

TEST(State, EqualityOfConstants) {
  const auto null = SymbolicValue::make_null();
  const auto zero = SymbolicValue::make_concrete(0);
  const auto addr = SymbolicValue::make_address(Region::var("f", "x"));
  EXPECT_EQ(assume_equality(null, zero, true).kind, Assumption::Kind::Trivial);
  EXPECT_EQ(assume_equality(null, zero, false).kind, Assumption::Kind::Contradiction);
  EXPECT_EQ(assume_equality(addr, null, true).kind, Assumption::Kind::Contradiction);
  EXPECT_EQ(assume_equality(SymbolicValue::make_symbol(4, "g@1:1"), null, true).kind,
            Assumption::Kind::Constrain);
  EXPECT_EQ(assume_equality(SymbolicValue::make_unknown(), null, true).kind,
            Assumption::Kind::Trivial);
}

TEST(State, AliasClassesAndMarking) {
  ProgramState s;
  const auto a = Region::var("f", "a");
  const auto b = Region::var("f", "b");
  const auto c = Region::var("f", "c");
  s.set_alias(b, a);
  s.set_alias(c, b);
  EXPECT_EQ(s.representative(c), a);
  EXPECT_EQ(s.alias_class(b).size(), 3u);
  s.mark_all_aliases("Free", c, "Freed");
  for (const auto &r : {a, b, c}) EXPECT_EQ(s.get_state("Free", r), "Freed");
  s.clear_alias(c);
  EXPECT_EQ(s.representative(c), c);
  EXPECT_EQ(s.check_invariants(), std::nullopt);
}

TEST(Engine, UncheckedDereferenceIsReported) {
  const auto r = run(
      "int f(int *p) {\n"
      "  int *a = alloc(p, 4);\n"
      "  a->f = 1;\n"
      "  return 0;\n"
      "}\n");
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.reports[0].span.start_line, 3);
  EXPECT_EQ(r.reports[0].message, "unchecked deref");
  ASSERT_FALSE(r.reports[0].trace.empty());
  EXPECT_EQ(r.reports[0].trace.back().span, r.reports[0].span);
  EXPECT_FALSE(r.truncated);
}

TEST(Engine, GuardedDereferenceIsClean) {
  const auto r = run(
      "int f(int *p) {\n"
      "  int *a = alloc(p, 4);\n"
      "  if (!a)\n"
      "    return 1;\n"
      "  a->f = 1;\n"
      "  return 0;\n"
      "}\n");
  EXPECT_TRUE(r.reports.empty());
}

TEST(Engine, InfeasiblePathIsPruned) {
  // The inner branch needs a to be both null and non-null.
  const auto r = run(
      "int f(int *p) {\n"
      "  int *a = alloc(p, 4);\n"
      "  if (a == NULL) {\n"
      "    if (a != NULL) {\n"
      "      a->f = 1;\n"
      "    }\n"
      "    return 1;\n"
      "  }\n"
      "  a->f = 2;\n"
      "  return 0;\n"
      "}\n");
  EXPECT_TRUE(r.reports.empty());
}

TEST(Engine, AliasCarriesState) {
  const auto r = run(
      "int f(int *p) {\n"
      "  int *a = alloc(p, 4);\n"
      "  int *b = a;\n"
      "  b->f = 1;\n"
      "  return 0;\n"
      "}\n");
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.reports[0].span.start_line, 4);
}

TEST(Engine, BudgetTruncates) {
  std::string src = "int f(int *p) {\n  int *a = alloc(p, 4);\n";
  for (int i = 0; i < 12; ++i) src += "  if (p) { p->f = " + std::to_string(i) + "; }\n";
  src += "  a->f = 1;\n  return 0;\n}\n";
  const auto r = run(src, {50, 2});
  EXPECT_TRUE(r.truncated);
  EXPECT_LE(r.nodes, 50u + 1u);
  EXPECT_FALSE(run(src, {100000, 2}).truncated);
}

TEST(Engine, InvalidBudget) {
  EXPECT_THROW(run("int f() { return 0; }\n", {0, 2}), PreconditionViolation);
  EXPECT_THROW(run("int f() { return 0; }\n", {10, 0}), PreconditionViolation);
}

TEST(Engine, LoopUnrollBound) {
  // `a` only receives the allocation on the second trip through the loop.
  const std::string src =
      "int f(int *p) {\n"
      "  int *a = p;\n"
      "  int *b = p;\n"
      "  while (p) {\n"
      "    a = b;\n"
      "    b = alloc(p, 1);\n"
      "    p = next(p);\n"
      "  }\n"
      "  a->f = 1;\n"
      "  return 0;\n"
      "}\n";
  EXPECT_TRUE(run(src, {10000, 1}).reports.empty());
  EXPECT_EQ(run(src, {10000, 2}).reports.size(), 1u);
}

TEST(Engine, OracleRejectsNestedLoops) {
  const auto m = minilang::parse_module(
      "void f(int *p) { while (p) { while (p) { p = next(p); } } }\n");
  EXPECT_THROW(enumerate_paths_oracle(m.functions[0]), OracleUnsupported);
}

}  // namespace
}  // namespace kf::engine
