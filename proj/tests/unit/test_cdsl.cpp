#include <gtest/gtest.h>

#include "kf/cdsl/program.hpp"
#include "kf/engine/engine.hpp"
#include "kf/minilang/parser.hpp"
#include "support.hpp"

namespace kf::cdsl {
namespace {

std::vector<std::string> codes(const ParseResult &r) {
  std::vector<std::string> out;
  for (const auto &d : r.diagnostics) out.push_back(d.code);
  return out;
}

bool has_code(const ParseResult &r, const std::string &code) {
  const auto c = codes(r);
  return std::find(c.begin(), c.end(), code) != c.end();
}

std::string wrap(const std::string &body) {
  return "checker t {\n  map M : { A, B };\n  report r = \"msg\";\n" + body + "\n}\n";
}

TEST(Cdsl, ExemplarsParseAndRoundTrip) {
  for (const char *dir : {"npd", "double_free", "ubi"}) {
    const auto text = read_file(testing::data_dir() / "exemplars" / dir / "checker.cdsl");
    const auto first = parse_checker(text);
    ASSERT_TRUE(first.ok()) << dir << "\n" << first.error_text();
    const auto printed = pretty_print(*first.program);
    const auto second = parse_checker(printed);
    ASSERT_TRUE(second.ok()) << printed << second.error_text();
    EXPECT_EQ(*first.program, *second.program) << dir;
    EXPECT_EQ(printed, pretty_print(*second.program));
  }
}

TEST(Cdsl, EquivalenceCheckersRoundTrip) {
  for (const char *text : testing::kEquivalenceCheckers) {
    const auto first = parse_checker(text);
    ASSERT_TRUE(first.ok()) << first.error_text();
    EXPECT_EQ(*first.program, *parse_checker(pretty_print(*first.program)).program);
  }
}

TEST(Cdsl, MissingSemicolon) {
  const auto r = parse_checker(wrap("  on post_call { set_state(M, return_region, A) }\n"
                                    "  on location { report(r); }"));
  ASSERT_FALSE(r.ok());
  ASSERT_TRUE(has_code(r, "E-SYNTAX"));
  EXPECT_NE(r.error_text().find("expected ';' after action, found '}'"), std::string::npos)
      << r.error_text();
  EXPECT_EQ(r.diagnostics[0].pos.line, 4);
}

struct CodeCase {
  const char *code;
  const char *body;
};

class DiagnosticCodes : public ::testing::TestWithParam<CodeCase> {};

TEST_P(DiagnosticCodes, Reported) {
  const auto &c = GetParam();
  const auto r = parse_checker(wrap(c.body));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_code(r, c.code)) << r.error_text();
}

INSTANTIATE_TEST_SUITE_P(
    Cdsl, DiagnosticCodes,
    ::testing::Values(
        CodeCase{"E-UNDECLARED-MAP", "  on post_call { set_state(N, return_region, A); report(r); }"},
        CodeCase{"E-UNKNOWN-TAG", "  on post_call { set_state(M, return_region, C); report(r); }"},
        CodeCase{"E-BINDING-UNAVAILABLE", "  on location { set_state(M, return_region, A); report(r); }"},
        CodeCase{"E-UNKNOWN-REGION", "  on post_call { set_state(M, heap_region, A); report(r); }"},
        CodeCase{"E-UNKNOWN-BUILTIN", "  on post_call when frobnicate(\"x\") { report(r); }"},
        CodeCase{"E-BAD-ARGS", "  on post_call when callee_is(3) { report(r); }"},
        CodeCase{"E-ALIAS-DISABLED", "  on bind { propagate_alias(bind_target, bind_value); report(r); }"},
        CodeCase{"E-UNKNOWN-TEMPLATE", "  on location { report(nope); }"},
        CodeCase{"E-UNKNOWN-EVENT", "  on pre_return { report(r); }"},
        CodeCase{"E-EMPTY-ACTIONS", "  on location { }\n  on bind { report(r); }"},
        CodeCase{"E-NO-REPORT", "  on post_call { set_state(M, return_region, A); }"},
        CodeCase{"E-DUPLICATE-TEMPLATE", "  report r = \"again\";\n  on location { report(r); }"},
        CodeCase{"E-DUPLICATE-MAP", "  map M : { C };\n  on location { report(r); }"}));

TEST(Cdsl, DuplicateTag) {
  const auto r = parse_checker(
      "checker t { map M : { A, A }; report r = \"m\"; on location { report(r); } }");
  EXPECT_TRUE(has_code(r, "E-DUPLICATE-TAG")) << r.error_text();
}

TEST(Cdsl, WarningsDoNotBlock) {
  const auto r = parse_checker(
      "checker t { map M : { A }; alias; alias; report r = \"m\"; on location { report(r); } }");
  ASSERT_TRUE(r.ok()) << r.error_text();
  EXPECT_TRUE(has_code(r, "W-UNUSED-MAP"));
  EXPECT_TRUE(has_code(r, "W-DUPLICATE-ALIAS"));
  EXPECT_TRUE(r.error_text().empty());
}

TEST(Cdsl, ArgIndexOutOfRangeIsRuntimeError) {
  const auto p = parse_checker(
      "checker t { map M : { A }; report r = \"m\";\n"
      "  on pre_call when callee_is(\"release\") { set_state(M, arg_region(3), A); report(r); } }");
  ASSERT_TRUE(p.ok()) << p.error_text();
  const auto m = minilang::parse_module("void f(int *p) { release(p); }\n");
  EXPECT_THROW(engine::analyze_function(m.functions[0], *instantiate_hooks(*p.program)),
               CheckerRuntimeError);
}

TEST(Cdsl, CatalogListsBuiltins) {
  const auto &cat = builtin_catalog();
  std::vector<std::string> names;
  for (const auto &b : cat) names.push_back(b.name);
  for (const char *n : {"callee_is", "arg_region", "return_region", "state_is",
                        "mark_all_aliases", "propagate_alias", "null_test_on"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
  const std::string rendered = render_catalog();
  EXPECT_EQ(std::count(rendered.begin(), rendered.end(), '\n'),
            static_cast<long>(cat.size()));
  const auto p = parse_checker(testing::kEquivalenceCheckers[1]);
  const auto used = builtins_used(*p.program);
  EXPECT_NE(std::find(used.begin(), used.end(), "mark_all_aliases"), used.end());
  EXPECT_EQ(std::find(used.begin(), used.end(), "null_test_on"), used.end());
}

}  // namespace
}  // namespace kf::cdsl
