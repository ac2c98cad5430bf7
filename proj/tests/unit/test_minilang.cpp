#include <gtest/gtest.h>

#include "kf/minilang/parser.hpp"
#include "support.hpp"

namespace kf::minilang {
namespace {

TEST(MiniLang, ParsesFunctionShapes) {
  const auto m = parse_module(
      "int f(int *p, int n) {\n"
      "  int *q = alloc(p, 4);\n"
      "  if (q == NULL) {\n"
      "    return -1;\n"
      "  } else {\n"
      "    q->len = n;\n"
      "  }\n"
      "  while (n != 0) {\n"
      "    n = step(n);\n"
      "  }\n"
      "  return 0;\n"
      "}\n"
      "void g(void *x) { release(x); }\n",
      "t.mc");
  ASSERT_EQ(m.functions.size(), 2u);
  const auto &f = m.functions[0];
  EXPECT_EQ(f.name, "f");
  EXPECT_EQ(f.params.size(), 2u);
  EXPECT_TRUE(f.params[0].type.is_pointer());
  EXPECT_EQ(count_branches(f), 2);
  EXPECT_EQ(max_loop_nesting(f), 1);
  EXPECT_EQ(f.span.file, "t.mc");
  EXPECT_EQ(f.span.start_line, 1);
  EXPECT_EQ(f.span.end_line, 12);
  EXPECT_NE(m.find("g"), nullptr);
}

TEST(MiniLang, SyntaxErrorPosition) {
  try {
    parse_module("int f() {\n  int x = 1\n  return x;\n}\n");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError &e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.col(), 3);
  }
}

TEST(MiniLang, CommentsAreIgnored) {
  const auto a = parse_module("int f() { /* x */ return 0; // tail\n}\n");
  const auto b = parse_module("int f() { return 0; }\n");
  EXPECT_TRUE(structurally_equal(a, b));
}

TEST(MiniLang, NestedLoopsAreCounted) {
  const auto m = parse_module("void f(int *p) { while (p) { while (p) { p = next(p); } } }\n");
  EXPECT_EQ(max_loop_nesting(m.functions[0]), 2);
}

TEST(MiniLang, PrettyPrintRoundTripsGeneratedModules) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    testing::FunctionGenerator gen(seed, 5, 3);
    const std::string text = gen.module(1 + static_cast<int>(seed % 3));
    const auto first = parse_module(text, "m.mc");
    const std::string printed = pretty_print(first);
    const auto second = parse_module(printed, "m.mc");
    ASSERT_EQ(to_sexpr(first), to_sexpr(second)) << "seed " << seed << "\n" << text;
    ASSERT_EQ(printed, pretty_print(second)) << "printer not idempotent, seed " << seed;
  }
}

TEST(MiniLang, ExamplesCorpusParses) {
  for (const auto &e : std::filesystem::recursive_directory_iterator(testing::data_dir())) {
    if (e.path().extension() != ".mc") continue;
    EXPECT_NO_THROW(parse_module(read_file(e.path()), e.path().string())) << e.path();
  }
}

}  // namespace
}  // namespace kf::minilang
