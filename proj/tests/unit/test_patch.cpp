#include <gtest/gtest.h>

#include <random>

#include "kf/patch.hpp"
#include "support.hpp"

namespace kf::patch {
namespace {

const char *kSimple =
    "Fix the thing\n"
    "\n"
    "diff --git a/x.mc b/x.mc\n"
    "--- a/x.mc\n"
    "+++ b/x.mc\n"
    "@@ -1,3 +1,4 @@\n"
    " int f(int *p) {\n"
    "   int *q = g(p);\n"
    "+  if (!q) return 1;\n"
    "   q->a = 1;\n";

TEST(Patch, ParsesMessageAndHunk) {
  const auto c = parse_patch(kSimple, "c1");
  EXPECT_EQ(c.id, "c1");
  EXPECT_EQ(c.message, "Fix the thing\n\n");
  ASSERT_EQ(c.file_diffs.size(), 1u);
  const auto &fd = c.file_diffs[0];
  EXPECT_EQ(fd.path, "x.mc");
  ASSERT_EQ(fd.hunks.size(), 1u);
  EXPECT_EQ(fd.hunks[0].old_len, 3);
  EXPECT_EQ(fd.hunks[0].new_len, 4);
  EXPECT_EQ(fd.hunks[0].count(LineKind::Added), 1);
  EXPECT_EQ(fd.hunks[0].lines[2].text, "  if (!q) return 1;");
}

TEST(Patch, AppliesBothDirections) {
  const auto c = parse_patch(kSimple);
  const std::string pre = "int f(int *p) {\n  int *q = g(p);\n  q->a = 1;\n}\n";
  const std::string post = "int f(int *p) {\n  int *q = g(p);\n  if (!q) return 1;\n  q->a = 1;\n}\n";
  EXPECT_EQ(apply_patch(pre, c.file_diffs[0], Direction::Forward), post);
  EXPECT_EQ(apply_patch(post, c.file_diffs[0], Direction::Reverse), pre);
}

TEST(Patch, ContextMismatchIsReported) {
  const auto c = parse_patch(kSimple);
  EXPECT_THROW(apply_patch("int h() {\n}\n", c.file_diffs[0], Direction::Forward), ContextMismatch);
}

TEST(Patch, MalformedHeaderNamesLine) {
  const std::string bad =
      "--- a/x.mc\n"
      "+++ b/x.mc\n"
      "@@ -1,2 +1,2 @@\n"
      " a\n";
  try {
    parse_patch(bad);
    FAIL() << "expected MalformedDiff";
  } catch (const MalformedDiff &e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Patch, RejectsOvercountedHunk) {
  const std::string bad =
      "--- a/x.mc\n"
      "+++ b/x.mc\n"
      "@@ -1,1 +1,1 @@\n"
      " a\n"
      " b\n";
  EXPECT_THROW(parse_patch(bad), MalformedDiff);
}

TEST(Patch, RejectsFileCreation) {
  const std::string bad =
      "--- /dev/null\n"
      "+++ b/x.mc\n"
      "@@ -0,0 +1,1 @@\n"
      "+a\n";
  EXPECT_THROW(parse_patch(bad), MalformedDiff);
}

// Random single-hunk edits built by splicing line vectors; the expected
// post-image comes from the splice, not from apply_patch.
TEST(Patch, RandomEditsRoundTrip) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 30);
    std::vector<std::string> pre;
    for (int i = 0; i < n; ++i) pre.push_back("line " + std::to_string(i) + " " + std::to_string(rng() % 5));
    const int at = static_cast<int>(rng() % static_cast<unsigned>(n));
    const int removed = static_cast<int>(rng() % static_cast<unsigned>(std::min(3, n - at) + 1));
    const int added = static_cast<int>(rng() % 4);
    if (removed == 0 && added == 0) continue;
    std::vector<std::string> post(pre.begin(), pre.begin() + at);
    std::vector<std::string> inserted;
    for (int i = 0; i < added; ++i) inserted.push_back("new " + std::to_string(trial) + "." + std::to_string(i));
    post.insert(post.end(), inserted.begin(), inserted.end());
    post.insert(post.end(), pre.begin() + at + removed, pre.end());

    const int ctx_before = std::min(3, at);
    const int ctx_after = std::min(3, n - at - removed);
    Hunk h;
    h.old_start = at - ctx_before + 1;
    h.new_start = h.old_start;
    for (int i = at - ctx_before; i < at; ++i) h.lines.push_back({LineKind::Context, pre[i]});
    for (int i = at; i < at + removed; ++i) h.lines.push_back({LineKind::Removed, pre[i]});
    for (const auto &s : inserted) h.lines.push_back({LineKind::Added, s});
    for (int i = at + removed; i < at + removed + ctx_after; ++i) h.lines.push_back({LineKind::Context, pre[i]});
    h.old_len = ctx_before + removed + ctx_after;
    h.new_len = ctx_before + added + ctx_after;
    if (h.old_len == 0) h.old_start -= 1;  // pure insertion into an empty range
    FileDiff fd{"f.mc", {h}};

    const std::string pre_text = join_lines(pre);
    const std::string post_text = join_lines(post);
    ASSERT_EQ(apply_patch(pre_text, fd, Direction::Forward), post_text) << "trial " << trial;
    ASSERT_EQ(apply_patch(post_text, fd, Direction::Reverse), pre_text) << "trial " << trial;
    const auto reparsed = parse_patch(serialize(fd));
    ASSERT_EQ(reparsed.file_diffs.size(), 1u);
    ASSERT_EQ(reparsed.file_diffs[0], fd) << serialize(fd);
  }
}

TEST(Patch, FunctionContextsCoverTouchedFunction) {
  const auto bundle = load_commit_bundle(testing::data_dir() / "workspace/commits/npd-001");
  const auto ctx = extract_function_contexts(bundle.commit, testing::data_dir() / "workspace/corpus");
  ASSERT_EQ(ctx.size(), 1u);
  EXPECT_EQ(ctx[0].function_name, "mac_init");
  EXPECT_EQ(ctx[0].pre_source.find("if (!mac)"), std::string::npos);
  EXPECT_NE(ctx[0].post_source.find("if (!mac)"), std::string::npos);
}

TEST(Patch, BundlesCarryCategories) {
  const auto bundles = load_commit_bundles(testing::data_dir() / "workspace/commits");
  ASSERT_EQ(bundles.size(), 6u);
  EXPECT_EQ(bundles[0].commit.id, "df-001");
  EXPECT_EQ(bundles[0].category, BugCategory::DoubleFree);
  EXPECT_EQ(bundles[4].category, BugCategory::UseBeforeInitialization);
}

TEST(Patch, MissingCorpusFile) {
  const auto c = parse_patch(kSimple);
  testing::TempDir tmp("nocorpus");
  EXPECT_THROW(materialize(c.file_diffs[0], tmp.path()), FileNotFound);
}

}  // namespace
}  // namespace kf::patch
