#include <gtest/gtest.h>

#include "kf/cdsl/program.hpp"
#include "kf/llm/gateway.hpp"
#include "kf/scan/scanner.hpp"
#include "support.hpp"

namespace kf::scan {
namespace {

namespace fs = std::filesystem;

cdsl::CheckerProgram exemplar_checker(const char *dir) {
  auto p = cdsl::parse_checker(read_file(testing::data_dir() / "exemplars" / dir / "checker.cdsl"));
  EXPECT_TRUE(p.ok()) << p.error_text();
  return *p.program;
}

fs::path seeded() { return testing::data_dir() / "seeded_corpus"; }

ScanLimits unlimited(int jobs = 4) {
  ScanLimits l;
  l.jobs = jobs;
  return l;
}

TEST(Scanner, ListsCorpusSorted) {
  const auto files = list_corpus(seeded());
  ASSERT_EQ(files.size(), 12u);
  EXPECT_TRUE(std::is_sorted(files.begin(), files.end()));
  EXPECT_EQ(files.front(), "drivers/a/alpha.mc");
}

TEST(Scanner, EmptyCorpus) {
  testing::TempDir tmp("empty");
  const auto r = scan_corpus(exemplar_checker("npd"), tmp.path(), unlimited());
  EXPECT_TRUE(r.reports.empty());
  EXPECT_EQ(r.files_scanned, 0u);
  EXPECT_FALSE(r.truncated);
}

TEST(Scanner, MissingRoot) {
  EXPECT_THROW(scan_corpus(exemplar_checker("npd"), "/nonexistent/kf-corpus", unlimited()),
               CorpusError);
}

TEST(Scanner, SeededNpdSpans) {
  const auto r = scan_corpus(exemplar_checker("npd"), seeded(), unlimited());
  std::vector<std::string> where;
  for (const auto &rep : r.reports) where.push_back(rep.span.file + ":" + std::to_string(rep.span.start_line));
  EXPECT_EQ(where, (std::vector<std::string>{"drivers/a/alpha.mc:3", "drivers/b/gamma.mc:8",
                                             "drivers/d/eta.mc:8"}));
  EXPECT_EQ(r.files_scanned, 12u);
  EXPECT_TRUE(r.skipped_files.empty());
}

TEST(Scanner, TruncatedIsPrefix) {
  const auto checker = exemplar_checker("npd");
  const auto full = scan_corpus(checker, seeded(), unlimited(1));
  ScanLimits l = unlimited(1);
  l.enforce = true;
  l.max_warnings = 2;
  const auto cut = scan_corpus(checker, seeded(), l);
  EXPECT_TRUE(cut.truncated);
  EXPECT_EQ(cut.truncation_reason, "warnings");
  ASSERT_EQ(cut.reports.size(), 2u);
  EXPECT_TRUE(std::equal(cut.reports.begin(), cut.reports.end(), full.reports.begin()));
}

TEST(Scanner, LimitsIgnoredWhenNotEnforced) {
  ScanLimits l = unlimited();
  l.max_warnings = 1;
  l.time_limit = 0;
  const auto r = scan_corpus(exemplar_checker("npd"), seeded(), l);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.reports.size(), 3u);
}

TEST(Scanner, JobsDoNotChangeOutcome) {
  const auto checker = exemplar_checker("double_free");
  const auto one = scan_corpus(checker, seeded(), unlimited(1));
  for (int jobs : {4, 32}) EXPECT_TRUE(one.same_outcome(scan_corpus(checker, seeded(), unlimited(jobs))));
}

TEST(Scanner, UnparseableFileIsSkipped) {
  testing::TempDir tmp("skip");
  fs::copy(seeded(), tmp.path(), fs::copy_options::recursive);
  write_file(tmp.path() / "lib/broken.mc", "int f( {\n");
  const auto r = scan_corpus(exemplar_checker("npd"), tmp.path(), unlimited());
  EXPECT_EQ(r.skipped_files, (std::vector<std::string>{"lib/broken.mc"}));
  EXPECT_EQ(r.reports.size(), 3u);
}

TEST(ScanMany, IsolatedAndOrdered) {
  const auto npd = exemplar_checker("npd");
  const auto df = exemplar_checker("double_free");
  const auto many = scan_many({npd, df}, seeded(), unlimited());
  ASSERT_EQ(many.size(), 2u);
  EXPECT_LT(many[0].checker, many[1].checker);
  for (const auto &r : many) {
    const auto &c = r.checker == npd.name ? npd : df;
    EXPECT_TRUE(r.same_outcome(scan_corpus(c, seeded(), unlimited()))) << r.checker;
    EXPECT_TRUE(r.error.empty());
  }
  EXPECT_TRUE(scan_many({}, seeded(), unlimited()).empty());
}

TEST(ScanMany, DuplicateNamesRejected) {
  const auto npd = exemplar_checker("npd");
  EXPECT_THROW(scan_many({npd, npd}, seeded(), unlimited()), PreconditionViolation);
}

TEST(ScanMany, FailingCheckerIsIsolated) {
  auto bad = cdsl::parse_checker(
      "checker aaa_bad { report r = \"x\"; on pre_call { report(r, arg_region(9)); } }");
  ASSERT_TRUE(bad.ok());
  const auto many = scan_many({*bad.program, exemplar_checker("npd")}, seeded(), unlimited());
  ASSERT_EQ(many.size(), 2u);
  EXPECT_FALSE(many[0].error.empty());
  EXPECT_TRUE(many[1].error.empty());
  EXPECT_EQ(many[1].reports.size(), 3u);
}

TEST(ScanJson, RoundTrip) {
  ScanLimits l = unlimited();
  l.enforce = true;
  l.max_warnings = 1;
  const auto r = scan_corpus(exemplar_checker("npd"), seeded(), l);
  const auto back = parse_scan_json(scan_json(r));
  EXPECT_TRUE(r.same_outcome(back));
  EXPECT_EQ(report_key(r.reports[0]), report_key(back.reports[0]));
  EXPECT_EQ(report_key(r.reports[0]).rfind("drivers/a/alpha.mc:3:", 0), 0u);
}

}  // namespace
}  // namespace kf::scan
