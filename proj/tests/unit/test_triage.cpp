#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "kf/cdsl/program.hpp"
#include "kf/triage/triage.hpp"
#include "support.hpp"

namespace kf::triage {
namespace {

namespace fs = std::filesystem;

fs::path seeded() { return testing::data_dir() / "seeded_corpus"; }

cdsl::CheckerProgram exemplar_checker(const char *dir) {
  return *cdsl::parse_checker(read_file(testing::data_dir() / "exemplars" / dir / "checker.cdsl")).program;
}

class CannedProvider : public llm::Provider {
 public:
  explicit CannedProvider(std::string answer) : answer_(std::move(answer)) {}
  std::string id() const override { return "canned"; }
  std::string complete(const llm::PromptBundle &) override {
    ++calls;
    return answer_;
  }
  std::atomic<int> calls{0};

 private:
  std::string answer_;
};

llm::Gateway gateway(std::shared_ptr<llm::Provider> p) {
  return llm::Gateway(std::move(p), std::make_shared<llm::Transcript>());
}

const std::string kNpdPattern = "Category: NPD\nCallees: devm_kzalloc\nPattern: p\nScope: s\n";
const std::string kUbiPattern = "Category: UBI\nCallees: kfree\nPattern: p\nScope: s\n";

scan::ScanResult fake_scan(std::size_t n) {
  scan::ScanResult r;
  r.checker = "c";
  for (std::size_t i = 0; i < n; ++i) {
    engine::Report rep;
    rep.checker = "c";
    rep.message = "m";
    rep.span.file = "f" + std::to_string(1000 + i) + ".mc";
    rep.span.start_line = 1;
    r.reports.push_back(rep);
  }
  return r;
}

TEST(Distill, AllocationThenDereference) {
  const auto scan = scan::scan_corpus(exemplar_checker("npd"), seeded(), {});
  ASSERT_FALSE(scan.reports.empty());
  const auto d = distill(scan.reports[0], seeded(), 0);
  EXPECT_EQ(d.file, "drivers/a/alpha.mc");
  const auto lines = split_lines(read_file(seeded() / d.file));
  ASSERT_EQ(d.relevant_lines.size(), 2u);
  EXPECT_EQ(d.relevant_lines[0].first, 2);
  EXPECT_NE(d.relevant_lines[0].second.find("devm_kzalloc"), std::string::npos);
  EXPECT_EQ(d.relevant_lines[1].first, 3);
  EXPECT_EQ(d.relevant_lines[1].second, trim(lines[2]));
}

TEST(Distill, SmallerThanLongFiles) {
  const auto scan = scan::scan_corpus(exemplar_checker("npd"), seeded(), {});
  for (std::size_t i = 0; i < scan.reports.size(); ++i) {
    const auto d = distill(scan.reports[i], seeded(), i);
    const auto text = read_file(seeded() / d.file);
    std::set<int> referenced{d.span.start_line};
    for (const auto &t : d.trace) referenced.insert(t.span.start_line);
    std::set<int> kept;
    for (const auto &[n, _] : d.relevant_lines) kept.insert(n);
    EXPECT_EQ(kept, referenced) << d.file;
    if (split_lines(text).size() > 20) EXPECT_LT(render(d).size(), text.size()) << d.file;
  }
}

TEST(Distill, MissingFile) {
  engine::Report r;
  r.span.file = "drivers/gone.mc";
  r.span.start_line = 1;
  EXPECT_THROW(distill(r, seeded()), FileNotFound);
}

TEST(Distill, RenderFormat) {
  DistilledReport d;
  d.checker = "c";
  d.file = "a.mc";
  d.message = "boom";
  d.span.file = "a.mc";
  d.span.start_line = 4;
  d.span.start_col = 3;
  d.relevant_lines = {{2, "int *p = f();"}, {4, "p->x = 1;"}};
  d.trace = {{d.span, "deref"}};
  EXPECT_EQ(render(d),
            "Checker: c\nReport: a.mc:4:3: boom\nRelevant lines:\n2: int *p = f();\n4: p->x = 1;\n"
            "Trace:\n4:3: deref\n");
}

TEST(Triage, ParseResponse) {
  const auto ok = parse_triage_response("VERDICT: not_a_bug\nRATIONALE: assigned before use\n");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->verdict, Verdict::NotABug);
  EXPECT_EQ(ok->rationale, "assigned before use");
  EXPECT_FALSE(parse_triage_response("VERDICT: maybe\nRATIONALE: x"));
  EXPECT_FALSE(parse_triage_response("VERDICT: bug\n"));
}

TEST(Triage, ScriptedSeededNpdIsBug) {
  const auto scan = scan::scan_corpus(exemplar_checker("npd"), seeded(), {});
  auto gw = gateway(std::make_shared<llm::ScriptedProvider>());
  for (std::size_t i = 0; i < scan.reports.size(); ++i) {
    EXPECT_EQ(triage(distill(scan.reports[i], seeded(), i), kNpdPattern, gw).verdict, Verdict::Bug);
  }
}

DistilledReport kfree_report(std::vector<std::pair<int, std::string>> lines) {
  DistilledReport d;
  d.checker = "ubi_kfree";
  d.file = "drivers/x.mc";
  d.message = "kfree() called on a pointer that may be uninitialized";
  d.span = {"drivers/x.mc", lines.back().first, 3, lines.back().first, 12};
  d.relevant_lines = std::move(lines);
  d.trace = {{d.span, "kfree() on uninitialized pointer"}};
  return d;
}

TEST(Triage, UnconditionalAssignmentIsNotABug) {
  auto gw = gateway(std::make_shared<llm::ScriptedProvider>());
  const auto clean = kfree_report({{5, "buf = get_buffer(dev);"}, {9, "kfree(buf);"}});
  EXPECT_EQ(triage(clean, kUbiPattern, gw).verdict, Verdict::NotABug);
  const auto early = kfree_report(
      {{4, "if (!dev) goto out;"}, {5, "buf = get_buffer(dev);"}, {9, "kfree(buf);"}});
  EXPECT_EQ(triage(early, kUbiPattern, gw).verdict, Verdict::Bug);
}

TEST(Triage, MalformedTwiceDefaultsToBug) {
  auto provider = std::make_shared<CannedProvider>("I am not sure.");
  auto gw = gateway(provider);
  const auto label = triage(kfree_report({{9, "kfree(buf);"}}), kUbiPattern, gw);
  EXPECT_EQ(label.verdict, Verdict::Bug);
  EXPECT_FALSE(label.rationale.empty());
  EXPECT_EQ(provider->calls.load(), 2);
}

TEST(Plausibility, SampleDeterministicAndDistinct) {
  const PlausibilityConfig cfg;
  const auto a = sample_indices(40, cfg);
  EXPECT_EQ(a, sample_indices(40, cfg));
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 5u);
  for (auto i : a) EXPECT_LT(i, 40u);
  EXPECT_EQ(sample_indices(3, cfg).size(), 3u);
  auto other = cfg;
  other.sample_seed = 7;
  EXPECT_NE(sample_indices(1000, other), sample_indices(1000, cfg));
}

TEST(Plausibility, SampleCoversIndicesUniformly) {
  // Each index of a 10-element list should be the first pick about 1/10 of
  // the time over many seeds.
  std::vector<int> hits(10, 0);
  PlausibilityConfig cfg;
  cfg.sample_size = 1;
  for (std::uint64_t s = 0; s < 20000; ++s) {
    cfg.sample_seed = s;
    ++hits[sample_indices(10, cfg)[0]];
  }
  for (int h : hits) EXPECT_NEAR(h, 2000, 200);
}

TEST(Plausibility, Rules) {
  const PlausibilityConfig cfg;
  const auto few = assess_plausibility(fake_scan(19), {}, cfg);
  EXPECT_TRUE(few.plausible);
  EXPECT_FALSE(few.sampled);

  const auto scan = fake_scan(40);
  const auto sample = sample_indices(40, cfg);
  std::vector<TriageLabel> one(5, {Verdict::Bug, "ok"});
  one[2].verdict = Verdict::NotABug;
  EXPECT_TRUE(assess_plausibility(scan, one, cfg).plausible);

  auto two = one;
  two[4].verdict = Verdict::NotABug;
  const auto d = assess_plausibility(scan, two, cfg);
  EXPECT_FALSE(d.plausible);
  EXPECT_EQ(d.sample, sample);
  EXPECT_EQ(d.fp_indices, (std::vector<std::size_t>{sample[2], sample[4]}));

  EXPECT_THROW(assess_plausibility(scan, {}, cfg), PreconditionViolation);
}

TEST(Plausibility, ConfigChecked) {
  PlausibilityConfig cfg;
  cfg.max_sample_fp = 6;
  EXPECT_THROW(cfg.check(), PreconditionViolation);
}

TEST(Refine, EmptyFpCasesRejected) {
  const auto bundle = patch::load_commit_bundle(testing::data_dir() / "workspace/commits/npd-001");
  auto gw = gateway(std::make_shared<llm::ScriptedProvider>());
  EXPECT_THROW(refine(exemplar_checker("npd"), {}, bundle.commit, testing::data_dir() / "workspace/corpus",
                      gw, {}),
               PreconditionViolation);
}

TEST(Refine, UnparseableCandidatesConsumeIterations) {
  const auto bundle = patch::load_commit_bundle(testing::data_dir() / "workspace/commits/npd-001");
  const auto corpus = testing::data_dir() / "workspace/corpus";
  const auto checker = exemplar_checker("npd");
  const auto scan = scan::scan_corpus(checker, corpus, {});
  ASSERT_FALSE(scan.reports.empty());
  auto provider = std::make_shared<CannedProvider>("checker gutted { map M : { A }; }");
  auto gw = gateway(provider);
  const auto out = refine(checker, {distill(scan.reports[0], corpus, 0)}, bundle.commit, corpus, gw, {});
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.iterations_used, 3);
  EXPECT_EQ(provider->calls.load(), 3);
  for (const auto &it : out.iterations) EXPECT_FALSE(it.parsed);
  EXPECT_EQ(out.final_checker, checker);
}

TEST(TriageMetrics, CountsAndRatios) {
  const auto m = metrics_from_counts(7, 22, 50, 0);
  EXPECT_NEAR(*m.precision, 7.0 / 29.0, 1e-12);
  EXPECT_EQ(*m.recall, 1.0);
  EXPECT_NEAR(*metrics_from_counts(61, 29, 0, 0).fp_rate, 29.0 / 90.0, 1e-12);
  const auto empty = compute_metrics({}, {});
  EXPECT_EQ(empty.tp + empty.fp + empty.tn + empty.fn, 0);
  EXPECT_FALSE(empty.precision);
  EXPECT_FALSE(empty.recall);
  EXPECT_FALSE(empty.fp_rate);
  EXPECT_THROW(compute_metrics({Verdict::Bug}, {}), PreconditionViolation);
}

}  // namespace
}  // namespace kf::triage
