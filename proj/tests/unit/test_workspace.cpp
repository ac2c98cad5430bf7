#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>

#include "kf/workspace/workspace.hpp"
#include "support.hpp"

namespace kf::workspace {
namespace {

namespace fs = std::filesystem;

int run_cli(const std::string &args) {
  const std::string cmd = std::string(KF_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.synthesis.max_iterations, 10);
  EXPECT_EQ(c.synthesis.max_repair_attempts, 5);
  EXPECT_EQ(c.synthesis.t_valid, 50);
  EXPECT_EQ(c.plausibility.t_plausible, 20);
  EXPECT_EQ(c.plausibility.sample_size, 5);
  EXPECT_EQ(c.plausibility.max_sample_fp, 1);
  EXPECT_EQ(c.refine_iterations, 3);
  EXPECT_EQ(c.limits.time_limit, 3600);
  EXPECT_EQ(c.limits.max_warnings, 100u);
  EXPECT_EQ(c.limits.jobs, 32);
  EXPECT_TRUE(c.limits.enforce);
}

TEST(Config, ParseAndRoundTrip) {
  const auto c = parse_config(
      "# run settings\n"
      "t_valid = 40\n"
      "provider = \"replay\"   # trailing comment\n"
      "jobs = 4\n"
      "seed = 99\n");
  EXPECT_EQ(c.synthesis.t_valid, 40);
  EXPECT_EQ(c.provider, "replay");
  EXPECT_EQ(c.limits.jobs, 4);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.plausibility.sample_seed, 99u);
  const auto again = parse_config(config_text(c));
  for (const auto &k : config_keys()) EXPECT_EQ(get_config_value(again, k), get_config_value(c, k)) << k;
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("colour = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("jobs = many\n"), ConfigError);
  EXPECT_THROW(parse_config("jobs\n"), ConfigError);
  RunConfig c;
  EXPECT_THROW(set_config_value(c, "provider", "oracle"), ConfigError);
}

TEST(Config, EnvironmentOverrides) {
  ::setenv("KF_MAX_ITERATIONS", "7", 1);
  RunConfig c;
  apply_env_overrides(c);
  ::unsetenv("KF_MAX_ITERATIONS");
  EXPECT_EQ(c.synthesis.max_iterations, 7);
}

CommitOutcome outcome(const std::string &id, BugCategory cat, Bucket b) {
  CommitOutcome o;
  o.commit = id;
  o.category = cat;
  o.valid = b != Bucket::Invalid;
  o.complete = true;
  o.bucket = b;
  if (b == Bucket::Invalid) o.failures = {pipeline::FailureKind::Compilation, pipeline::FailureKind::Runtime};
  return o;
}

TEST(Metrics, BucketsFromOutcomes) {
  testing::TempDir tmp("metrics");
  const WorkspaceLayout ws(tmp.path());
  ws.create();
  write_outcome(ws, outcome("a", BugCategory::NullPointerDereference, Bucket::Invalid));
  write_outcome(ws, outcome("b", BugCategory::NullPointerDereference, Bucket::Direct));
  write_outcome(ws, outcome("c", BugCategory::DoubleFree, Bucket::Direct));
  write_outcome(ws, outcome("d", BugCategory::UseBeforeInitialization, Bucket::Refined));
  auto open = outcome("e", BugCategory::DoubleFree, Bucket::Direct);
  open.complete = false;
  open.bucket.reset();
  write_outcome(ws, open);

  const auto m = emit_metrics(ws);
  EXPECT_EQ(m.totals.total, 4);
  EXPECT_EQ(m.totals.invalid, 1);
  EXPECT_EQ(m.totals.direct, 2);
  EXPECT_EQ(m.totals.refined, 1);
  EXPECT_EQ(m.totals.fail, 0);
  EXPECT_EQ(m.totals.valid(), 3);
  EXPECT_EQ(m.pending, 1);
  EXPECT_EQ(m.by_category[0].total, 2);
  EXPECT_EQ(m.failure_histogram.at("Compilation"), 1);
  EXPECT_EQ(m.failure_histogram.at("Runtime"), 1);

  const auto j = nlohmann::json::parse(metrics_json(m));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["seed"], RunConfig{}.seed);
  EXPECT_NE(metrics_table(m).find("NPD"), std::string::npos);
}

TEST(Metrics, EmptyWorkspace) {
  testing::TempDir tmp("empty-ws");
  EXPECT_THROW(emit_metrics(WorkspaceLayout(tmp.path())), EmptyWorkspace);
}

TEST(Outcome, RoundTrip) {
  testing::TempDir tmp("outcome");
  const WorkspaceLayout ws(tmp.path());
  auto o = outcome("x", BugCategory::MemoryLeak, Bucket::Refined);
  o.verdict = pipeline::make_verdict(2, 0, 50);
  o.refine_iterations = 2;
  o.reports = 31;
  write_outcome(ws, o);
  const auto back = read_outcome(ws, "x");
  ASSERT_TRUE(back);
  EXPECT_EQ(back->bucket, Bucket::Refined);
  EXPECT_EQ(back->verdict, o.verdict);
  EXPECT_EQ(back->refine_iterations, 2);
  EXPECT_EQ(back->reports, 31u);
  EXPECT_EQ(back->category, BugCategory::MemoryLeak);
  EXPECT_FALSE(read_outcome(ws, "missing"));
}

TEST(RunAll, EmptyWorkspace) {
  testing::TempDir tmp("no-bundles");
  const WorkspaceLayout ws(tmp.path());
  llm::Gateway gw(std::make_shared<llm::ScriptedProvider>(), std::make_shared<llm::Transcript>());
  EXPECT_THROW(run_all(ws, gw, RunConfig{}), EmptyWorkspace);
}

TEST(RunAll, CompletedOutcomesAreReused) {
  testing::TempDir tmp("reuse");
  testing::copy_workspace(tmp.path());
  const WorkspaceLayout ws(tmp.path());
  RunConfig cfg;
  cfg.limits.jobs = 4;
  {
    llm::Gateway gw(std::make_shared<llm::ScriptedProvider>(), std::make_shared<llm::Transcript>());
    const auto first = run_all(ws, gw, cfg);
    EXPECT_EQ(first.size(), 6u);
    EXPECT_GT(gw.transcript().size(), 0u);
  }
  EXPECT_TRUE(fs::exists(ws.metrics() / "run_config.toml"));
  EXPECT_TRUE(fs::exists(ws.metrics() / "metrics.json"));
  llm::Gateway gw(std::make_shared<llm::ScriptedProvider>(), std::make_shared<llm::Transcript>());
  const auto second = run_all(ws, gw, cfg);
  EXPECT_EQ(second.size(), 6u);
  EXPECT_EQ(gw.transcript().size(), 0u);
  EXPECT_EQ(emit_metrics(ws).totals.total, 6);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("metrics --no-such-flag"), 2);
  EXPECT_EQ(run_cli("synthesize"), 2);  // --commit is required
}

TEST(Cli, SynthesizeAndMetrics) {
  testing::TempDir tmp("cli");
  testing::copy_workspace(tmp.path());
  const std::string ws = "-w " + tmp.path().string();
  EXPECT_EQ(run_cli("metrics " + ws), 1);  // nothing has run yet
  EXPECT_EQ(run_cli("synthesize --commit npd-001 " + ws), 0);
  EXPECT_TRUE(fs::exists(tmp.path() / "checkers/npd-001/checker.cdsl"));
  EXPECT_EQ(run_cli("validate --commit npd-001 --checker " +
                    (tmp.path() / "checkers/npd-001/checker.cdsl").string() + " " + ws),
            0);
  EXPECT_EQ(run_cli("synthesize --commit no-such-commit " + ws), 1);
  EXPECT_EQ(run_cli("run-all -j 4 " + ws), 0);
  EXPECT_EQ(run_cli("metrics --json " + ws), 0);
  const auto j = nlohmann::json::parse(read_file(tmp.path() / "metrics/metrics.json"));
  EXPECT_EQ(j["totals"]["total"], 6);
}

TEST(Cli, ConfigErrorsFail) {
  testing::TempDir tmp("cli-config");
  testing::copy_workspace(tmp.path());
  write_file(tmp.path() / "chkforge.toml", "bogus_key = 1\n");
  EXPECT_EQ(run_cli("run-all -w " + tmp.path().string()), 1);
}

}  // namespace
}  // namespace kf::workspace
