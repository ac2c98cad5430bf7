#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kf/llm/gateway.hpp"
#include "kf/patch.hpp"
#include "kf/pipeline/synthesis.hpp"
#include "kf/triage/triage.hpp"
#include "kf/workspace/config.hpp"

namespace kf::workspace {

/// root/{commits, corpus, checkers, reports, cassettes, metrics}
struct WorkspaceLayout {
  std::filesystem::path root;

  explicit WorkspaceLayout(std::filesystem::path r) : root(std::move(r)) {}
  std::filesystem::path commits() const { return root / "commits"; }
  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path checkers() const { return root / "checkers"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path cassettes() const { return root / "cassettes"; }
  std::filesystem::path metrics() const { return root / "metrics"; }
  std::filesystem::path checker_dir(const std::string &commit_id) const {
    return checkers() / commit_id;
  }
  std::filesystem::path report_dir(const std::string &checker) const {
    return reports() / checker;
  }

  void create() const;
};

/// Builds the provider named by the config. Cassette paths are resolved
/// against the workspace root.
std::shared_ptr<llm::Provider> make_provider(const RunConfig &config,
                                             const WorkspaceLayout &layout);

enum class Bucket { Invalid, Direct, Refined, Fail };
std::string_view bucket_name(Bucket b);

/// checkers/<id>/outcome.json
struct CommitOutcome {
  std::string commit;
  std::optional<BugCategory> category;
  bool valid = false;
  bool complete = false;  // plausibility decided, or synthesis failed
  std::optional<Bucket> bucket;
  std::optional<pipeline::ValidationVerdict> verdict;
  std::string checker;  // name of the synthesized checker
  std::string pattern;
  int attempts = 0;
  std::vector<pipeline::FailureKind> failures;  // one per failed attempt
  std::size_t reports = 0;                      // last plausibility scan
  int refine_iterations = 0;
};

void write_outcome(const WorkspaceLayout &layout, const CommitOutcome &outcome);
std::optional<CommitOutcome> read_outcome(const WorkspaceLayout &layout, const std::string &id);

/// Synthesis for one commit bundle; writes attempts, checker.cdsl and the
/// outcome. Resumes from persisted attempts.
CommitOutcome synthesize_commit(const WorkspaceLayout &layout, const patch::CommitBundle &bundle,
                                llm::Gateway &gateway, const RunConfig &config);

/// Scan, triage sample, refinement loop and bucket assignment for a commit
/// whose synthesis produced a valid checker. Writes scan.json, triage.json,
/// refinement.json and updates the outcome.
CommitOutcome plausibility_stage(const WorkspaceLayout &layout, const patch::CommitBundle &bundle,
                                 llm::Gateway &gateway, const RunConfig &config);

/// Every commit bundle end to end; completed outcomes are reused. Writes the
/// config echo and metrics.json.
std::vector<CommitOutcome> run_all(const WorkspaceLayout &layout, llm::Gateway &gateway,
                                   const RunConfig &config);

struct MetricsRow {
  int total = 0, invalid = 0, direct = 0, refined = 0, fail = 0;
  int valid() const { return direct + refined + fail; }
};

struct MetricsReport {
  std::array<MetricsRow, 10> by_category{};  // indexed like kAllCategories
  MetricsRow uncategorized;
  MetricsRow totals;
  int pending = 0;  // valid checkers whose plausibility is still open
  std::map<std::string, int> failure_histogram;  // over all failed attempts
  std::optional<triage::TriageMetrics> triage;   // when ground truth is present
  std::string config_text;                       // echo of the run config
  std::uint64_t seed = 0;
};

/// Reads every outcome under checkers/. Triage metrics are computed when
/// metrics/ground_truth.json maps report keys to "bug" / "not_a_bug".
/// Throws EmptyWorkspace when no commit run is complete.
MetricsReport emit_metrics(const WorkspaceLayout &layout);
std::string metrics_json(const MetricsReport &report);
/// Fixed-width table in category order plus a totals line.
std::string metrics_table(const MetricsReport &report);

}  // namespace kf::workspace
