#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kf/cdsl/program.hpp"
#include "kf/engine/events.hpp"
#include "kf/llm/gateway.hpp"
#include "kf/pipeline/synthesis.hpp"
#include "kf/scan/scanner.hpp"

namespace kf::triage {

struct DistilledReport {
  std::string checker;
  std::string file;
  std::size_t index = 0;  // position in the scan's report list
  std::string message;
  minilang::SourceSpan span;
  std::vector<std::pair<int, std::string>> relevant_lines;  // first-mention order
  std::vector<engine::TraceStep> trace;
};

/// Keeps only the source lines the trace and the report point at, in the
/// order the trace first mentions them. Throws FileNotFound.
DistilledReport distill(const engine::Report &report, const std::filesystem::path &corpus_root,
                        std::size_t index = 0);

/// Text handed to the TriageAnalyst and Refiner:
///   Checker: <name>
///   Report: <file>:<line>:<col>: <message>
///   Relevant lines:
///   <line>: <source>
///   Trace:
///   <line>:<col>: <note>
std::string render(const DistilledReport &d);
std::string render_all(const std::vector<DistilledReport> &cases);

enum class Verdict { Bug, NotABug };

struct TriageLabel {
  Verdict verdict = Verdict::Bug;
  std::string rationale;
};

/// Reads `VERDICT: bug|not_a_bug` and `RATIONALE: ...`. Returns nothing
/// when either is missing.
std::optional<TriageLabel> parse_triage_response(const std::string &text);

/// One retry on an unparseable answer, then a conservative `bug`.
/// ProviderUnavailable propagates.
TriageLabel triage(const DistilledReport &d, const std::string &pattern, llm::Gateway &gateway);

struct PlausibilityConfig {
  int t_plausible = 20;
  int sample_size = 5;
  int max_sample_fp = 1;
  std::uint64_t sample_seed = 20250101;

  void check() const;
};

/// First `min(sample_size, n)` entries of a seeded Fisher-Yates permutation
/// of 0..n-1.
std::vector<std::size_t> sample_indices(std::size_t n, const PlausibilityConfig &config);

struct PlausibilityDecision {
  bool plausible = false;
  bool sampled = false;
  std::vector<std::size_t> sample;        // report indices
  std::vector<std::size_t> fp_indices;    // sampled reports labelled not_a_bug
};

/// `labels` are aligned with `sample_indices(scan.reports.size(), config)`
/// and only consulted when there are at least t_plausible reports.
PlausibilityDecision assess_plausibility(const scan::ScanResult &scan,
                                         const std::vector<TriageLabel> &labels,
                                         const PlausibilityConfig &config);

struct RefinementIteration {
  int index = 0;
  std::string candidate_digest;
  bool parsed = false;
  int fp_reports = -1;  // reports left on the fp functions, -1 when not checked
  std::optional<pipeline::ValidationVerdict> verdict;
  bool accepted = false;
  std::string reason;
};

struct RefinementOutcome {
  int iterations_used = 0;
  bool accepted = false;
  cdsl::CheckerProgram final_checker;
  std::string final_text;
  std::vector<DistilledReport> fp_cases;
  std::vector<RefinementIteration> iterations;
};

/// Number of reports `checker` raises in the functions containing the fp
/// cases, each function analyzed without limits.
int reports_on_fp_functions(const cdsl::CheckerProgram &checker,
                            const std::vector<DistilledReport> &fp_cases,
                            const std::filesystem::path &corpus_root,
                            const engine::EngineBudget &budget);

/// Asks the Refiner for a new checker up to `max_iterations` times. A
/// candidate is accepted when it parses, raises nothing on the fp functions
/// and stays valid on the commit. Throws PreconditionViolation for empty
/// `fp_cases`.
RefinementOutcome refine(const cdsl::CheckerProgram &checker,
                         const std::vector<DistilledReport> &fp_cases,
                         const patch::PatchCommit &commit,
                         const std::filesystem::path &corpus_root, llm::Gateway &gateway,
                         const pipeline::SynthesisConfig &config, int max_iterations = 3);

struct TriageMetrics {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> precision;  // tp / (tp + fp)
  std::optional<double> recall;     // tp / (tp + fn)
  std::optional<double> fp_rate;    // fp / (tp + fp), share of agent positives not confirmed
};

TriageMetrics metrics_from_counts(int tp, int fp, int tn, int fn);
/// Throws PreconditionViolation when the lists differ in length.
TriageMetrics compute_metrics(const std::vector<Verdict> &ground_truth,
                              const std::vector<Verdict> &agent);

std::string_view verdict_name(Verdict v);
std::optional<Verdict> parse_verdict_name(std::string_view s);

std::string triage_json(const std::string &checker, const std::vector<DistilledReport> &reports,
                        const std::vector<TriageLabel> &labels,
                        const PlausibilityDecision &decision);
std::string refinement_json(const RefinementOutcome &outcome);

}  // namespace kf::triage
