#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kf/cdsl/program.hpp"
#include "kf/engine/engine.hpp"
#include "kf/llm/gateway.hpp"
#include "kf/patch.hpp"

namespace kf::pipeline {

struct SynthesisConfig {
  int max_iterations = 10;
  int max_repair_attempts = 5;
  int t_valid = 50;
  engine::EngineBudget budget;

  /// Throws PreconditionViolation when a count is below 1.
  void check() const;
};

struct ValidationVerdict {
  int n_buggy = 0;    // reports on the pre-patch functions
  int n_patched = 0;  // reports on the post-patch functions
  int t_valid = 50;
  bool valid = false;

  friend bool operator==(const ValidationVerdict &, const ValidationVerdict &) = default;
};

bool verdict_predicate(int n_buggy, int n_patched, int t_valid);
ValidationVerdict make_verdict(int n_buggy, int n_patched, int t_valid);

enum class FailureKind { Compilation, Runtime, SemanticFlagsBoth, SemanticFlagsNeither };

std::string_view failure_name(FailureKind kind);
std::optional<FailureKind> parse_failure(std::string_view name);

struct AttemptRecord {
  int iteration = 0;  // 1-based
  std::string pattern;
  std::string plan;
  std::string checker_text;
  std::string diagnostics;  // after the last repair round; empty when it parsed
  std::vector<std::string> repair_log;  // diagnostics fed to each repair round
  bool compiled = false;
  bool runtime_error = false;
  std::string error;  // agent, provider or engine failure text
  std::optional<ValidationVerdict> verdict;  // set whenever validation ran
  std::optional<FailureKind> failure;        // set iff the attempt did not yield a valid checker

  bool succeeded() const { return verdict && verdict->valid && !failure; }
};

/// Compilation when the checker never parsed, Runtime when the engine
/// raised, otherwise a semantic sub-kind from the verdict: FlagsNeither when
/// the pre-patch code draws no report and the patched code stays under the
/// threshold, FlagsBoth for everything else.
FailureKind categorize_failure(const AttemptRecord &attempt);

/// Counts reports of `checker` over every function of the files the commit
/// touches, pre-patch then post-patch. Throws CorpusError when a file is
/// missing, does not apply or does not parse; lets CheckerRuntimeError
/// through.
ValidationVerdict validate_checker(const cdsl::CheckerProgram &checker,
                                   const patch::PatchCommit &commit,
                                   const std::filesystem::path &corpus_root,
                                   const SynthesisConfig &config);

struct SynthesisResult {
  std::string commit_id;
  std::optional<cdsl::CheckerProgram> checker;
  std::string checker_text;  // canonical form of `checker`
  std::optional<ValidationVerdict> verdict;
  std::string pattern;  // from the successful attempt
  std::vector<AttemptRecord> attempts;
  int resumed_from = 0;  // attempts loaded from disk

  bool valid() const { return checker.has_value(); }
};

/// Iterates pattern analysis, planning, implementation, bounded syntax
/// repair and validation until a checker is valid or the iteration budget is
/// spent. Agent and parse failures are recorded per attempt; CorpusError
/// propagates.
///
/// When `persist_dir` is set (normally workspace/checkers/<id>) every attempt
/// is written under attempt-<n>/ and previously written attempts are loaded
/// instead of being re-run, so an interrupted run resumes at the next
/// attempt.
SynthesisResult gen_checker(const patch::PatchCommit &commit,
                            const std::filesystem::path &corpus_root,
                            llm::Gateway &gateway, const SynthesisConfig &config,
                            const std::optional<std::filesystem::path> &persist_dir = {});

// Persistence helpers, shared with the CLI.
void write_attempt(const std::filesystem::path &dir, const AttemptRecord &attempt);
std::optional<AttemptRecord> read_attempt(const std::filesystem::path &dir);
std::string verdict_json(const ValidationVerdict &v);
ValidationVerdict parse_verdict_json(std::string_view text);

}  // namespace kf::pipeline
