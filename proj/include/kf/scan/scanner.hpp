#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kf/cdsl/program.hpp"
#include "kf/engine/engine.hpp"

namespace kf::scan {

struct ScanLimits {
  double time_limit = 3600;  // seconds
  std::size_t max_warnings = 100;
  int jobs = 32;
  bool enforce = false;  // limits are ignored unless set
  engine::EngineBudget budget;
};

struct ScanResult {
  std::string checker;
  std::vector<engine::Report> reports;  // sorted by report_less
  bool truncated = false;
  std::string truncation_reason;  // "time" or "warnings"
  std::size_t files_scanned = 0;
  std::vector<std::string> skipped_files;  // did not parse
  std::size_t budget_exhausted = 0;         // functions cut by the node budget
  double wall_time = 0;
  std::string error;  // set by scan_many when the checker failed

  /// Everything except wall_time, for determinism checks.
  bool same_outcome(const ScanResult &other) const;
};

/// Sorted relative paths of the `.mc` files below `root`.
std::vector<std::string> list_corpus(const std::filesystem::path &root);

/// Analyzes every function of every `.mc` file below `corpus_root` with a
/// pool of `limits.jobs` workers, one file per work unit. Unparseable files
/// are recorded and skipped. With `enforce` set, workers stop pulling files
/// once the time limit passes or the reports of the completed leading files
/// reach `max_warnings`; the result keeps only reports from files before the
/// first unscanned one, cut to `max_warnings`, so a truncated list is always
/// a prefix of the full one.
///
/// Throws CorpusError when the root is not a directory; CheckerRuntimeError
/// from the checker propagates.
ScanResult scan_corpus(const cdsl::CheckerProgram &checker,
                       const std::filesystem::path &corpus_root, const ScanLimits &limits);

/// Scans each checker independently, ordered by checker name. A failing
/// checker yields a result with `error` set. Duplicate names throw
/// PreconditionViolation.
std::vector<ScanResult> scan_many(const std::vector<cdsl::CheckerProgram> &checkers,
                                  const std::filesystem::path &corpus_root,
                                  const ScanLimits &limits);

std::string scan_json(const ScanResult &result);
ScanResult parse_scan_json(std::string_view text);

// Shared report serialization.
std::string report_key(const engine::Report &r);  // file:line:col: message

}  // namespace kf::scan
