#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kf/engine/events.hpp"
#include "kf/minilang/ast.hpp"

namespace kf::engine {

struct EngineBudget {
  std::size_t max_nodes = 10000;
  int loop_unroll = 2;
};

struct AnalysisResult {
  std::vector<Report> reports;  // deduplicated, sorted by report_less
  bool truncated = false;       // node budget exhausted
  std::size_t nodes = 0;
};

/// Path-sensitive forward exploration of `fn`. Unknown callees return
/// fresh unconstrained symbols; null tests fork and infeasible successors
/// are pruned. Loops run at most `loop_unroll` iterations and then exit
/// without assuming the condition. Reports are deduplicated by
/// (checker, span, message).
///
/// Throws CheckerRuntimeError raised by a hook and PreconditionViolation
/// for an invalid budget.
AnalysisResult analyze_function(const minilang::FunctionDef &fn,
                                const CheckerHooks &hooks,
                                const EngineBudget &budget = {});

// --- Brute-force oracle ---------------------------------------------------

/// One syntactic path through a function, evaluated in isolation.
struct OraclePath {
  std::vector<EngineEvent> events;
  std::vector<std::string> assumptions;  // human-readable, in path order
  bool feasible = true;
};

/// Enumerates every syntactic path (loops unrolled 0..loop_unroll times),
/// evaluates each one straight-line and decides feasibility from the
/// collected nullness/equality assumptions. Independent of
/// analyze_function's exploration. Supports at most 6 branch statements
/// and no nested loops; throws OracleUnsupported otherwise.
std::vector<OraclePath> enumerate_paths_oracle(const minilang::FunctionDef &fn,
                                               const EngineBudget &budget = {});

/// Replays `hooks` over every feasible oracle path from a fresh state and
/// returns the deduplicated, sorted reports.
std::vector<Report> replay_hooks(const std::vector<OraclePath> &paths,
                                 const CheckerHooks &hooks);

}  // namespace kf::engine
