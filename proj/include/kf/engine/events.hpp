#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kf/engine/state.hpp"
#include "kf/minilang/ast.hpp"

namespace kf::engine {

using minilang::SourceSpan;

struct ArgInfo {
  SymbolicValue value;
  std::optional<Region> region;
  SourceSpan span;
};

struct PreCallEvent {
  std::string callee;
  std::vector<ArgInfo> args;
  SourceSpan span;
};

struct PostCallEvent {
  std::string callee;
  std::vector<ArgInfo> args;
  SymbolicValue ret;
  std::optional<Region> return_region;
  SourceSpan span;
};

/// Fired before the path forks on `cond`. For null tests (`!e`, `e`,
/// `e == NULL`, `e != NULL`) `tested_region` is the region of `e`.
struct BranchConditionEvent {
  const minilang::Cond *cond = nullptr;
  bool is_null_test = false;
  std::optional<Region> tested_region;
  SourceSpan span;
};

enum class AccessKind { Load, Store };

struct LocationEvent {
  AccessKind kind = AccessKind::Load;
  std::optional<Region> base;
  SourceSpan span;
};

/// A store. `target` is the location written (a variable or field), absent
/// when it cannot be resolved; `value_region` is where the stored value
/// points, if anywhere.
struct BindEvent {
  std::optional<Region> target;
  SymbolicValue value;
  std::optional<Region> value_region;
  SourceSpan span;
};

struct DeadSymbolsEvent {
  std::vector<Region> regions;
  SourceSpan span;
};

struct EndFunctionEvent {
  SourceSpan span;
};

using EngineEvent =
    std::variant<PreCallEvent, PostCallEvent, BranchConditionEvent, LocationEvent,
                 BindEvent, DeadSymbolsEvent, EndFunctionEvent>;

std::string_view event_name(const EngineEvent &e);
const SourceSpan &event_span(const EngineEvent &e);

struct TraceStep {
  SourceSpan span;
  std::string note;

  friend bool operator==(const TraceStep &, const TraceStep &) = default;
};

struct Report {
  std::string checker;
  std::string message;
  SourceSpan span;
  std::vector<TraceStep> trace;  // last step is at `span`

  friend bool operator==(const Report &, const Report &) = default;
};

/// Orders by (file, line, col, message, checker).
bool report_less(const Report &a, const Report &b);

/// The checker-facing view of one path while an event is dispatched.
class CheckerContext {
 public:
  virtual ~CheckerContext() = default;
  virtual ProgramState &state() = 0;
  /// Records a path note, optionally tied to a region so it can appear in
  /// the trace of a later report about that region.
  virtual void note(const SourceSpan &span, const std::string &text,
                    const std::optional<Region> &region) = 0;
  virtual void report(const std::string &message, const SourceSpan &span,
                      const std::optional<Region> &region) = 0;
};

/// An event-driven checker. Implementations are immutable; all per-path
/// data lives in the ProgramState reachable through the context.
class CheckerHooks {
 public:
  virtual ~CheckerHooks() = default;
  virtual const std::string &name() const = 0;
  virtual void on_event(const EngineEvent &event, CheckerContext &ctx) const = 0;
};

}  // namespace kf::engine
