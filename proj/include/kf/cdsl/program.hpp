#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kf/engine/events.hpp"

namespace kf::cdsl {

struct Pos {
  int line = 0;
  int col = 0;
};

enum class EventKind { PostCall, PreCall, BranchCondition, Location, Bind, EndFunction };

std::string_view event_keyword(EventKind e);
std::optional<EventKind> parse_event_keyword(std::string_view s);

/// Region expressions usable inside guards and actions.
struct RegionExpr {
  enum class Kind { ArgRegion, ReturnRegion, BaseRegion, BindTarget, BindValue, Binding };
  Kind kind = Kind::ReturnRegion;
  int index = 0;     // ArgRegion
  std::string name;  // Binding
  Pos pos;

  friend bool operator==(const RegionExpr &a, const RegionExpr &b) {
    return a.kind == b.kind && a.index == b.index && a.name == b.name;
  }
};

struct Guard {
  enum class Kind { CalleeIs, ArgCount, AccessKind, NullTestOn, StateIs, ValueIs };
  Kind kind = Kind::CalleeIs;
  bool negated = false;
  std::string text;  // callee name, access kind, value class, or bound name
  int number = 0;    // arg_count
  std::string map;   // state_is
  std::string tag;   // state_is
  RegionExpr region; // state_is
  Pos pos;

  friend bool operator==(const Guard &a, const Guard &b) {
    return a.kind == b.kind && a.negated == b.negated && a.text == b.text &&
           a.number == b.number && a.map == b.map && a.tag == b.tag &&
           (a.kind != Kind::StateIs || a.region == b.region);
  }
};

struct Action {
  enum class Kind { SetState, ClearState, PropagateAlias, MarkAllAliases, Report };
  Kind kind = Kind::SetState;
  std::string map;
  std::string tag;
  std::string template_id;
  std::optional<RegionExpr> region;  // target; optional only for report
  std::optional<RegionExpr> source;  // propagate_alias rhs
  Pos pos;

  friend bool operator==(const Action &a, const Action &b) {
    return a.kind == b.kind && a.map == b.map && a.tag == b.tag &&
           a.template_id == b.template_id && a.region == b.region && a.source == b.source;
  }
};

struct Handler {
  EventKind event = EventKind::PostCall;
  std::vector<Guard> guards;  // conjunction
  std::vector<Action> actions;
  Pos pos;

  friend bool operator==(const Handler &a, const Handler &b) {
    return a.event == b.event && a.guards == b.guards && a.actions == b.actions;
  }
};

struct StateMap {
  std::string name;
  std::vector<std::string> tags;
  Pos pos;

  friend bool operator==(const StateMap &a, const StateMap &b) {
    return a.name == b.name && a.tags == b.tags;
  }
};

struct ReportTemplate {
  std::string id;
  std::string message;
  Pos pos;

  friend bool operator==(const ReportTemplate &a, const ReportTemplate &b) {
    return a.id == b.id && a.message == b.message;
  }
};

/// A validated checker. Equality ignores source positions.
struct CheckerProgram {
  std::string name;
  std::vector<StateMap> state_maps;
  bool uses_alias_map = false;
  std::vector<Handler> handlers;
  std::vector<ReportTemplate> report_templates;

  const StateMap *find_map(std::string_view name) const;
  const ReportTemplate *find_template(std::string_view id) const;

  friend bool operator==(const CheckerProgram &, const CheckerProgram &) = default;
};

struct CdslDiagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  Pos pos;

  bool is_error() const { return severity == Severity::Error; }
  /// `<code>: <message> at <line>:<col>`
  std::string to_string() const;
};

struct ParseResult {
  std::optional<CheckerProgram> program;  // set iff no error diagnostics
  std::vector<CdslDiagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
  /// Error diagnostics only, one per line.
  std::string error_text() const;
};

/// Parses and validates CDSL source. Never throws on bad input.
ParseResult parse_checker(std::string_view text);

std::string pretty_print(const CheckerProgram &program);

/// Engine hooks interpreting `program`. The program is copied; the hooks
/// are immutable and safe to share between threads.
std::shared_ptr<const engine::CheckerHooks> instantiate_hooks(const CheckerProgram &program);

struct BuiltinInfo {
  std::string name;
  std::string signature;
  std::string description;
};

/// The guard/region/alias builtins available to checker authors, in a
/// stable order.
const std::vector<BuiltinInfo> &builtin_catalog();
/// The catalog rendered one builtin per line, as injected into prompts.
std::string render_catalog();

/// Names of catalog builtins that occur in `program`.
std::vector<std::string> builtins_used(const CheckerProgram &program);

}  // namespace kf::cdsl
