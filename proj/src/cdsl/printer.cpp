#include <set>

#include "kf/cdsl/program.hpp"

namespace kf::cdsl {

namespace {

std::string quote(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out + "\"";
}

std::string print_region(const RegionExpr &r) {
  switch (r.kind) {
    case RegionExpr::Kind::ArgRegion: return "arg_region(" + std::to_string(r.index) + ")";
    case RegionExpr::Kind::ReturnRegion: return "return_region";
    case RegionExpr::Kind::BaseRegion: return "base_region";
    case RegionExpr::Kind::BindTarget: return "bind_target";
    case RegionExpr::Kind::BindValue: return "bind_value";
    case RegionExpr::Kind::Binding: return r.name;
  }
  return "?";
}

std::string print_guard(const Guard &g) {
  std::string body;
  switch (g.kind) {
    case Guard::Kind::CalleeIs: body = "callee_is(" + quote(g.text) + ")"; break;
    case Guard::Kind::ArgCount: body = "arg_count(" + std::to_string(g.number) + ")"; break;
    case Guard::Kind::AccessKind: body = "access_kind(" + g.text + ")"; break;
    case Guard::Kind::NullTestOn: body = "null_test_on(" + g.text + ")"; break;
    case Guard::Kind::StateIs:
      body = "state_is(" + g.map + ", " + print_region(g.region) + ", " + g.tag + ")";
      break;
    case Guard::Kind::ValueIs: body = "value_is(" + g.text + ")"; break;
  }
  return (g.negated ? "not " : "") + body;
}

std::string print_action(const Action &a) {
  switch (a.kind) {
    case Action::Kind::SetState:
      return "set_state(" + a.map + ", " + print_region(*a.region) + ", " + a.tag + ")";
    case Action::Kind::MarkAllAliases:
      return "mark_all_aliases(" + a.map + ", " + print_region(*a.region) + ", " + a.tag + ")";
    case Action::Kind::ClearState:
      return "clear_state(" + a.map + ", " + print_region(*a.region) + ")";
    case Action::Kind::PropagateAlias:
      return "propagate_alias(" + print_region(*a.region) + ", " + print_region(*a.source) +
             ")";
    case Action::Kind::Report:
      return "report(" + a.template_id + (a.region ? ", " + print_region(*a.region) : "") +
             ")";
  }
  return "?";
}

}  // namespace

std::string pretty_print(const CheckerProgram &p) {
  std::string out = "checker " + p.name + " {\n";
  for (const auto &m : p.state_maps) {
    out += "  map " + m.name + " : { ";
    for (std::size_t i = 0; i < m.tags.size(); ++i) {
      if (i) out += ", ";
      out += m.tags[i];
    }
    out += " };\n";
  }
  if (p.uses_alias_map) out += "  alias;\n";
  for (const auto &t : p.report_templates) {
    out += "  report " + t.id + " = " + quote(t.message) + ";\n";
  }
  for (const auto &h : p.handlers) {
    out += "\n  on " + std::string(event_keyword(h.event));
    for (std::size_t i = 0; i < h.guards.size(); ++i) {
      out += i ? " && " : " when ";
      out += print_guard(h.guards[i]);
    }
    out += " {\n";
    for (const auto &a : h.actions) out += "    " + print_action(a) + ";\n";
    out += "  }\n";
  }
  return out + "}\n";
}

const std::vector<BuiltinInfo> &builtin_catalog() {
  static const std::vector<BuiltinInfo> kCatalog = {
      {"callee_is", "callee_is(\"name\") -> guard",
       "true when the current pre_call/post_call event is a call to the named function"},
      {"arg_region", "arg_region(i) -> region",
       "memory region of the i-th call argument (0-based); the region an argument "
       "expression points to, or the variable itself when its value is unknown"},
      {"return_region", "return_region -> region",
       "region pointed to by the value a call returns (post_call only)"},
      {"base_region", "base_region -> region",
       "region being dereferenced by the current load or store (location only)"},
      {"null_test_on", "null_test_on(x) -> guard",
       "true when the branch condition is a null test (!e, e, e == NULL, e != NULL); "
       "binds x to the region of e"},
      {"state_is", "state_is(Map, region, Tag) -> guard",
       "true when the region's tag in Map equals Tag"},
      {"access_kind", "access_kind(load|store) -> guard",
       "true when the current location event is a read or a write"},
      {"propagate_alias", "propagate_alias(lhs, rhs) -> action",
       "records lhs as an alias of rhs so both share tracked state (needs 'alias;')"},
      {"mark_all_aliases", "mark_all_aliases(Map, region, Tag) -> action",
       "sets Tag on the region and every region recorded as its alias (needs 'alias;')"},
  };
  return kCatalog;
}

std::string render_catalog() {
  std::string out;
  for (const auto &b : builtin_catalog()) {
    out += "- " + b.signature + ": " + b.description + "\n";
  }
  return out;
}

std::vector<std::string> builtins_used(const CheckerProgram &p) {
  std::set<std::string> seen;
  auto region = [&](const std::optional<RegionExpr> &r) {
    if (!r) return;
    switch (r->kind) {
      case RegionExpr::Kind::ArgRegion: seen.insert("arg_region"); break;
      case RegionExpr::Kind::ReturnRegion: seen.insert("return_region"); break;
      case RegionExpr::Kind::BaseRegion: seen.insert("base_region"); break;
      default: break;
    }
  };
  for (const auto &h : p.handlers) {
    for (const auto &g : h.guards) {
      switch (g.kind) {
        case Guard::Kind::CalleeIs: seen.insert("callee_is"); break;
        case Guard::Kind::NullTestOn: seen.insert("null_test_on"); break;
        case Guard::Kind::StateIs:
          seen.insert("state_is");
          region(g.region);
          break;
        case Guard::Kind::AccessKind: seen.insert("access_kind"); break;
        default: break;
      }
    }
    for (const auto &a : h.actions) {
      if (a.kind == Action::Kind::PropagateAlias) seen.insert("propagate_alias");
      if (a.kind == Action::Kind::MarkAllAliases) seen.insert("mark_all_aliases");
      region(a.region);
      region(a.source);
    }
  }
  std::vector<std::string> out;
  for (const auto &b : builtin_catalog()) {
    if (seen.count(b.name)) out.push_back(b.name);
  }
  return out;
}

}  // namespace kf::cdsl
