#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "kf/cdsl/program.hpp"

namespace kf::cdsl {

namespace {

constexpr std::string_view kEventNames[] = {"post_call", "pre_call", "branch_condition",
                                            "location",  "bind",     "end_function"};

}  // namespace

std::string_view event_keyword(EventKind e) { return kEventNames[static_cast<int>(e)]; }

std::optional<EventKind> parse_event_keyword(std::string_view s) {
  for (int i = 0; i < 6; ++i) {
    if (kEventNames[i] == s) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

const StateMap *CheckerProgram::find_map(std::string_view n) const {
  for (const auto &m : state_maps) {
    if (m.name == n) return &m;
  }
  return nullptr;
}

const ReportTemplate *CheckerProgram::find_template(std::string_view id) const {
  for (const auto &t : report_templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::string CdslDiagnostic::to_string() const {
  return code + ": " + message + " at " + std::to_string(pos.line) + ":" +
         std::to_string(pos.col);
}

std::string ParseResult::error_text() const {
  std::string out;
  for (const auto &d : diagnostics) {
    if (d.is_error()) out += d.to_string() + "\n";
  }
  return out;
}

namespace {

// --- Lexing -------------------------------------------------------------

enum class Tok { Ident, String, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Pos pos;
  Pos end;  // just past the last character
};

struct SyntaxFail {
  Pos pos;
  std::string message;
};

std::string describe(const Token &t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "string literal";
    default: return "'" + t.text + "'";
  }
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  auto bump = [&] {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  for (;;) {
    while (i < text.size()) {
      if (std::isspace(static_cast<unsigned char>(text[i]))) {
        bump();
      } else if (text.substr(i, 2) == "//") {
        while (i < text.size() && text[i] != '\n') bump();
      } else {
        break;
      }
    }
    Token t;
    t.pos = {line, col};
    if (i >= text.size()) {
      t.end = t.pos;
      out.push_back(t);
      return out;
    }
    const char c = text[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
        t.text += text[i];
        bump();
      }
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Int;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        t.text += text[i];
        bump();
      }
      if (t.text.size() > 9) throw SyntaxFail{t.pos, "integer literal too large"};
    } else if (c == '"') {
      t.kind = Tok::String;
      bump();
      for (;;) {
        if (i >= text.size() || text[i] == '\n') {
          throw SyntaxFail{t.pos, "unterminated string literal"};
        }
        if (text[i] == '"') {
          bump();
          break;
        }
        if (text[i] == '\\' && i + 1 < text.size()) {
          bump();
          const char e = text[i];
          if (e == 'n') {
            t.text += '\n';
          } else if (e == '"' || e == '\\') {
            t.text += e;
          } else {
            throw SyntaxFail{{line, col - 1}, std::string("unknown escape '\\") + e + "'"};
          }
          bump();
          continue;
        }
        t.text += text[i];
        bump();
      }
    } else if (text.substr(i, 2) == "&&") {
      t.kind = Tok::Punct;
      t.text = "&&";
      bump();
      bump();
    } else if (std::string_view("{}();,:=!").find(c) != std::string_view::npos) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      bump();
    } else {
      throw SyntaxFail{t.pos, std::string("unexpected character '") + c + "'"};
    }
    t.end = {line, col};
    out.push_back(std::move(t));
  }
}

// --- Raw syntax tree ----------------------------------------------------

struct Term {
  enum class Kind { Ident, String, Int, Call };
  Kind kind = Kind::Ident;
  std::string text;
  long long value = 0;
  std::vector<Term> args;
  Pos pos;
};

struct RawGuard {
  bool negated = false;
  Term call;
};

struct RawHandler {
  std::string event;
  Pos event_pos;
  std::vector<RawGuard> guards;
  std::vector<Term> actions;
  Pos pos;
  Pos body_pos;
};

struct RawMap {
  std::string name;
  std::vector<std::pair<std::string, Pos>> tags;
  Pos pos;
};

struct RawProgram {
  std::string name;
  Pos name_pos;
  std::vector<RawMap> maps;
  std::vector<Pos> alias_decls;
  std::vector<ReportTemplate> templates;
  std::vector<RawHandler> handlers;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  RawProgram run() {
    RawProgram p;
    expect_word("checker", "at start of checker");
    p.name_pos = peek().pos;
    p.name = ident("checker name");
    expect("{", "after checker name");
    while (!is("}")) {
      if (peek().kind == Tok::End) fail_here("expected '}' to close checker");
      if (is_word("map")) {
        p.maps.push_back(map_decl());
      } else if (is_word("alias")) {
        p.alias_decls.push_back(next().pos);
        expect_semi("after 'alias'");
      } else if (is_word("report")) {
        next();
        ReportTemplate t;
        t.pos = peek().pos;
        t.id = ident("report template name");
        expect("=", "after report template name");
        if (peek().kind != Tok::String) fail_here("expected string literal for report message");
        t.message = next().text;
        expect_semi("after report template");
        p.templates.push_back(std::move(t));
      } else if (is_word("on")) {
        p.handlers.push_back(handler());
      } else {
        fail_here("expected 'map', 'alias', 'report' or 'on'");
      }
    }
    next();
    if (peek().kind != Tok::End) fail_here("unexpected input after checker");
    return p;
  }

 private:
  const Token &peek() const { return toks_[i_]; }
  const Token &next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool is(std::string_view punct) const {
    return peek().kind == Tok::Punct && peek().text == punct;
  }
  bool is_word(std::string_view w) const {
    return peek().kind == Tok::Ident && peek().text == w;
  }
  [[noreturn]] void fail_here(const std::string &msg) const {
    throw SyntaxFail{peek().pos, msg + ", found " + describe(peek())};
  }
  void expect(std::string_view punct, const std::string &where) {
    if (!is(punct)) fail_here("expected '" + std::string(punct) + "' " + where);
    next();
  }
  // A missing ';' is reported just past the previous token, where it belongs.
  void expect_semi(const std::string &where) {
    if (!is(";")) {
      const Pos at = i_ > 0 ? toks_[i_ - 1].end : peek().pos;
      throw SyntaxFail{at, "expected ';' " + where + ", found " + describe(peek())};
    }
    next();
  }
  void expect_word(std::string_view w, const std::string &where) {
    if (!is_word(w)) fail_here("expected '" + std::string(w) + "' " + where);
    next();
  }
  std::string ident(const std::string &what) {
    if (peek().kind != Tok::Ident) fail_here("expected " + what);
    return next().text;
  }

  RawMap map_decl() {
    next();
    RawMap m;
    m.pos = peek().pos;
    m.name = ident("map name");
    expect(":", "after map name");
    expect("{", "to open the tag list");
    do {
      const Pos at = peek().pos;
      m.tags.emplace_back(ident("state tag"), at);
      if (!is(",")) break;
      next();
    } while (true);
    expect("}", "to close the tag list");
    expect_semi("after map declaration");
    return m;
  }

  RawHandler handler() {
    RawHandler h;
    h.pos = next().pos;
    h.event_pos = peek().pos;
    h.event = ident("event name after 'on'");
    if (is_word("when")) {
      next();
      for (;;) {
        RawGuard g;
        if (is_word("not") || is("!")) {
          next();
          g.negated = true;
        }
        g.call = term();
        h.guards.push_back(std::move(g));
        if (!is("&&")) break;
        next();
      }
    }
    h.body_pos = peek().pos;
    expect("{", "to open handler body");
    while (!is("}")) {
      if (peek().kind == Tok::End) fail_here("expected '}' to close handler body");
      Term a = term();
      expect_semi("after action");
      h.actions.push_back(std::move(a));
    }
    next();
    return h;
  }

  Term term() {
    Term t;
    t.pos = peek().pos;
    const Token &tok = peek();
    if (tok.kind == Tok::String) {
      t.kind = Term::Kind::String;
      t.text = next().text;
      return t;
    }
    if (tok.kind == Tok::Int) {
      t.kind = Term::Kind::Int;
      t.text = tok.text;
      t.value = std::stoll(next().text);
      return t;
    }
    t.text = ident("identifier, string or integer");
    if (!is("(")) return t;
    t.kind = Term::Kind::Call;
    next();
    if (!is(")")) {
      for (;;) {
        t.args.push_back(term());
        if (!is(",")) break;
        next();
      }
    }
    expect(")", "to close argument list of '" + t.text + "'");
    return t;
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

// --- Validation ---------------------------------------------------------

const std::set<std::string, std::less<>> kRegionWords = {
    "arg_region", "return_region", "base_region", "bind_target", "bind_value"};
const std::set<std::string, std::less<>> kGuardWords = {
    "callee_is", "arg_count", "access_kind", "null_test_on", "state_is", "value_is"};
const std::set<std::string, std::less<>> kActionWords = {
    "set_state", "clear_state", "propagate_alias", "mark_all_aliases", "report"};

bool is_call_event(EventKind e) { return e == EventKind::PreCall || e == EventKind::PostCall; }

class Validator {
 public:
  explicit Validator(std::vector<CdslDiagnostic> &diags) : diags_(diags) {}

  std::optional<CheckerProgram> run(const RawProgram &raw) {
    CheckerProgram p;
    p.name = raw.name;
    p.uses_alias_map = !raw.alias_decls.empty();
    for (std::size_t i = 1; i < raw.alias_decls.size(); ++i) {
      warn("W-DUPLICATE-ALIAS", "'alias' declared more than once", raw.alias_decls[i]);
    }
    for (const auto &m : raw.maps) {
      if (p.find_map(m.name)) {
        error("E-DUPLICATE-MAP", "state map '" + m.name + "' declared twice", m.pos);
        continue;
      }
      StateMap sm{m.name, {}, m.pos};
      for (const auto &[tag, at] : m.tags) {
        if (std::find(sm.tags.begin(), sm.tags.end(), tag) != sm.tags.end()) {
          error("E-DUPLICATE-TAG", "tag '" + tag + "' repeated in map '" + m.name + "'", at);
          continue;
        }
        sm.tags.push_back(tag);
      }
      p.state_maps.push_back(std::move(sm));
    }
    for (const auto &t : raw.templates) {
      if (p.find_template(t.id)) {
        error("E-DUPLICATE-TEMPLATE", "report template '" + t.id + "' declared twice", t.pos);
        continue;
      }
      p.report_templates.push_back(t);
    }
    program_ = &p;
    for (const auto &h : raw.handlers) {
      if (auto handler = validate_handler(h)) p.handlers.push_back(std::move(*handler));
    }
    bool any_report = false;
    for (const auto &h : p.handlers) {
      for (const auto &a : h.actions) any_report |= a.kind == Action::Kind::Report;
    }
    if (!any_report && !has_error()) {
      error("E-NO-REPORT", "checker '" + p.name + "' has no handler that reports",
            raw.name_pos);
    }
    for (const auto &m : p.state_maps) {
      if (!used_maps_.count(m.name)) {
        warn("W-UNUSED-MAP", "state map '" + m.name + "' is never used", m.pos);
      }
    }
    program_ = nullptr;
    if (has_error()) return std::nullopt;
    return p;
  }

 private:
  void error(std::string code, std::string msg, Pos at) {
    diags_.push_back({CdslDiagnostic::Severity::Error, std::move(code), std::move(msg), at});
  }
  void warn(std::string code, std::string msg, Pos at) {
    diags_.push_back({CdslDiagnostic::Severity::Warning, std::move(code), std::move(msg), at});
  }
  bool has_error() const {
    for (const auto &d : diags_) {
      if (d.is_error()) return true;
    }
    return false;
  }

  bool arity(const Term &t, std::size_t n) {
    if (t.kind == Term::Kind::Call && t.args.size() == n) return true;
    error("E-BAD-ARGS",
          "'" + t.text + "' takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"),
          t.pos);
    return false;
  }

  bool word_arg(const Term &t, const std::string &what) {
    if (t.kind == Term::Kind::Ident) return true;
    error("E-BAD-ARGS", "expected " + what, t.pos);
    return false;
  }

  const StateMap *map_ref(const Term &t) {
    if (!word_arg(t, "state map name")) return nullptr;
    const StateMap *m = program_->find_map(t.text);
    if (!m) {
      error("E-UNDECLARED-MAP", "state map '" + t.text + "' is not declared", t.pos);
      return nullptr;
    }
    used_maps_.insert(m->name);
    return m;
  }

  bool tag_ref(const StateMap *m, const Term &t) {
    if (!word_arg(t, "state tag")) return false;
    if (!m) return true;  // already diagnosed
    if (std::find(m->tags.begin(), m->tags.end(), t.text) == m->tags.end()) {
      error("E-UNKNOWN-TAG", "tag '" + t.text + "' is not in map '" + m->name + "'", t.pos);
      return false;
    }
    return true;
  }

  void unavailable(const std::string &what, Pos at) {
    error("E-BINDING-UNAVAILABLE",
          "'" + what + "' is not available in " + std::string(event_keyword(event_)) +
              " handlers",
          at);
  }

  std::optional<RegionExpr> region(const Term &t) {
    RegionExpr r;
    r.pos = t.pos;
    if (t.kind == Term::Kind::String || t.kind == Term::Kind::Int) {
      error("E-BAD-ARGS", "expected a region expression", t.pos);
      return std::nullopt;
    }
    if (t.kind == Term::Kind::Call && !kRegionWords.count(t.text)) {
      error("E-UNKNOWN-REGION", "'" + t.text + "' is not a region expression", t.pos);
      return std::nullopt;
    }
    if (t.text == "arg_region") {
      if (!arity(t, 1)) return std::nullopt;
      if (t.args[0].kind != Term::Kind::Int) {
        error("E-BAD-ARGS", "arg_region expects an argument index", t.args[0].pos);
        return std::nullopt;
      }
      if (!is_call_event(event_)) unavailable("arg_region", t.pos);
      r.kind = RegionExpr::Kind::ArgRegion;
      r.index = static_cast<int>(t.args[0].value);
      return r;
    }
    if (t.kind == Term::Kind::Call && !t.args.empty()) {
      error("E-BAD-ARGS", "'" + t.text + "' takes no arguments", t.pos);
      return std::nullopt;
    }
    if (t.text == "return_region") {
      if (event_ != EventKind::PostCall) unavailable(t.text, t.pos);
      r.kind = RegionExpr::Kind::ReturnRegion;
    } else if (t.text == "base_region") {
      if (event_ != EventKind::Location) unavailable(t.text, t.pos);
      r.kind = RegionExpr::Kind::BaseRegion;
    } else if (t.text == "bind_target" || t.text == "bind_value") {
      if (event_ != EventKind::Bind) unavailable(t.text, t.pos);
      r.kind = t.text == "bind_target" ? RegionExpr::Kind::BindTarget
                                       : RegionExpr::Kind::BindValue;
    } else {
      if (!bound_.count(t.text)) {
        error("E-UNKNOWN-REGION", "'" + t.text + "' is not a region expression or bound name",
              t.pos);
        return std::nullopt;
      }
      r.kind = RegionExpr::Kind::Binding;
      r.name = t.text;
    }
    return r;
  }

  std::optional<Guard> guard(const RawGuard &rg) {
    const Term &t = rg.call;
    Guard g;
    g.negated = rg.negated;
    g.pos = t.pos;
    if (t.kind != Term::Kind::Call || !kGuardWords.count(t.text)) {
      error("E-UNKNOWN-BUILTIN", "'" + t.text + "' is not a guard", t.pos);
      return std::nullopt;
    }
    if (t.text == "callee_is") {
      if (!arity(t, 1)) return std::nullopt;
      if (t.args[0].kind != Term::Kind::String) {
        error("E-BAD-ARGS", "callee_is expects a string literal", t.args[0].pos);
        return std::nullopt;
      }
      if (!is_call_event(event_)) unavailable("callee_is", t.pos);
      g.kind = Guard::Kind::CalleeIs;
      g.text = t.args[0].text;
    } else if (t.text == "arg_count") {
      if (!arity(t, 1)) return std::nullopt;
      if (t.args[0].kind != Term::Kind::Int) {
        error("E-BAD-ARGS", "arg_count expects an integer", t.args[0].pos);
        return std::nullopt;
      }
      if (!is_call_event(event_)) unavailable("arg_count", t.pos);
      g.kind = Guard::Kind::ArgCount;
      g.number = static_cast<int>(t.args[0].value);
    } else if (t.text == "access_kind") {
      if (!arity(t, 1) || !word_arg(t.args[0], "'load' or 'store'")) return std::nullopt;
      if (t.args[0].text != "load" && t.args[0].text != "store") {
        error("E-BAD-ARGS", "access_kind expects 'load' or 'store'", t.args[0].pos);
        return std::nullopt;
      }
      if (event_ != EventKind::Location) unavailable("access_kind", t.pos);
      g.kind = Guard::Kind::AccessKind;
      g.text = t.args[0].text;
    } else if (t.text == "null_test_on") {
      if (!arity(t, 1) || !word_arg(t.args[0], "a name to bind")) return std::nullopt;
      const std::string &name = t.args[0].text;
      if (kRegionWords.count(name) || kGuardWords.count(name) || kActionWords.count(name)) {
        error("E-BAD-ARGS", "'" + name + "' is reserved", t.args[0].pos);
        return std::nullopt;
      }
      if (event_ != EventKind::BranchCondition) unavailable("null_test_on", t.pos);
      g.kind = Guard::Kind::NullTestOn;
      g.text = name;
      if (!g.negated) bound_.insert(name);
    } else if (t.text == "state_is") {
      if (!arity(t, 3)) return std::nullopt;
      const StateMap *m = map_ref(t.args[0]);
      auto r = region(t.args[1]);
      const bool tag_ok = tag_ref(m, t.args[2]);
      if (!m || !r || !tag_ok) return std::nullopt;
      g.kind = Guard::Kind::StateIs;
      g.map = m->name;
      g.region = *r;
      g.tag = t.args[2].text;
    } else {
      if (!arity(t, 1) || !word_arg(t.args[0], "a value class")) return std::nullopt;
      static const std::set<std::string, std::less<>> kClasses = {
          "undefined", "null", "symbol", "concrete", "address"};
      if (!kClasses.count(t.args[0].text)) {
        error("E-BAD-ARGS",
              "value_is expects one of undefined, null, symbol, concrete, address",
              t.args[0].pos);
        return std::nullopt;
      }
      if (event_ != EventKind::Bind) unavailable("value_is", t.pos);
      g.kind = Guard::Kind::ValueIs;
      g.text = t.args[0].text;
    }
    return g;
  }

  std::optional<Action> action(const Term &t) {
    Action a;
    a.pos = t.pos;
    if (t.kind != Term::Kind::Call || !kActionWords.count(t.text)) {
      error("E-UNKNOWN-BUILTIN", "'" + t.text + "' is not an action", t.pos);
      return std::nullopt;
    }
    if (t.text == "set_state" || t.text == "mark_all_aliases") {
      if (!arity(t, 3)) return std::nullopt;
      a.kind = t.text == "set_state" ? Action::Kind::SetState : Action::Kind::MarkAllAliases;
      if (a.kind == Action::Kind::MarkAllAliases && !program_->uses_alias_map) {
        error("E-ALIAS-DISABLED", "mark_all_aliases requires an 'alias;' declaration", t.pos);
      }
      const StateMap *m = map_ref(t.args[0]);
      auto r = region(t.args[1]);
      const bool tag_ok = tag_ref(m, t.args[2]);
      if (!m || !r || !tag_ok) return std::nullopt;
      a.map = m->name;
      a.region = r;
      a.tag = t.args[2].text;
    } else if (t.text == "clear_state") {
      if (!arity(t, 2)) return std::nullopt;
      a.kind = Action::Kind::ClearState;
      const StateMap *m = map_ref(t.args[0]);
      auto r = region(t.args[1]);
      if (!m || !r) return std::nullopt;
      a.map = m->name;
      a.region = r;
    } else if (t.text == "propagate_alias") {
      if (!arity(t, 2)) return std::nullopt;
      a.kind = Action::Kind::PropagateAlias;
      if (!program_->uses_alias_map) {
        error("E-ALIAS-DISABLED", "propagate_alias requires an 'alias;' declaration", t.pos);
      }
      auto lhs = region(t.args[0]);
      auto rhs = region(t.args[1]);
      if (!lhs || !rhs) return std::nullopt;
      a.region = lhs;
      a.source = rhs;
    } else {
      if (t.kind != Term::Kind::Call || t.args.empty() || t.args.size() > 2) {
        error("E-BAD-ARGS", "'report' takes a template name and an optional region", t.pos);
        return std::nullopt;
      }
      a.kind = Action::Kind::Report;
      if (!word_arg(t.args[0], "report template name")) return std::nullopt;
      if (!program_->find_template(t.args[0].text)) {
        error("E-UNKNOWN-TEMPLATE", "report template '" + t.args[0].text + "' is not declared",
              t.args[0].pos);
        return std::nullopt;
      }
      a.template_id = t.args[0].text;
      if (t.args.size() == 2) {
        a.region = region(t.args[1]);
        if (!a.region) return std::nullopt;
      }
    }
    return a;
  }

  std::optional<Handler> validate_handler(const RawHandler &h) {
    auto ev = parse_event_keyword(h.event);
    if (!ev) {
      error("E-UNKNOWN-EVENT", "unknown event '" + h.event + "'", h.event_pos);
      return std::nullopt;
    }
    event_ = *ev;
    bound_.clear();
    Handler out;
    out.event = *ev;
    out.pos = h.pos;
    bool ok = true;
    for (const auto &g : h.guards) {
      auto v = guard(g);
      if (v) {
        out.guards.push_back(std::move(*v));
      } else {
        ok = false;
      }
    }
    if (h.actions.empty()) {
      error("E-EMPTY-ACTIONS", "handler has no actions", h.body_pos);
      ok = false;
    }
    for (const auto &t : h.actions) {
      auto v = action(t);
      if (v) {
        out.actions.push_back(std::move(*v));
      } else {
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::vector<CdslDiagnostic> &diags_;
  const CheckerProgram *program_ = nullptr;
  EventKind event_ = EventKind::PostCall;
  std::set<std::string> bound_;
  std::set<std::string> used_maps_;
};

}  // namespace

ParseResult parse_checker(std::string_view text) {
  ParseResult result;
  RawProgram raw;
  try {
    raw = Parser(lex(text)).run();
  } catch (const SyntaxFail &f) {
    result.diagnostics.push_back(
        {CdslDiagnostic::Severity::Error, "E-SYNTAX", f.message, f.pos});
    return result;
  }
  result.program = Validator(result.diagnostics).run(raw);
  return result;
}

}  // namespace kf::cdsl
