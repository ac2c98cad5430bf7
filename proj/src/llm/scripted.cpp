// Deterministic stand-in for the agents. Every answer is derived from the
// prompt inputs with fixed text rules, so runs are reproducible and the
// pipeline can be tested without a model.

#include <algorithm>
#include <regex>
#include <set>

#include "kf/cdsl/program.hpp"
#include "kf/llm/gateway.hpp"

namespace kf::llm {

namespace {

std::string input(const PromptBundle &b, const std::string &key) {
  auto it = b.inputs.find(key);
  if (it == b.inputs.end()) throw MissingInput(key);
  return it->second;
}

/// Pre- or post-patch halves of a rendered function-context block.
std::string context_half(const std::string &contexts, bool pre) {
  const std::string want = pre ? "#### pre-patch " : "#### post-patch ";
  std::string out;
  bool on = false;
  for (const auto &line : split_lines(contexts)) {
    if (starts_with(line, "#### ")) {
      on = starts_with(line, want);
      continue;
    }
    if (on) out += line + "\n";
  }
  return out;
}

std::string replace_all(std::string text, const std::string &from, const std::string &to) {
  if (from.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string npd_pattern(const std::string &callee) {
  return "Category: NPD\n"
         "Callees: " + callee + "\n"
         "Pattern: The pointer returned by " + callee +
         "() is dereferenced on a path where it was never compared against NULL.\n"
         "Scope: Only return values of " + callee +
         " are tracked; callers of other allocators are left alone.\n";
}

std::string ubi_pattern(const std::string &callee) {
  return "Category: UBI\n"
         "Callees: " + callee + "\n"
         "Pattern: A local pointer declared without an initializer reaches " + callee +
         "() on a path that never assigned it.\n"
         "Scope: Only pointers passed to " + callee + " are tracked.\n";
}

std::string df_pattern(const std::string &callee) {
  return "Category: Double-Free\n"
         "Callees: " + callee + "\n"
         "Pattern: The same object is passed to " + callee + "() twice along one path.\n"
         "Scope: Only " + callee + " is tracked.\n";
}

std::string analyze_patch(const std::string &patch_text, const std::string &contexts) {
  const patch::PatchCommit commit = patch::parse_patch(patch_text);
  std::vector<std::string> added;
  std::vector<std::string> removed;
  for (const auto &fd : commit.file_diffs) {
    for (const auto &h : fd.hunks) {
      for (const auto &l : h.lines) {
        if (l.kind == patch::LineKind::Added) added.push_back(l.text);
        if (l.kind == patch::LineKind::Removed) removed.push_back(l.text);
      }
    }
  }
  const std::string pre = context_half(contexts, true);

  // An added null test on a variable that the pre-patch code assigns from a call.
  static const std::regex kNullTest(
      R"(\bif\s*\(\s*(?:!\s*(\w+)|(\w+)\s*==\s*NULL|NULL\s*==\s*(\w+))\s*\))");
  for (const auto &line : added) {
    std::smatch m;
    if (!std::regex_search(line, m, kNullTest)) continue;
    const std::string var = m[1].matched ? m[1].str() : m[2].matched ? m[2].str() : m[3].str();
    const std::regex assign("\\b" + var + R"(\s*=\s*(\w+)\s*\()");
    std::smatch a;
    if (std::regex_search(pre, a, assign)) return npd_pattern(a[1].str());
  }

  // A pointer declaration that gains a NULL initializer.
  static const std::regex kBareDecl(R"(^\s*(?:int|void)\s*\*+\s*(\w+)\s*;\s*$)");
  for (const auto &line : removed) {
    std::smatch m;
    if (!std::regex_match(line, m, kBareDecl)) continue;
    const std::string var = m[1].str();
    const std::regex init(R"(^\s*(?:int|void)\s*\*+\s*)" + var + R"(\s*=\s*(?:NULL|0)\s*;)");
    const bool initialized = std::any_of(added.begin(), added.end(), [&](const std::string &a) {
      return std::regex_search(a, init);
    });
    if (!initialized) continue;
    const std::regex freed(R"((\w*free\w*)\s*\(\s*)" + var + R"(\s*\))");
    std::smatch f;
    if (std::regex_search(pre, f, freed)) return ubi_pattern(f[1].str());
  }

  // The same object released twice in the pre-patch function.
  static const std::regex kFree(R"((\w*free\w*)\s*\(\s*([\w>-]+)\s*\))");
  std::map<std::pair<std::string, std::string>, int> seen;
  for (auto it = std::sregex_iterator(pre.begin(), pre.end(), kFree); it != std::sregex_iterator();
       ++it) {
    const auto key = std::make_pair((*it)[1].str(), (*it)[2].str());
    if (++seen[key] == 2) return df_pattern(key.first);
  }

  throw UnsupportedPattern("no known bug pattern matches the patch");
}

const Exemplar &exemplar_for_pattern(const std::string &pattern, std::string &callee) {
  const PatternFields f = parse_pattern_text(pattern);
  if (!f.category) throw UnsupportedPattern("pattern has no recognizable category");
  const Exemplar *ex = find_exemplar(*f.category);
  if (!ex) {
    throw UnsupportedPattern("no template for category " +
                             std::string(category_label(*f.category)));
  }
  callee = f.callees.empty() ? ex->key_callee : f.callees.front();
  return *ex;
}

// --- Faults and repairs ---------------------------------------------------

std::size_t offset_of(const std::string &text, int line, int col) {
  std::size_t pos = 0;
  for (int l = 1; l < line && pos != std::string::npos; ++l) {
    pos = text.find('\n', pos);
    if (pos != std::string::npos) ++pos;
  }
  if (pos == std::string::npos) return text.size();
  return std::min(text.size(), pos + static_cast<std::size_t>(std::max(col - 1, 0)));
}

std::string inject_fault(const std::string &text, int n) {
  if (n % 2 == 1) {
    // Drop the terminator of the first action.
    const auto pos = text.find(");\n    ");
    const auto first = text.find(");\n", text.find(" {\n    "));
    const auto at = first != std::string::npos ? first : pos;
    if (at != std::string::npos) return text.substr(0, at + 1) + text.substr(at + 2);
    return text + "\n}";
  }
  // Misspell the map named by the first set_state.
  static const std::regex kSet(R"(set_state\(\s*(\w+))");
  std::smatch m;
  if (std::regex_search(text, m, kSet) && m[1].length() > 1) {
    const auto at = static_cast<std::size_t>(m.position(1));
    return text.substr(0, at) + m[1].str().substr(0, m[1].length() - 1) +
           text.substr(at + m[1].length());
  }
  return "checker broken {";
}

std::size_t edit_distance(const std::string &a, const std::string &b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string closest(const std::string &word, const std::vector<std::string> &choices) {
  std::string best = word;
  std::size_t best_d = std::string::npos;
  for (const auto &c : choices) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

std::string replace_word_at(const std::string &text, std::size_t at, const std::string &with) {
  std::size_t end = at;
  while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) ||
                               text[end] == '_')) {
    ++end;
  }
  return text.substr(0, at) + with + text.substr(end);
}

std::string repair(std::string text, const std::string &diagnostics) {
  static const std::regex kDiag(R"(^(E-[A-Z-]+): (.*) at (\d+):(\d+)\s*$)");
  struct Fix {
    std::size_t at;
    std::string code;
    std::string message;
  };
  std::vector<Fix> fixes;
  for (const auto &line : split_lines(diagnostics)) {
    std::smatch m;
    if (!std::regex_match(line, m, kDiag)) continue;
    fixes.push_back({offset_of(text, std::stoi(m[3].str()), std::stoi(m[4].str())), m[1].str(),
                     m[2].str()});
  }
  // Later positions first so earlier offsets stay valid.
  std::sort(fixes.begin(), fixes.end(), [](const Fix &a, const Fix &b) { return a.at > b.at; });

  std::vector<std::string> maps;
  std::map<std::string, std::vector<std::string>> tags;
  static const std::regex kMap(R"(map\s+(\w+)\s*:\s*\{([^}]*)\})");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kMap);
       it != std::sregex_iterator(); ++it) {
    maps.push_back((*it)[1].str());
    std::string cur;
    for (char c : (*it)[2].str() + ",") {
      if (c == ',') {
        if (!trim(cur).empty()) tags[(*it)[1].str()].push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
  }

  static const std::regex kQuoted(R"('([^']*)')");
  for (const auto &f : fixes) {
    std::vector<std::string> names;
    for (auto it = std::sregex_iterator(f.message.begin(), f.message.end(), kQuoted);
         it != std::sregex_iterator(); ++it) {
      names.push_back((*it)[1].str());
    }
    if (f.code == "E-SYNTAX" && starts_with(f.message, "expected ';'")) {
      text.insert(f.at, ";");
    } else if (f.code == "E-UNDECLARED-MAP" && !names.empty() && !maps.empty()) {
      text = replace_word_at(text, f.at, closest(names[0], maps));
    } else if (f.code == "E-UNKNOWN-TAG" && names.size() >= 2 && tags.count(names[1])) {
      text = replace_word_at(text, f.at, closest(names[0], tags[names[1]]));
    }
  }
  return text;
}

// --- Triage and refinement -------------------------------------------------

struct DistilledView {
  std::vector<std::string> relevant;  // source text, trace order
  std::string report_line;
};

std::vector<DistilledView> parse_distilled(const std::string &text) {
  std::vector<DistilledView> out;
  static const std::regex kRelevant(R"(^\s*(\d+): ?(.*)$)");
  bool in_relevant = false;
  for (const auto &line : split_lines(text)) {
    if (starts_with(line, "Checker:")) {
      out.emplace_back();
      in_relevant = false;
      continue;
    }
    if (starts_with(line, "Relevant lines:")) {
      if (out.empty()) out.emplace_back();
      in_relevant = true;
      continue;
    }
    if (starts_with(line, "Trace:")) {
      in_relevant = false;
      continue;
    }
    std::smatch m;
    if (in_relevant && std::regex_match(line, m, kRelevant)) {
      out.back().relevant.push_back(m[2].str());
    }
  }
  for (auto &d : out) {
    if (!d.relevant.empty()) d.report_line = d.relevant.back();
  }
  return out;
}

std::string verdict(bool bug, const std::string &why) {
  return std::string("VERDICT: ") + (bug ? "bug" : "not_a_bug") + "\nRATIONALE: " + why + "\n";
}

std::string triage(const std::string &report, const std::string &pattern) {
  const PatternFields f = parse_pattern_text(pattern);
  const auto views = parse_distilled(report);
  if (views.empty() || views.front().relevant.empty()) {
    return verdict(true, "The report carries no source lines; keeping it.");
  }
  const DistilledView &v = views.front();
  if (f.category == BugCategory::NullPointerDereference) {
    for (const auto &c : f.callees) {
      if (v.relevant.front().find(c) != std::string::npos) {
        return verdict(true, "The dereferenced pointer comes straight from " + c +
                                 "() and is never tested against NULL.");
      }
    }
    return verdict(false, "The pointer does not originate from the allocator named in the "
                          "pattern.");
  }
  if (f.category == BugCategory::UseBeforeInitialization) {
    static const std::regex kCall(R"((\w+)\s*\(\s*(\w+)\s*\))");
    std::smatch m;
    std::string var;
    if (std::regex_search(v.report_line, m, kCall)) var = m[2].str();
    static const std::regex kBranch(R"(^\s*(\}\s*)?(if|else|while|return|goto)\b)");
    bool branchy = false;
    bool assigned = false;
    const std::regex assign("^\\s*" + (var.empty() ? std::string("\\w+") : var) +
                            R"(\s*=[^=])");
    for (const auto &line : v.relevant) {
      branchy |= std::regex_search(line, kBranch);
      assigned |= std::regex_search(line, assign);
    }
    if (assigned && !branchy) {
      return verdict(false, "The pointer is assigned unconditionally before the call and no "
                            "path skips the assignment.");
    }
    return verdict(true, "A path reaches the call without assigning the pointer.");
  }
  return verdict(true, "The report matches the pattern described by the patch.");
}

std::string refine(const std::string &checker, const std::string &fp_cases) {
  auto parsed = cdsl::parse_checker(checker);
  if (!parsed.ok()) return checker;
  static const std::regex kCall(R"(\b(\w+)\s*\()");
  static const std::set<std::string> kKeywords = {"if", "while", "return"};
  std::vector<std::string> excluded;
  for (const auto &v : parse_distilled(fp_cases)) {
    if (v.relevant.empty()) continue;
    const std::string &first = v.relevant.front();
    for (auto it = std::sregex_iterator(first.begin(), first.end(), kCall);
         it != std::sregex_iterator(); ++it) {
      const std::string name = (*it)[1].str();
      if (kKeywords.count(name)) continue;
      if (std::find(excluded.begin(), excluded.end(), name) == excluded.end()) {
        excluded.push_back(name);
      }
      break;
    }
  }
  cdsl::CheckerProgram p = *parsed.program;
  for (auto &h : p.handlers) {
    if (h.event != cdsl::EventKind::PostCall) continue;
    for (const auto &name : excluded) {
      const bool present = std::any_of(h.guards.begin(), h.guards.end(), [&](const auto &g) {
        return g.kind == cdsl::Guard::Kind::CalleeIs && g.negated && g.text == name;
      });
      if (present) continue;
      cdsl::Guard g;
      g.kind = cdsl::Guard::Kind::CalleeIs;
      g.negated = true;
      g.text = name;
      h.guards.push_back(g);
    }
  }
  return cdsl::pretty_print(p);
}

}  // namespace

ScriptedProvider::ScriptedProvider(ScriptedOptions options)
    : faults_remaining_(std::max(0, options.faults)) {}

int ScriptedProvider::faults_remaining() const {
  std::lock_guard<std::mutex> lock(mu_);
  return faults_remaining_;
}

bool ScriptedProvider::take_fault() {
  std::lock_guard<std::mutex> lock(mu_);
  if (faults_remaining_ == 0) return false;
  --faults_remaining_;
  ++faults_emitted_;
  return true;
}

std::string ScriptedProvider::complete(const PromptBundle &b) {
  switch (b.role) {
    case AgentRole::PatternAnalyst:
      return analyze_patch(input(b, "patch"), input(b, "function_contexts"));
    case AgentRole::Planner: {
      std::string callee;
      const Exemplar &ex = exemplar_for_pattern(input(b, "pattern"), callee);
      return replace_all(ex.plan, ex.key_callee, callee);
    }
    case AgentRole::Implementer:
    case AgentRole::SyntaxRepairer: {
      std::string text;
      if (b.role == AgentRole::Implementer) {
        std::string callee;
        const Exemplar &ex = exemplar_for_pattern(input(b, "pattern"), callee);
        text = replace_all(ex.checker, ex.key_callee, callee);
      } else {
        text = repair(input(b, "checker"), input(b, "diagnostics"));
      }
      if (take_fault()) {
        int n;
        {
          std::lock_guard<std::mutex> lock(mu_);
          n = faults_emitted_;
        }
        text = inject_fault(text, n);
      }
      return text;
    }
    case AgentRole::TriageAnalyst:
      return triage(input(b, "report"), input(b, "pattern"));
    case AgentRole::Refiner:
      return refine(input(b, "checker"), input(b, "fp_cases"));
  }
  return {};
}

}  // namespace kf::llm
