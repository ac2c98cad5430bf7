#include <algorithm>
#include <regex>

#include "kf/cdsl/program.hpp"
#include "kf/llm/gateway.hpp"

namespace kf::detail {
const std::vector<std::pair<std::string, std::string>> &embedded_files();
}

namespace kf::llm {

namespace {

constexpr std::string_view kRoleNames[] = {"PatternAnalyst", "Planner",       "Implementer",
                                           "SyntaxRepairer", "TriageAnalyst", "Refiner"};

const std::string &embedded(const std::string &path) {
  for (const auto &[name, body] : detail::embedded_files()) {
    if (name == path) return body;
  }
  throw FileNotFound("embedded data file " + path);
}

std::string embedded_corpus_file(const std::string &exemplar, std::string &path_out) {
  const std::string prefix = "exemplars/" + exemplar + "/corpus/";
  for (const auto &[name, body] : detail::embedded_files()) {
    if (starts_with(name, prefix)) {
      path_out = name.substr(prefix.size());
      return body;
    }
  }
  throw FileNotFound("embedded corpus for exemplar " + exemplar);
}

struct RoleSpec {
  std::vector<std::string> required;
  std::string instructions;
};

const RoleSpec &spec_for(AgentRole role) {
  static const std::map<AgentRole, RoleSpec> kSpecs = {
      {AgentRole::PatternAnalyst,
       {{"patch", "function_contexts"},
        "You are reviewing a patch that fixes a bug in C-like kernel code. Work out the\n"
        "bug pattern the patch removes, narrowly enough that a static checker can look\n"
        "for it without drowning in false alarms. Answer with exactly these lines:\n"
        "Category: <one of NPD, Integer-Overflow, Out-of-Bound, Buffer-Overflow,\n"
        "  Memory-Leak, Use-After-Free, Double-Free, UBI, Concurrency, Misuse>\n"
        "Callees: <comma-separated functions central to the pattern>\n"
        "Pattern: <one paragraph>\n"
        "Scope: <why the pattern is this narrow and not narrower or wider>"}},
      {AgentRole::Planner,
       {{"patch", "pattern"},
        "Turn the bug pattern into a detection plan for an event-driven checker.\n"
        "Start with a `Maps:` line declaring each state map and its tags, then one\n"
        "`Step: <event> | <state transition> | <report condition>` line per handler.\n"
        "Events are post_call, pre_call, branch_condition, location, bind and\n"
        "end_function. Use only the utility functions listed below."}},
      {AgentRole::Implementer,
       {{"patch", "pattern", "plan"},
        "Implement the plan as a CDSL checker. Start from the template, declare every\n"
        "state map you use, and emit only the checker source."}},
      {AgentRole::SyntaxRepairer,
       {{"checker", "diagnostics"},
        "The checker below does not compile. Fix exactly the reported problems and\n"
        "return the whole corrected checker source and nothing else."}},
      {AgentRole::TriageAnalyst,
       {{"report", "pattern"},
        "Decide whether the report below shows the same bug pattern as the original\n"
        "patch. Do not judge general code quality. Answer with two lines:\n"
        "VERDICT: bug | not_a_bug\n"
        "RATIONALE: <one sentence>"}},
      {AgentRole::Refiner,
       {{"checker", "fp_cases"},
        "The checker reports the false positives listed below. Change it so none of\n"
        "them is reported while the original bug is still caught. Return the whole\n"
        "checker source and nothing else."}},
  };
  return kSpecs.at(role);
}

bool wants_exemplars(AgentRole role) {
  return role == AgentRole::PatternAnalyst || role == AgentRole::Planner ||
         role == AgentRole::Implementer;
}

void append_section(std::string &out, const std::string &title, const std::string &body) {
  out += "## " + title + "\n" + body;
  if (body.empty() || body.back() != '\n') out += "\n";
  out += "\n";
}

std::string render_exemplars(AgentRole role) {
  std::string out;
  int n = 0;
  for (const auto &ex : exemplar_set()) {
    out += "### Example " + std::to_string(++n) + " (" +
           std::string(category_label(ex.category)) + ")\n";
    if (role == AgentRole::PatternAnalyst || role == AgentRole::Planner) {
      out += "Patch:\n" + ex.message + "\n" + ex.patch + "\n";
      out += "Pattern:\n" + ex.pattern + "\n";
    }
    if (role == AgentRole::Planner || role == AgentRole::Implementer) {
      out += "Plan:\n" + ex.plan + "\n";
    }
    if (role == AgentRole::Implementer) out += "Checker:\n" + ex.checker + "\n";
  }
  return out;
}

}  // namespace

std::string_view role_name(AgentRole role) { return kRoleNames[static_cast<int>(role)]; }

std::optional<AgentRole> parse_role(std::string_view name) {
  for (int i = 0; i < 6; ++i) {
    if (kRoleNames[i] == name) return static_cast<AgentRole>(i);
  }
  return std::nullopt;
}

PromptBundle render_prompt(AgentRole role, const PromptInputs &inputs) {
  const RoleSpec &spec = spec_for(role);
  for (const auto &key : spec.required) {
    if (!inputs.count(key)) throw MissingInput(key);
  }
  std::string text = "# Role: " + std::string(role_name(role)) + "\n\n" + spec.instructions +
                     "\n\n";
  if (wants_exemplars(role)) append_section(text, "Examples", render_exemplars(role));
  if (role == AgentRole::Planner || role == AgentRole::Implementer) {
    append_section(text, "Utility functions", cdsl::render_catalog());
  }
  if (role == AgentRole::Implementer) append_section(text, "Checker template", checker_template());
  for (const auto &key : spec.required) append_section(text, "Input: " + key, inputs.at(key));
  std::string context;
  for (const auto &[key, value] : inputs) {
    if (std::find(spec.required.begin(), spec.required.end(), key) != spec.required.end()) {
      continue;
    }
    context += key + ": " + value + "\n";
  }
  if (!context.empty()) append_section(text, "Context", context);

  PromptBundle b;
  b.role = role;
  b.rendered_text = std::move(text);
  b.inputs_digest = sha256_hex(b.rendered_text);
  b.inputs = inputs;
  return b;
}

std::string render_function_contexts(const std::vector<patch::FunctionContext> &contexts) {
  std::string out;
  for (const auto &c : contexts) {
    out += "#### pre-patch " + c.path + " " + c.function_name + "\n" + c.pre_source;
    if (!c.pre_source.empty() && c.pre_source.back() != '\n') out += "\n";
    out += "#### post-patch " + c.path + " " + c.function_name + "\n" + c.post_source;
    if (!c.post_source.empty() && c.post_source.back() != '\n') out += "\n";
  }
  return out;
}

const std::vector<Exemplar> &exemplar_set() {
  static const std::vector<Exemplar> kSet = [] {
    struct Seed {
      const char *name;
      BugCategory category;
      const char *callee;
    };
    const Seed seeds[] = {{"npd", BugCategory::NullPointerDereference, "devm_kzalloc"},
                          {"ubi", BugCategory::UseBeforeInitialization, "kfree"},
                          {"double_free", BugCategory::DoubleFree, "kfree"}};
    std::vector<Exemplar> out;
    for (const auto &s : seeds) {
      const std::string dir = std::string("exemplars/") + s.name + "/";
      Exemplar e;
      e.name = s.name;
      e.category = s.category;
      e.key_callee = s.callee;
      e.message = embedded(dir + "message.txt");
      e.patch = embedded(dir + "patch.diff");
      e.pattern = embedded(dir + "pattern.md");
      e.plan = embedded(dir + "plan.md");
      e.checker = embedded(dir + "checker.cdsl");
      e.post_source = embedded_corpus_file(s.name, e.source_path);
      out.push_back(std::move(e));
    }
    return out;
  }();
  return kSet;
}

const Exemplar *find_exemplar(BugCategory category) {
  for (const auto &e : exemplar_set()) {
    if (e.category == category) return &e;
  }
  return nullptr;
}

const std::string &checker_template() { return embedded("templates/checker_template.cdsl"); }

PatternFields parse_pattern_text(const std::string &text) {
  PatternFields f;
  static const std::regex kLine(R"(^\s*(Category|Callees|Pattern|Scope)\s*:\s*(.*)$)");
  for (const auto &line : split_lines(text)) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    const std::string key = m[1].str();
    const std::string value = trim(m[2].str());
    if (key == "Category") {
      f.category = parse_category(value);
    } else if (key == "Callees") {
      std::string cur;
      for (char c : value + ",") {
        if (c == ',') {
          if (!trim(cur).empty()) f.callees.push_back(trim(cur));
          cur.clear();
        } else {
          cur += c;
        }
      }
    } else if (key == "Pattern") {
      f.narrative = value;
    } else {
      f.scope = value;
    }
  }
  return f;
}

std::string extract_checker_text(const std::string &response) {
  const auto open = response.find("```");
  if (open == std::string::npos) return response;
  const auto body = response.find('\n', open);
  if (body == std::string::npos) return response;
  const auto close = response.find("```", body + 1);
  return response.substr(body + 1, close == std::string::npos ? std::string::npos
                                                              : close - body - 1);
}

}  // namespace kf::llm
