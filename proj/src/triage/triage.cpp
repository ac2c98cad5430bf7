#include "kf/triage/triage.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <regex>
#include <set>

#include <json.hpp>

#include "kf/minilang/parser.hpp"

namespace kf::triage {

using nlohmann::json;

namespace {

// Uniform draw in [0, bound) without modulo bias. std::uniform_int_distribution
// differs between standard libraries, which would break fixed-seed samples.
std::uint64_t uniform_below(std::mt19937_64 &rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

json label_json(const TriageLabel &l) {
  return {{"verdict", std::string(verdict_name(l.verdict))}, {"rationale", l.rationale}};
}

}  // namespace

DistilledReport distill(const engine::Report &report, const std::filesystem::path &corpus_root,
                        std::size_t index) {
  const auto path = corpus_root / report.span.file;
  if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
  const auto lines = split_lines(read_file(path));

  DistilledReport d;
  d.checker = report.checker;
  d.file = report.span.file;
  d.index = index;
  d.message = report.message;
  d.span = report.span;
  d.trace = report.trace;
  std::vector<int> order;
  for (const auto &step : report.trace) order.push_back(step.span.start_line);
  order.push_back(report.span.start_line);
  std::set<int> seen;
  for (int line : order) {
    if (line < 1 || line > static_cast<int>(lines.size()) || !seen.insert(line).second) continue;
    d.relevant_lines.emplace_back(line, trim(lines[static_cast<std::size_t>(line - 1)]));
  }
  return d;
}

std::string render(const DistilledReport &d) {
  std::string out = "Checker: " + d.checker + "\n";
  out += "Report: " + d.file + ":" + std::to_string(d.span.start_line) + ":" +
         std::to_string(d.span.start_col) + ": " + d.message + "\n";
  out += "Relevant lines:\n";
  for (const auto &[n, text] : d.relevant_lines) out += std::to_string(n) + ": " + text + "\n";
  out += "Trace:\n";
  for (const auto &t : d.trace) {
    out += std::to_string(t.span.start_line) + ":" + std::to_string(t.span.start_col) + ": " +
           t.note + "\n";
  }
  return out;
}

std::string render_all(const std::vector<DistilledReport> &cases) {
  std::string out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (i) out += "\n";
    out += render(cases[i]);
  }
  return out;
}

std::string_view verdict_name(Verdict v) { return v == Verdict::Bug ? "bug" : "not_a_bug"; }

std::optional<Verdict> parse_verdict_name(std::string_view s) {
  if (s == "bug") return Verdict::Bug;
  if (s == "not_a_bug") return Verdict::NotABug;
  return std::nullopt;
}

std::optional<TriageLabel> parse_triage_response(const std::string &text) {
  static const std::regex kVerdict(R"(^\s*VERDICT\s*:\s*(bug|not_a_bug)\s*$)", std::regex::icase);
  static const std::regex kRationale(R"(^\s*RATIONALE\s*:\s*(.*\S)\s*$)", std::regex::icase);
  std::optional<Verdict> verdict;
  std::string rationale;
  for (const auto &line : split_lines(text)) {
    std::smatch m;
    if (!verdict && std::regex_match(line, m, kVerdict)) {
      std::string v = m[1].str();
      std::transform(v.begin(), v.end(), v.begin(), ::tolower);
      verdict = parse_verdict_name(v);
    } else if (rationale.empty() && std::regex_match(line, m, kRationale)) {
      rationale = m[1].str();
    }
  }
  if (!verdict || rationale.empty()) return std::nullopt;
  return TriageLabel{*verdict, rationale};
}

TriageLabel triage(const DistilledReport &d, const std::string &pattern, llm::Gateway &gateway) {
  const std::string report = render(d);
  for (int attempt = 0; attempt < 2; ++attempt) {
    llm::PromptInputs inputs = {{"report", report}, {"pattern", pattern}};
    if (attempt) inputs["retry"] = std::to_string(attempt);
    if (auto label = parse_triage_response(gateway.complete(llm::AgentRole::TriageAnalyst, inputs))) {
      return *label;
    }
  }
  return {Verdict::Bug, "No usable verdict from the agent; kept as a bug."};
}

void PlausibilityConfig::check() const {
  if (t_plausible < 1 || sample_size < 1 || max_sample_fp < 0 || sample_size < max_sample_fp) {
    throw PreconditionViolation("invalid plausibility configuration");
  }
}

std::vector<std::size_t> sample_indices(std::size_t n, const PlausibilityConfig &config) {
  config.check();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(config.sample_seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[uniform_below(rng, i)]);
  }
  perm.resize(std::min(n, static_cast<std::size_t>(config.sample_size)));
  return perm;
}

PlausibilityDecision assess_plausibility(const scan::ScanResult &scan,
                                         const std::vector<TriageLabel> &labels,
                                         const PlausibilityConfig &config) {
  config.check();
  PlausibilityDecision d;
  if (scan.reports.size() < static_cast<std::size_t>(config.t_plausible)) {
    d.plausible = true;
    return d;
  }
  d.sampled = true;
  d.sample = sample_indices(scan.reports.size(), config);
  if (labels.size() != d.sample.size()) {
    throw PreconditionViolation("expected " + std::to_string(d.sample.size()) +
                                " labels for the sample, got " + std::to_string(labels.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].verdict == Verdict::NotABug) d.fp_indices.push_back(d.sample[i]);
  }
  d.plausible = d.fp_indices.size() <= static_cast<std::size_t>(config.max_sample_fp);
  return d;
}

int reports_on_fp_functions(const cdsl::CheckerProgram &checker,
                            const std::vector<DistilledReport> &fp_cases,
                            const std::filesystem::path &corpus_root,
                            const engine::EngineBudget &budget) {
  const auto hooks = cdsl::instantiate_hooks(checker);
  std::map<std::string, std::set<int>> lines_by_file;
  for (const auto &c : fp_cases) lines_by_file[c.file].insert(c.span.start_line);
  int total = 0;
  for (const auto &[file, lines] : lines_by_file) {
    const auto path = corpus_root / file;
    if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
    const auto module = minilang::parse_module(read_file(path), file);
    for (const auto &fn : module.functions) {
      const bool hit = std::any_of(lines.begin(), lines.end(), [&](int l) {
        return fn.span.start_line <= l && l <= fn.span.end_line;
      });
      if (hit) total += static_cast<int>(engine::analyze_function(fn, *hooks, budget).reports.size());
    }
  }
  return total;
}

RefinementOutcome refine(const cdsl::CheckerProgram &checker,
                         const std::vector<DistilledReport> &fp_cases,
                         const patch::PatchCommit &commit,
                         const std::filesystem::path &corpus_root, llm::Gateway &gateway,
                         const pipeline::SynthesisConfig &config, int max_iterations) {
  if (fp_cases.empty()) throw PreconditionViolation("refinement needs at least one fp case");
  if (max_iterations < 1) throw PreconditionViolation("refinement needs at least one iteration");
  RefinementOutcome out;
  out.final_checker = checker;
  out.final_text = cdsl::pretty_print(checker);
  out.fp_cases = fp_cases;
  const std::string cases = render_all(fp_cases);

  for (int i = 1; i <= max_iterations; ++i) {
    RefinementIteration step;
    step.index = i;
    out.iterations_used = i;
    try {
      const std::string text = llm::extract_checker_text(gateway.complete(
          llm::AgentRole::Refiner,
          {{"checker", out.final_text}, {"fp_cases", cases}, {"iteration", std::to_string(i)}}));
      step.candidate_digest = sha256_hex(text);
      auto parsed = cdsl::parse_checker(text);
      if (!parsed.ok()) {
        step.reason = "candidate does not compile: " + parsed.error_text();
      } else {
        step.parsed = true;
        step.fp_reports =
            reports_on_fp_functions(*parsed.program, fp_cases, corpus_root, config.budget);
        step.verdict = pipeline::validate_checker(*parsed.program, commit, corpus_root, config);
        if (step.fp_reports != 0) {
          step.reason = "still reports on the false-positive functions";
        } else if (!step.verdict->valid) {
          step.reason = "no longer valid on the original patch";
        } else {
          step.accepted = true;
          out.accepted = true;
          out.final_checker = *parsed.program;
          out.final_text = cdsl::pretty_print(*parsed.program);
        }
      }
    } catch (const Error &e) {
      if (dynamic_cast<const ProviderUnavailable *>(&e)) throw;
      step.reason = e.kind() + ": " + e.what();
    }
    out.iterations.push_back(step);
    if (out.accepted) break;
  }
  return out;
}

TriageMetrics metrics_from_counts(int tp, int fp, int tn, int fn) {
  TriageMetrics m{tp, fp, tn, fn, std::nullopt, std::nullopt, std::nullopt};
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / (tp + fp);
    m.fp_rate = static_cast<double>(fp) / (tp + fp);
  }
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  return m;
}

TriageMetrics compute_metrics(const std::vector<Verdict> &truth,
                              const std::vector<Verdict> &agent) {
  if (truth.size() != agent.size()) {
    throw PreconditionViolation("label lists differ in length");
  }
  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool real = truth[i] == Verdict::Bug;
    const bool said = agent[i] == Verdict::Bug;
    if (said && real) ++tp;
    if (said && !real) ++fp;
    if (!said && !real) ++tn;
    if (!said && real) ++fn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

std::string triage_json(const std::string &checker, const std::vector<DistilledReport> &reports,
                        const std::vector<TriageLabel> &labels,
                        const PlausibilityDecision &decision) {
  json entries = json::array();
  for (std::size_t i = 0; i < reports.size() && i < labels.size(); ++i) {
    json e = label_json(labels[i]);
    e["index"] = reports[i].index;
    e["file"] = reports[i].file;
    e["line"] = reports[i].span.start_line;
    e["col"] = reports[i].span.start_col;
    e["message"] = reports[i].message;
    entries.push_back(e);
  }
  const json j = {{"schema_version", 1},
                  {"checker", checker},
                  {"plausible", decision.plausible},
                  {"sampled", decision.sampled},
                  {"sample", decision.sample},
                  {"fp_indices", decision.fp_indices},
                  {"labels", entries}};
  return j.dump(2) + "\n";
}

std::string refinement_json(const RefinementOutcome &o) {
  json iterations = json::array();
  for (const auto &s : o.iterations) {
    iterations.push_back(
        {{"index", s.index},
         {"candidate_digest", s.candidate_digest},
         {"parsed", s.parsed},
         {"fp_reports", s.fp_reports},
         {"verdict", s.verdict ? json::parse(pipeline::verdict_json(*s.verdict)) : json(nullptr)},
         {"accepted", s.accepted},
         {"reason", s.reason}});
  }
  json cases = json::array();
  for (const auto &c : o.fp_cases) {
    cases.push_back({{"file", c.file}, {"line", c.span.start_line}, {"col", c.span.start_col},
                     {"message", c.message}});
  }
  const json j = {{"schema_version", 1},
                  {"accepted", o.accepted},
                  {"iterations_used", o.iterations_used},
                  {"fp_cases", cases},
                  {"iterations", iterations},
                  {"final_checker_digest", sha256_hex(o.final_text)}};
  return j.dump(2) + "\n";
}

}  // namespace kf::triage
