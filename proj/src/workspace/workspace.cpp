#include "kf/workspace/workspace.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

#include "kf/scan/scanner.hpp"

namespace kf::workspace {

using nlohmann::json;

namespace {

constexpr std::string_view kBucketNames[] = {"invalid", "direct", "refined", "fail"};

std::optional<Bucket> parse_bucket(std::string_view s) {
  for (int i = 0; i < 4; ++i) {
    if (kBucketNames[i] == s) return static_cast<Bucket>(i);
  }
  return std::nullopt;
}

json row_json(const MetricsRow &r) {
  return {{"total", r.total}, {"valid", r.valid()}, {"invalid", r.invalid},
          {"direct", r.direct}, {"refined", r.refined}, {"fail", r.fail}};
}

json optional_ratio(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

void add_to_row(MetricsRow &row, Bucket b) {
  ++row.total;
  switch (b) {
    case Bucket::Invalid: ++row.invalid; break;
    case Bucket::Direct: ++row.direct; break;
    case Bucket::Refined: ++row.refined; break;
    case Bucket::Fail: ++row.fail; break;
  }
}

}  // namespace

void WorkspaceLayout::create() const {
  for (const auto &d : {commits(), corpus(), checkers(), reports(), cassettes(), metrics()}) {
    std::filesystem::create_directories(d);
  }
}

std::string_view bucket_name(Bucket b) { return kBucketNames[static_cast<int>(b)]; }

std::shared_ptr<llm::Provider> make_provider(const RunConfig &config,
                                             const WorkspaceLayout &layout) {
  const auto cassette = layout.root / config.cassette;
  auto live = [&]() -> std::shared_ptr<llm::Provider> {
    llm::LiveOptions o;
    o.endpoint = config.endpoint;
    o.model = config.model;
    if (const char *key = std::getenv(config.api_key_env.c_str())) o.api_key = key;
    return std::make_shared<llm::LiveProvider>(o);
  };
  auto scripted = [&]() -> std::shared_ptr<llm::Provider> {
    return std::make_shared<llm::ScriptedProvider>(llm::ScriptedOptions{config.faults});
  };
  if (config.provider == "scripted") return scripted();
  if (config.provider == "replay") return std::make_shared<llm::ReplayProvider>(cassette);
  if (config.provider == "record") return std::make_shared<llm::RecordingProvider>(scripted(), cassette);
  if (config.provider == "live") return live();
  if (config.provider == "record-live") return std::make_shared<llm::RecordingProvider>(live(), cassette);
  throw ConfigError("unknown provider '" + config.provider + "'");
}

// --- Outcomes ------------------------------------------------------------------

void write_outcome(const WorkspaceLayout &layout, const CommitOutcome &o) {
  json failures = json::array();
  for (auto f : o.failures) failures.push_back(std::string(pipeline::failure_name(f)));
  const json j = {
      {"schema_version", 1},
      {"commit", o.commit},
      {"category", o.category ? json(std::string(category_label(*o.category))) : json(nullptr)},
      {"valid", o.valid},
      {"complete", o.complete},
      {"bucket", o.bucket ? json(std::string(bucket_name(*o.bucket))) : json(nullptr)},
      {"verdict", o.verdict ? json::parse(pipeline::verdict_json(*o.verdict)) : json(nullptr)},
      {"checker", o.checker},
      {"pattern", o.pattern},
      {"attempts", o.attempts},
      {"failures", failures},
      {"reports", o.reports},
      {"refine_iterations", o.refine_iterations}};
  const auto dir = layout.checker_dir(o.commit);
  std::filesystem::create_directories(dir);
  write_file(dir / "outcome.json", j.dump(2) + "\n");
}

std::optional<CommitOutcome> read_outcome(const WorkspaceLayout &layout, const std::string &id) {
  const auto file = layout.checker_dir(id) / "outcome.json";
  if (!std::filesystem::exists(file)) return std::nullopt;
  try {
    const json j = json::parse(read_file(file));
    CommitOutcome o;
    o.commit = j.at("commit").get<std::string>();
    if (!j.at("category").is_null()) o.category = parse_category(j.at("category").get<std::string>());
    o.valid = j.at("valid").get<bool>();
    o.complete = j.at("complete").get<bool>();
    if (!j.at("bucket").is_null()) o.bucket = parse_bucket(j.at("bucket").get<std::string>());
    if (!j.at("verdict").is_null()) o.verdict = pipeline::parse_verdict_json(j.at("verdict").dump());
    o.checker = j.at("checker").get<std::string>();
    o.pattern = j.at("pattern").get<std::string>();
    o.attempts = j.at("attempts").get<int>();
    for (const auto &f : j.at("failures")) {
      if (auto k = pipeline::parse_failure(f.get<std::string>())) o.failures.push_back(*k);
    }
    o.reports = j.at("reports").get<std::size_t>();
    o.refine_iterations = j.at("refine_iterations").get<int>();
    return o;
  } catch (const json::exception &e) {
    throw ParseFailure(file.string() + ": " + e.what());
  }
}

// --- Stages --------------------------------------------------------------------

CommitOutcome synthesize_commit(const WorkspaceLayout &layout, const patch::CommitBundle &bundle,
                                llm::Gateway &gateway, const RunConfig &config) {
  const auto &commit = bundle.commit;
  const auto result = pipeline::gen_checker(commit, layout.corpus(), gateway, config.synthesis,
                                            layout.checker_dir(commit.id));
  CommitOutcome o;
  o.commit = commit.id;
  o.category = bundle.category;
  o.valid = result.valid();
  o.verdict = result.verdict;
  o.attempts = static_cast<int>(result.attempts.size());
  for (const auto &a : result.attempts) {
    if (a.failure) o.failures.push_back(*a.failure);
  }
  if (result.valid()) {
    o.checker = result.checker->name;
    o.pattern = result.pattern;
    if (!o.category) o.category = llm::parse_pattern_text(result.pattern).category;
  } else {
    o.complete = true;
    o.bucket = Bucket::Invalid;
  }
  write_outcome(layout, o);
  return o;
}

CommitOutcome plausibility_stage(const WorkspaceLayout &layout, const patch::CommitBundle &bundle,
                                 llm::Gateway &gateway, const RunConfig &config) {
  const std::string &id = bundle.commit.id;
  auto found = read_outcome(layout, id);
  if (!found || !found->valid) {
    throw PreconditionViolation(id + " has no valid checker to assess");
  }
  CommitOutcome o = *found;
  const auto dir = layout.checker_dir(id);
  auto parsed = cdsl::parse_checker(read_file(dir / "checker.cdsl"));
  if (!parsed.ok()) throw ParseFailure(id + ": stored checker does not parse");
  cdsl::CheckerProgram current = *parsed.program;

  const auto report_dir = layout.report_dir(o.checker);
  std::filesystem::create_directories(report_dir);
  std::vector<triage::DistilledReport> fp_all;
  json rounds = json::array();
  int refine_left = config.refine_iterations;
  bool refined = false;
  o.refine_iterations = 0;

  for (;;) {
    const auto scan = scan::scan_corpus(current, layout.corpus(), config.limits);
    write_file(report_dir / "scan.json", scan::scan_json(scan));
    o.reports = scan.reports.size();

    std::vector<triage::DistilledReport> sampled;
    std::vector<triage::TriageLabel> labels;
    if (scan.reports.size() >= static_cast<std::size_t>(config.plausibility.t_plausible)) {
      for (std::size_t idx : triage::sample_indices(scan.reports.size(), config.plausibility)) {
        sampled.push_back(triage::distill(scan.reports[idx], layout.corpus(), idx));
        labels.push_back(triage::triage(sampled.back(), o.pattern, gateway));
      }
    }
    const auto decision = triage::assess_plausibility(scan, labels, config.plausibility);
    write_file(report_dir / "triage.json", triage::triage_json(o.checker, sampled, labels, decision));

    if (decision.plausible) {
      o.bucket = refined ? Bucket::Refined : Bucket::Direct;
      break;
    }
    if (refine_left <= 0) {
      o.bucket = Bucket::Fail;
      break;
    }
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      if (labels[i].verdict != triage::Verdict::NotABug) continue;
      const auto &d = sampled[i];
      const bool known = std::any_of(fp_all.begin(), fp_all.end(), [&](const auto &f) {
        return f.file == d.file && f.span == d.span && f.message == d.message;
      });
      if (!known) fp_all.push_back(d);
    }
    const auto outcome = triage::refine(current, fp_all, bundle.commit, layout.corpus(), gateway,
                                        config.synthesis, refine_left);
    refine_left -= outcome.iterations_used;
    o.refine_iterations += outcome.iterations_used;
    rounds.push_back(json::parse(triage::refinement_json(outcome)));
    write_file(report_dir / "refinement.json", rounds.dump(2) + "\n");
    if (!outcome.accepted) {
      o.bucket = Bucket::Fail;
      break;
    }
    current = outcome.final_checker;
    refined = true;
    write_file(dir / "checker.refined.cdsl", outcome.final_text);
  }
  o.complete = true;
  write_outcome(layout, o);
  return o;
}

std::vector<CommitOutcome> run_all(const WorkspaceLayout &layout, llm::Gateway &gateway,
                                   const RunConfig &config) {
  layout.create();
  write_file(layout.metrics() / "run_config.toml", config_text(config));
  const auto bundles = patch::load_commit_bundles(layout.commits());
  if (bundles.empty()) throw EmptyWorkspace("no commit bundles under " + layout.commits().string());
  std::vector<CommitOutcome> out;
  for (const auto &b : bundles) {
    auto o = read_outcome(layout, b.commit.id);
    if (!o || (!o->complete && !o->valid)) o = synthesize_commit(layout, b, gateway, config);
    if (!o->complete) o = plausibility_stage(layout, b, gateway, config);
    out.push_back(*o);
  }
  write_file(layout.metrics() / "metrics.json", metrics_json(emit_metrics(layout)));
  return out;
}

// --- Metrics -------------------------------------------------------------------

MetricsReport emit_metrics(const WorkspaceLayout &layout) {
  MetricsReport m;
  std::vector<std::string> ids;
  if (std::filesystem::is_directory(layout.checkers())) {
    for (const auto &e : std::filesystem::directory_iterator(layout.checkers())) {
      if (e.is_directory() && std::filesystem::exists(e.path() / "outcome.json")) {
        ids.push_back(e.path().filename().string());
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  int complete = 0;
  for (const auto &id : ids) {
    const auto o = read_outcome(layout, id);
    for (auto f : o->failures) ++m.failure_histogram[std::string(pipeline::failure_name(f))];
    if (!o->complete || !o->bucket) {
      ++m.pending;
      continue;
    }
    ++complete;
    add_to_row(m.totals, *o->bucket);
    if (o->category) {
      const auto it = std::find(kAllCategories.begin(), kAllCategories.end(), *o->category);
      add_to_row(m.by_category[static_cast<std::size_t>(it - kAllCategories.begin())], *o->bucket);
    } else {
      add_to_row(m.uncategorized, *o->bucket);
    }
  }
  if (complete == 0) throw EmptyWorkspace("no completed commit runs under " + layout.root.string());

  const auto config_file = layout.metrics() / "run_config.toml";
  if (std::filesystem::exists(config_file)) {
    m.config_text = read_file(config_file);
    m.seed = parse_config(m.config_text).seed;
  } else {
    m.config_text = config_text(RunConfig{});
    m.seed = RunConfig{}.seed;
  }

  const auto truth_file = layout.metrics() / "ground_truth.json";
  if (std::filesystem::exists(truth_file) && std::filesystem::is_directory(layout.reports())) {
    const json truth = json::parse(read_file(truth_file));
    std::vector<triage::Verdict> expected, agent;
    std::vector<std::filesystem::path> triage_files;
    for (const auto &e : std::filesystem::recursive_directory_iterator(layout.reports())) {
      if (e.path().filename() == "triage.json") triage_files.push_back(e.path());
    }
    std::sort(triage_files.begin(), triage_files.end());
    for (const auto &f : triage_files) {
      for (const auto &l : json::parse(read_file(f)).at("labels")) {
        const std::string key = l.at("file").get<std::string>() + ":" +
                                std::to_string(l.at("line").get<int>()) + ":" +
                                std::to_string(l.at("col").get<int>()) + ": " +
                                l.at("message").get<std::string>();
        if (!truth.contains(key)) continue;
        auto t = triage::parse_verdict_name(truth.at(key).get<std::string>());
        auto a = triage::parse_verdict_name(l.at("verdict").get<std::string>());
        if (!t || !a) continue;
        expected.push_back(*t);
        agent.push_back(*a);
      }
    }
    m.triage = triage::compute_metrics(expected, agent);
  }
  return m;
}

std::string metrics_json(const MetricsReport &m) {
  json rows = json::array();
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    json r = row_json(m.by_category[i]);
    r["category"] = std::string(category_label(kAllCategories[i]));
    rows.push_back(r);
  }
  json config = json::object();
  const RunConfig parsed = parse_config(m.config_text);
  for (const auto &key : config_keys()) config[key] = get_config_value(parsed, key);
  json triage_j = nullptr;
  if (m.triage) {
    triage_j = {{"tp", m.triage->tp},
                {"fp", m.triage->fp},
                {"tn", m.triage->tn},
                {"fn", m.triage->fn},
                {"precision", optional_ratio(m.triage->precision)},
                {"recall", optional_ratio(m.triage->recall)},
                {"fp_rate", optional_ratio(m.triage->fp_rate)}};
  }
  const json j = {{"schema_version", 1},
                  {"seed", m.seed},
                  {"config", config},
                  {"categories", rows},
                  {"uncategorized", row_json(m.uncategorized)},
                  {"totals", row_json(m.totals)},
                  {"pending", m.pending},
                  {"failure_histogram", m.failure_histogram},
                  {"triage", triage_j}};
  return j.dump(2) + "\n";
}

std::string metrics_table(const MetricsReport &m) {
  std::string out;
  char buf[128];
  auto line = [&](std::string_view label, const MetricsRow &r) {
    std::snprintf(buf, sizeof buf, "%-18.*s %5d %5d %7d %6d %7d %4d\n",
                  static_cast<int>(label.size()), label.data(), r.total, r.valid(), r.invalid,
                  r.direct, r.refined, r.fail);
    out += buf;
  };
  std::snprintf(buf, sizeof buf, "%-18s %5s %5s %7s %6s %7s %4s\n", "Category", "Total", "Valid",
                "Invalid", "Direct", "Refined", "Fail");
  out += buf;
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    line(category_label(kAllCategories[i]), m.by_category[i]);
  }
  if (m.uncategorized.total) line("Uncategorized", m.uncategorized);
  line("Total", m.totals);
  if (m.pending) out += "pending: " + std::to_string(m.pending) + "\n";
  for (const auto &[kind, n] : m.failure_histogram) {
    out += "failures " + kind + ": " + std::to_string(n) + "\n";
  }
  return out;
}

}  // namespace kf::workspace
