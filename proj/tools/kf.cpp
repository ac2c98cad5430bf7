// kf: command-line front end for checker synthesis, scanning, triage and
// metrics over a workspace directory.

#include <iostream>

#include <CLI11.hpp>

#include "kf/workspace/workspace.hpp"

namespace fs = std::filesystem;
using namespace kf;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct Common {
  std::string workspace = ".";
  std::string config_file;
  std::vector<std::string> sets;
  std::string provider;
  std::string cassette;
  int faults = -1;
  int jobs = 0;
  std::string seed;
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("-w,--workspace", c.workspace, "Workspace root")->capture_default_str();
  cmd->add_option("--config", c.config_file, "Config file (key = value lines)");
  cmd->add_option("--set", c.sets, "Override a config key, key=value");
  cmd->add_option("--provider", c.provider, "scripted | replay | record | live | record-live");
  cmd->add_option("--cassette", c.cassette, "Cassette file, relative to the workspace");
  cmd->add_option("--faults", c.faults, "Malformed checker outputs the scripted provider emits");
  cmd->add_option("-j,--jobs", c.jobs, "Scan workers");
  cmd->add_option("--seed", c.seed, "Run seed");
}

workspace::RunConfig resolve_config(const Common &c) {
  std::optional<fs::path> file;
  if (!c.config_file.empty()) {
    file = c.config_file;
  } else if (fs::exists(fs::path(c.workspace) / "chkforge.toml")) {
    file = fs::path(c.workspace) / "chkforge.toml";
  }
  auto cfg = workspace::load_config(file);
  for (const auto &s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + s);
    workspace::set_config_value(cfg, trim(s.substr(0, eq)), s.substr(eq + 1));
  }
  if (!c.provider.empty()) workspace::set_config_value(cfg, "provider", c.provider);
  if (!c.cassette.empty()) workspace::set_config_value(cfg, "cassette", c.cassette);
  if (c.faults >= 0) workspace::set_config_value(cfg, "faults", std::to_string(c.faults));
  if (c.jobs > 0) workspace::set_config_value(cfg, "jobs", std::to_string(c.jobs));
  if (!c.seed.empty()) workspace::set_config_value(cfg, "seed", c.seed);
  return cfg;
}

patch::CommitBundle find_bundle(const workspace::WorkspaceLayout &layout, const std::string &arg) {
  if (fs::is_directory(arg)) return patch::load_commit_bundle(arg);
  if (fs::is_directory(layout.commits() / arg)) return patch::load_commit_bundle(layout.commits() / arg);
  throw FileNotFound("commit bundle " + arg);
}

cdsl::CheckerProgram load_checker(const std::string &file) {
  if (!fs::exists(file)) throw FileNotFound(file);
  auto parsed = cdsl::parse_checker(read_file(file));
  if (!parsed.ok()) throw ParseFailure(file + ":\n" + parsed.error_text());
  return *parsed.program;
}

llm::Gateway make_gateway(const workspace::RunConfig &cfg, const workspace::WorkspaceLayout &layout) {
  layout.create();
  auto transcript = std::make_shared<llm::Transcript>(layout.cassettes() / "transcript.jsonl");
  return llm::Gateway(workspace::make_provider(cfg, layout), transcript);
}

void print_verdict(const pipeline::ValidationVerdict &v) {
  std::cout << "n_buggy=" << v.n_buggy << " n_patched=" << v.n_patched << " t_valid=" << v.t_valid
            << " valid=" << (v.valid ? "yes" : "no") << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Synthesize, validate and run static checkers from bug-fix patches"};
  app.require_subcommand(1);

  Common common;
  std::string commit_arg;
  std::vector<std::string> checker_files;
  std::string corpus_dir;
  bool enforce = false;
  std::size_t max_warnings = 0;
  double time_limit = 0;
  bool as_json = false;
  bool fresh = false;

  auto *synth = app.add_subcommand("synthesize", "Synthesize a checker for one commit bundle");
  add_common(synth, common);
  synth->add_option("--commit", commit_arg, "Commit bundle directory or id")->required();

  auto *validate = app.add_subcommand("validate", "Check a checker against a commit's two versions");
  add_common(validate, common);
  validate->add_option("--commit", commit_arg, "Commit bundle directory or id")->required();
  validate->add_option("--checker", checker_files, "CDSL file")->required()->expected(1);

  auto *scan_cmd = app.add_subcommand("scan", "Run checkers over a corpus");
  add_common(scan_cmd, common);
  scan_cmd->add_option("--checker", checker_files, "CDSL file (repeatable)")->required();
  scan_cmd->add_option("--corpus", corpus_dir, "Corpus root (default: <workspace>/corpus)");
  scan_cmd->add_flag("--enforce", enforce, "Apply the time and warning limits");
  scan_cmd->add_option("--max-warnings", max_warnings, "Warning limit when enforcing");
  scan_cmd->add_option("--time-limit", time_limit, "Time limit in seconds when enforcing");

  auto *triage_cmd = app.add_subcommand("triage", "Scan with a commit's checker and triage a sample");
  add_common(triage_cmd, common);
  triage_cmd->add_option("--commit", commit_arg, "Commit bundle directory or id")->required();

  auto *refine_cmd =
      app.add_subcommand("refine", "Decide plausibility for a commit, refining its checker if needed");
  add_common(refine_cmd, common);
  refine_cmd->add_option("--commit", commit_arg, "Commit bundle directory or id")->required();

  auto *run_all = app.add_subcommand("run-all", "Run every commit bundle end to end");
  add_common(run_all, common);
  run_all->add_flag("--fresh", fresh, "Discard earlier checkers and reports first");

  auto *metrics = app.add_subcommand("metrics", "Summarize a workspace");
  add_common(metrics, common);
  metrics->add_flag("--json", as_json, "Print metrics.json instead of the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    const workspace::WorkspaceLayout layout(common.workspace);
    const auto cfg = resolve_config(common);

    if (*synth) {
      const auto bundle = find_bundle(layout, commit_arg);
      auto gateway = make_gateway(cfg, layout);
      const auto o = workspace::synthesize_commit(layout, bundle, gateway, cfg);
      std::cout << o.commit << ": " << o.attempts << " attempt(s)\n";
      if (o.verdict) print_verdict(*o.verdict);
      if (!o.valid) {
        std::cout << "no valid checker\n";
        return kFailure;
      }
      std::cout << "checker " << o.checker << " -> "
                << (layout.checker_dir(o.commit) / "checker.cdsl").string() << "\n";
      return kOk;
    }

    if (*validate) {
      const auto bundle = find_bundle(layout, commit_arg);
      const auto v = pipeline::validate_checker(load_checker(checker_files.front()), bundle.commit,
                                                layout.corpus(), cfg.synthesis);
      std::cout << pipeline::verdict_json(v);
      return v.valid ? kOk : kFailure;
    }

    if (*scan_cmd) {
      auto limits = cfg.limits;
      limits.enforce = enforce;
      if (max_warnings > 0) limits.max_warnings = max_warnings;
      if (time_limit > 0) limits.time_limit = time_limit;
      std::vector<cdsl::CheckerProgram> checkers;
      for (const auto &f : checker_files) checkers.push_back(load_checker(f));
      const fs::path corpus = corpus_dir.empty() ? layout.corpus() : fs::path(corpus_dir);
      int status = kOk;
      for (const auto &r : scan::scan_many(checkers, corpus, limits)) {
        const auto dir = layout.report_dir(r.checker);
        fs::create_directories(dir);
        write_file(dir / "scan.json", scan::scan_json(r));
        if (!r.error.empty()) {
          std::cerr << r.checker << ": " << r.error << "\n";
          status = kFailure;
          continue;
        }
        for (const auto &rep : r.reports) std::cout << r.checker << ": " << scan::report_key(rep) << "\n";
        std::cout << r.checker << ": " << r.reports.size() << " report(s) in " << r.files_scanned
                  << " file(s)" << (r.truncated ? " (truncated: " + r.truncation_reason + ")" : "")
                  << "\n";
      }
      return status;
    }

    if (*triage_cmd) {
      const auto bundle = find_bundle(layout, commit_arg);
      const auto o = workspace::read_outcome(layout, bundle.commit.id);
      if (!o || !o->valid) throw PreconditionViolation(bundle.commit.id + " has no valid checker");
      const auto checker = load_checker((layout.checker_dir(o->commit) / "checker.cdsl").string());
      auto gateway = make_gateway(cfg, layout);
      const auto scan = scan::scan_corpus(checker, layout.corpus(), cfg.limits);
      std::vector<triage::DistilledReport> sampled;
      std::vector<triage::TriageLabel> labels;
      if (scan.reports.size() >= static_cast<std::size_t>(cfg.plausibility.t_plausible)) {
        for (auto idx : triage::sample_indices(scan.reports.size(), cfg.plausibility)) {
          sampled.push_back(triage::distill(scan.reports[idx], layout.corpus(), idx));
          labels.push_back(triage::triage(sampled.back(), o->pattern, gateway));
        }
      }
      const auto decision = triage::assess_plausibility(scan, labels, cfg.plausibility);
      const auto dir = layout.report_dir(checker.name);
      fs::create_directories(dir);
      write_file(dir / "scan.json", scan::scan_json(scan));
      write_file(dir / "triage.json", triage::triage_json(checker.name, sampled, labels, decision));
      for (std::size_t i = 0; i < sampled.size(); ++i) {
        std::cout << sampled[i].file << ":" << sampled[i].span.start_line << ": "
                  << triage::verdict_name(labels[i].verdict) << " - " << labels[i].rationale << "\n";
      }
      std::cout << scan.reports.size() << " report(s); "
                << (decision.plausible ? "plausible" : "not plausible") << "\n";
      return kOk;
    }

    if (*refine_cmd) {
      const auto bundle = find_bundle(layout, commit_arg);
      auto gateway = make_gateway(cfg, layout);
      const auto o = workspace::plausibility_stage(layout, bundle, gateway, cfg);
      std::cout << o.commit << ": " << workspace::bucket_name(*o.bucket) << " after "
                << o.refine_iterations << " refinement iteration(s)\n";
      return *o.bucket == workspace::Bucket::Fail ? kFailure : kOk;
    }

    if (*run_all) {
      if (fresh) {
        fs::remove_all(layout.checkers());
        fs::remove_all(layout.reports());
        fs::remove_all(layout.metrics());
      }
      auto gateway = make_gateway(cfg, layout);
      for (const auto &o : workspace::run_all(layout, gateway, cfg)) {
        std::cout << o.commit << ": " << workspace::bucket_name(*o.bucket) << "\n";
      }
      std::cout << workspace::metrics_table(workspace::emit_metrics(layout));
      return kOk;
    }

    if (*metrics) {
      const auto m = workspace::emit_metrics(layout);
      std::cout << (as_json ? workspace::metrics_json(m) : workspace::metrics_table(m));
      return kOk;
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
