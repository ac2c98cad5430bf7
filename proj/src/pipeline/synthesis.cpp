#include "kf/pipeline/synthesis.hpp"

#include <json.hpp>

#include "kf/minilang/parser.hpp"

namespace kf::pipeline {

using nlohmann::json;

namespace {

constexpr std::string_view kFailureNames[] = {"Compilation", "Runtime", "Semantic(FlagsBoth)",
                                              "Semantic(FlagsNeither)"};

json verdict_to_json(const ValidationVerdict &v) {
  return {{"n_buggy", v.n_buggy}, {"n_patched", v.n_patched}, {"t_valid", v.t_valid},
          {"valid", v.valid}};
}

ValidationVerdict verdict_from_json(const json &j) {
  ValidationVerdict v;
  v.n_buggy = j.at("n_buggy").get<int>();
  v.n_patched = j.at("n_patched").get<int>();
  v.t_valid = j.at("t_valid").get<int>();
  v.valid = j.at("valid").get<bool>();
  return v;
}

int count_reports(const std::string &text, const std::string &path,
                  const engine::CheckerHooks &hooks, const engine::EngineBudget &budget) {
  minilang::AstModule module;
  try {
    module = minilang::parse_module(text, path);
  } catch (const minilang::SyntaxError &e) {
    throw CorpusError(path + ": " + e.what());
  }
  int n = 0;
  for (const auto &fn : module.functions) {
    n += static_cast<int>(engine::analyze_function(fn, hooks, budget).reports.size());
  }
  return n;
}

std::string attempt_dir_name(int n) { return "attempt-" + std::to_string(n); }

}  // namespace

void SynthesisConfig::check() const {
  if (max_iterations < 1 || max_repair_attempts < 1 || t_valid < 1 || budget.max_nodes < 1 ||
      budget.loop_unroll < 1) {
    throw PreconditionViolation("synthesis counts must be at least 1");
  }
}

bool verdict_predicate(int n_buggy, int n_patched, int t_valid) {
  return n_buggy > n_patched && n_patched < t_valid;
}

ValidationVerdict make_verdict(int n_buggy, int n_patched, int t_valid) {
  return {n_buggy, n_patched, t_valid, verdict_predicate(n_buggy, n_patched, t_valid)};
}

std::string_view failure_name(FailureKind kind) { return kFailureNames[static_cast<int>(kind)]; }

std::optional<FailureKind> parse_failure(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kFailureNames[i] == name) return static_cast<FailureKind>(i);
  }
  return std::nullopt;
}

FailureKind categorize_failure(const AttemptRecord &a) {
  if (!a.compiled) return FailureKind::Compilation;
  if (a.runtime_error || !a.verdict) return FailureKind::Runtime;
  const ValidationVerdict &v = *a.verdict;
  if (v.n_buggy == 0 && v.n_patched < v.t_valid) return FailureKind::SemanticFlagsNeither;
  return FailureKind::SemanticFlagsBoth;
}

ValidationVerdict validate_checker(const cdsl::CheckerProgram &checker,
                                   const patch::PatchCommit &commit,
                                   const std::filesystem::path &corpus_root,
                                   const SynthesisConfig &config) {
  config.check();
  const auto hooks = cdsl::instantiate_hooks(checker);
  std::vector<patch::FileVersions> files;
  for (const auto &fd : commit.file_diffs) {
    try {
      files.push_back(patch::materialize(fd, corpus_root));
    } catch (const CorpusError &) {
      throw;
    } catch (const Error &e) {
      throw CorpusError(fd.path + ": " + e.what());
    }
  }
  int n_buggy = 0;
  int n_patched = 0;
  for (const auto &f : files) n_buggy += count_reports(f.pre, f.path, *hooks, config.budget);
  for (const auto &f : files) n_patched += count_reports(f.post, f.path, *hooks, config.budget);
  return make_verdict(n_buggy, n_patched, config.t_valid);
}

// --- Persistence -----------------------------------------------------------

std::string verdict_json(const ValidationVerdict &v) {
  return verdict_to_json(v).dump(2) + "\n";
}

ValidationVerdict parse_verdict_json(std::string_view text) {
  try {
    return verdict_from_json(json::parse(text));
  } catch (const json::exception &e) {
    throw ParseFailure(std::string("verdict: ") + e.what());
  }
}

void write_attempt(const std::filesystem::path &dir, const AttemptRecord &a) {
  std::filesystem::create_directories(dir);
  write_file(dir / "pattern.md", a.pattern);
  write_file(dir / "plan.md", a.plan);
  write_file(dir / "checker.cdsl", a.checker_text);
  write_file(dir / "diagnostics.txt", a.diagnostics);
  if (a.verdict) write_file(dir / "verdict.json", verdict_json(*a.verdict));
  json j = {{"schema_version", 1},
            {"iteration", a.iteration},
            {"compiled", a.compiled},
            {"runtime_error", a.runtime_error},
            {"error", a.error},
            {"repair_log", a.repair_log},
            {"verdict", a.verdict ? verdict_to_json(*a.verdict) : json(nullptr)},
            {"failure", a.failure ? json(std::string(failure_name(*a.failure))) : json(nullptr)}};
  write_file(dir / "attempt.json", j.dump(2) + "\n");
}

std::optional<AttemptRecord> read_attempt(const std::filesystem::path &dir) {
  if (!std::filesystem::exists(dir / "attempt.json")) return std::nullopt;
  try {
    const json j = json::parse(read_file(dir / "attempt.json"));
    AttemptRecord a;
    a.iteration = j.at("iteration").get<int>();
    a.compiled = j.at("compiled").get<bool>();
    a.runtime_error = j.at("runtime_error").get<bool>();
    a.error = j.at("error").get<std::string>();
    a.repair_log = j.at("repair_log").get<std::vector<std::string>>();
    if (!j.at("verdict").is_null()) a.verdict = verdict_from_json(j.at("verdict"));
    if (!j.at("failure").is_null()) {
      a.failure = parse_failure(j.at("failure").get<std::string>());
      if (!a.failure) throw ParseFailure("unknown failure kind in " + dir.string());
    }
    auto slurp = [&](const char *name) {
      return std::filesystem::exists(dir / name) ? read_file(dir / name) : std::string();
    };
    a.pattern = slurp("pattern.md");
    a.plan = slurp("plan.md");
    a.checker_text = slurp("checker.cdsl");
    a.diagnostics = slurp("diagnostics.txt");
    return a;
  } catch (const json::exception &e) {
    throw ParseFailure(dir.string() + "/attempt.json: " + e.what());
  }
}

// --- Algorithm --------------------------------------------------------------

SynthesisResult gen_checker(const patch::PatchCommit &commit,
                            const std::filesystem::path &corpus_root, llm::Gateway &gateway,
                            const SynthesisConfig &config,
                            const std::optional<std::filesystem::path> &persist_dir) {
  config.check();
  SynthesisResult result;
  result.commit_id = commit.id;

  auto finish_valid = [&](const AttemptRecord &a, cdsl::CheckerProgram program) {
    result.checker_text = cdsl::pretty_print(program);
    result.checker = std::move(program);
    result.verdict = a.verdict;
    result.pattern = a.pattern;
    if (persist_dir) write_file(*persist_dir / "checker.cdsl", result.checker_text);
  };

  // Resume from attempts already on disk.
  if (persist_dir) {
    for (int n = 1; n <= config.max_iterations; ++n) {
      auto a = read_attempt(*persist_dir / attempt_dir_name(n));
      if (!a) break;
      result.attempts.push_back(*a);
      ++result.resumed_from;
      if (a->succeeded()) {
        auto parsed = cdsl::parse_checker(a->checker_text);
        if (parsed.ok()) {
          finish_valid(*a, *parsed.program);
          return result;
        }
      }
    }
  }

  std::vector<patch::FunctionContext> contexts;
  try {
    contexts = patch::extract_function_contexts(commit, corpus_root);
  } catch (const CorpusError &) {
    throw;
  } catch (const Error &e) {
    throw CorpusError(commit.id + ": " + e.what());
  }
  const std::string patch_text = patch::serialize(commit);
  const std::string function_contexts = llm::render_function_contexts(contexts);

  for (int it = result.resumed_from + 1; it <= config.max_iterations; ++it) {
    AttemptRecord a;
    a.iteration = it;
    const std::string iteration = std::to_string(it);
    std::optional<cdsl::CheckerProgram> program;
    try {
      a.pattern = gateway.complete(llm::AgentRole::PatternAnalyst,
                                   {{"patch", patch_text},
                                    {"function_contexts", function_contexts},
                                    {"iteration", iteration}});
      a.plan = gateway.complete(llm::AgentRole::Planner, {{"patch", patch_text},
                                                           {"pattern", a.pattern},
                                                           {"iteration", iteration}});
      a.checker_text = llm::extract_checker_text(gateway.complete(
          llm::AgentRole::Implementer, {{"patch", patch_text},
                                        {"pattern", a.pattern},
                                        {"plan", a.plan},
                                        {"iteration", iteration}}));
      auto parsed = cdsl::parse_checker(a.checker_text);
      int repairs = 0;
      while (!parsed.ok() && repairs < config.max_repair_attempts) {
        ++repairs;
        const std::string diagnostics = parsed.error_text();
        a.repair_log.push_back(diagnostics);
        a.checker_text = llm::extract_checker_text(gateway.complete(
            llm::AgentRole::SyntaxRepairer, {{"checker", a.checker_text},
                                             {"diagnostics", diagnostics},
                                             {"iteration", iteration},
                                             {"repair", std::to_string(repairs)}}));
        parsed = cdsl::parse_checker(a.checker_text);
      }
      if (parsed.ok()) {
        a.compiled = true;
        program = std::move(parsed.program);
      } else {
        a.diagnostics = parsed.error_text();
      }
    } catch (const Error &e) {
      a.error = e.kind() + ": " + e.what();
    }

    if (program) {
      try {
        a.verdict = validate_checker(*program, commit, corpus_root, config);
      } catch (const CorpusError &) {
        throw;
      } catch (const std::exception &e) {
        a.runtime_error = true;
        const auto *err = dynamic_cast<const Error *>(&e);
        a.error = (err ? err->kind() : std::string("crash")) + ": " + e.what();
      }
    }
    if (!a.verdict || !a.verdict->valid) a.failure = categorize_failure(a);

    if (persist_dir) write_attempt(*persist_dir / attempt_dir_name(it), a);
    result.attempts.push_back(a);
    if (a.succeeded()) {
      finish_valid(a, std::move(*program));
      return result;
    }
  }
  return result;
}

}  // namespace kf::pipeline
