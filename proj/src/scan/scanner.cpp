#include "kf/scan/scanner.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "kf/minilang/parser.hpp"

namespace kf::scan {

using nlohmann::json;

namespace {

json span_to_json(const minilang::SourceSpan &s) {
  return {{"file", s.file},
          {"line", s.start_line},
          {"col", s.start_col},
          {"end_line", s.end_line},
          {"end_col", s.end_col}};
}

minilang::SourceSpan span_from_json(const json &j) {
  minilang::SourceSpan s;
  s.file = j.at("file").get<std::string>();
  s.start_line = j.at("line").get<int>();
  s.start_col = j.at("col").get<int>();
  s.end_line = j.at("end_line").get<int>();
  s.end_col = j.at("end_col").get<int>();
  return s;
}

struct FileOutcome {
  std::vector<engine::Report> reports;
  bool parsed = false;
  std::size_t budget_exhausted = 0;
};

}  // namespace

bool ScanResult::same_outcome(const ScanResult &o) const {
  return checker == o.checker && reports == o.reports && truncated == o.truncated &&
         truncation_reason == o.truncation_reason && files_scanned == o.files_scanned &&
         skipped_files == o.skipped_files && budget_exhausted == o.budget_exhausted &&
         error == o.error;
}

std::vector<std::string> list_corpus(const std::filesystem::path &root) {
  if (!std::filesystem::is_directory(root)) {
    throw CorpusError(root.string() + " is not a directory");
  }
  std::vector<std::string> out;
  for (const auto &e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".mc") {
      out.push_back(std::filesystem::relative(e.path(), root).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ScanResult scan_corpus(const cdsl::CheckerProgram &checker,
                       const std::filesystem::path &corpus_root, const ScanLimits &limits) {
  if (limits.jobs < 1) throw PreconditionViolation("jobs must be at least 1");
  const auto started = std::chrono::steady_clock::now();
  const std::vector<std::string> files = list_corpus(corpus_root);
  const auto hooks = cdsl::instantiate_hooks(checker);

  std::mutex mu;
  std::size_t next = 0;
  std::size_t prefix = 0;  // leading files that are finished
  std::size_t prefix_reports = 0;
  bool stop = false;
  std::string reason;
  std::exception_ptr failure;
  std::vector<bool> done(files.size(), false);
  std::vector<FileOutcome> outcomes(files.size());

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  auto work = [&] {
    for (;;) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (stop || next >= files.size()) return;
        idx = next++;
      }
      FileOutcome out;
      try {
        const std::string text = read_file(corpus_root / files[idx]);
        std::optional<minilang::AstModule> module;
        try {
          module = minilang::parse_module(text, files[idx]);
        } catch (const minilang::SyntaxError &) {
        }
        if (module) {
          out.parsed = true;
          for (const auto &fn : module->functions) {
            auto r = engine::analyze_function(fn, *hooks, limits.budget);
            if (r.truncated) ++out.budget_exhausted;
            for (auto &rep : r.reports) out.reports.push_back(std::move(rep));
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      outcomes[idx] = std::move(out);
      done[idx] = true;
      while (prefix < files.size() && done[prefix]) prefix_reports += outcomes[prefix++].reports.size();
      if (limits.enforce && !stop) {
        if (prefix_reports >= limits.max_warnings && prefix < files.size()) {
          stop = true;
          reason = "warnings";
        } else if (elapsed() > limits.time_limit && prefix < files.size()) {
          stop = true;
          reason = "time";
        }
      }
    }
  };

  const int n_threads =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(limits.jobs),
                                             std::max<std::size_t>(files.size(), 1)));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(work);
  work();
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ScanResult result;
  result.checker = checker.name;
  for (std::size_t i = 0; i < prefix; ++i) {
    if (outcomes[i].parsed) {
      ++result.files_scanned;
    } else {
      result.skipped_files.push_back(files[i]);
    }
    result.budget_exhausted += outcomes[i].budget_exhausted;
    for (auto &r : outcomes[i].reports) result.reports.push_back(std::move(r));
  }
  std::sort(result.reports.begin(), result.reports.end(), engine::report_less);
  result.reports.erase(std::unique(result.reports.begin(), result.reports.end()),
                       result.reports.end());
  if (limits.enforce) {
    if (result.reports.size() > limits.max_warnings) {
      result.reports.resize(limits.max_warnings);
      result.truncated = true;
      result.truncation_reason = "warnings";
    } else if (prefix < files.size()) {
      result.truncated = true;
      result.truncation_reason = reason;
    }
  }
  result.wall_time = elapsed();
  return result;
}

std::vector<ScanResult> scan_many(const std::vector<cdsl::CheckerProgram> &checkers,
                                  const std::filesystem::path &corpus_root,
                                  const ScanLimits &limits) {
  std::vector<const cdsl::CheckerProgram *> order;
  std::set<std::string> names;
  for (const auto &c : checkers) {
    if (!names.insert(c.name).second) {
      throw PreconditionViolation("duplicate checker name " + c.name);
    }
    order.push_back(&c);
  }
  std::sort(order.begin(), order.end(),
            [](const auto *a, const auto *b) { return a->name < b->name; });
  std::vector<ScanResult> out;
  for (const auto *c : order) {
    try {
      out.push_back(scan_corpus(*c, corpus_root, limits));
    } catch (const Error &e) {
      ScanResult failed;
      failed.checker = c->name;
      failed.error = e.kind() + ": " + e.what();
      out.push_back(std::move(failed));
    }
  }
  return out;
}

std::string report_key(const engine::Report &r) {
  return r.span.file + ":" + std::to_string(r.span.start_line) + ":" +
         std::to_string(r.span.start_col) + ": " + r.message;
}

std::string scan_json(const ScanResult &r) {
  json reports = json::array();
  for (const auto &rep : r.reports) {
    json trace = json::array();
    for (const auto &t : rep.trace) {
      json step = span_to_json(t.span);
      step["note"] = t.note;
      trace.push_back(step);
    }
    json j = span_to_json(rep.span);
    j["checker"] = rep.checker;
    j["message"] = rep.message;
    j["trace"] = trace;
    reports.push_back(j);
  }
  const json j = {{"schema_version", 1},
                  {"checker", r.checker},
                  {"files_scanned", r.files_scanned},
                  {"skipped_files", r.skipped_files},
                  {"budget_exhausted", r.budget_exhausted},
                  {"truncated", r.truncated},
                  {"truncation_reason", r.truncation_reason},
                  {"wall_time", r.wall_time},
                  {"error", r.error},
                  {"reports", reports}};
  return j.dump(2) + "\n";
}

ScanResult parse_scan_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ScanResult r;
    r.checker = j.at("checker").get<std::string>();
    r.files_scanned = j.at("files_scanned").get<std::size_t>();
    r.skipped_files = j.at("skipped_files").get<std::vector<std::string>>();
    r.budget_exhausted = j.at("budget_exhausted").get<std::size_t>();
    r.truncated = j.at("truncated").get<bool>();
    r.truncation_reason = j.at("truncation_reason").get<std::string>();
    r.wall_time = j.at("wall_time").get<double>();
    r.error = j.at("error").get<std::string>();
    for (const auto &jr : j.at("reports")) {
      engine::Report rep;
      rep.span = span_from_json(jr);
      rep.checker = jr.at("checker").get<std::string>();
      rep.message = jr.at("message").get<std::string>();
      for (const auto &jt : jr.at("trace")) {
        rep.trace.push_back({span_from_json(jt), jt.at("note").get<std::string>()});
      }
      r.reports.push_back(std::move(rep));
    }
    return r;
  } catch (const json::exception &e) {
    throw ParseFailure(std::string("scan.json: ") + e.what());
  }
}

}  // namespace kf::scan
