#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kf/categories.hpp"
#include "kf/patch.hpp"

namespace kf::llm {

enum class AgentRole { PatternAnalyst, Planner, Implementer, SyntaxRepairer, TriageAnalyst, Refiner };

std::string_view role_name(AgentRole role);
std::optional<AgentRole> parse_role(std::string_view name);

/// Named prompt inputs. Ordered so rendering is deterministic.
using PromptInputs = std::map<std::string, std::string>;

struct PromptBundle {
  AgentRole role = AgentRole::PatternAnalyst;
  std::string rendered_text;
  std::string inputs_digest;  // sha256 of the rendered text
  PromptInputs inputs;
};

/// Required input keys:
///   PatternAnalyst  patch, function_contexts
///   Planner         patch, pattern
///   Implementer     patch, pattern, plan   (template and catalog are added)
///   SyntaxRepairer  checker, diagnostics
///   TriageAnalyst   report, pattern
///   Refiner         checker, fp_cases
/// Any other keys (iteration, attempt, ...) are rendered as context lines.
/// Throws MissingInput naming the first absent key.
PromptBundle render_prompt(AgentRole role, const PromptInputs &inputs);

/// Function contexts as they appear in the PatternAnalyst prompt. Each
/// function is introduced by `#### pre-patch <path> <name>` and
/// `#### post-patch <path> <name>` header lines.
std::string render_function_contexts(const std::vector<patch::FunctionContext> &contexts);

// --- Exemplars ----------------------------------------------------------

struct Exemplar {
  std::string name;  // npd, ubi, double_free
  BugCategory category = BugCategory::NullPointerDereference;
  std::string key_callee;
  std::string message;
  std::string patch;
  std::string pattern;
  std::string plan;
  std::string checker;
  std::string source_path;  // file touched by the patch
  std::string post_source;  // its post-patch text
};

/// The three bundled end-to-end examples (NPD, UBI, Double-Free).
const std::vector<Exemplar> &exemplar_set();
const Exemplar *find_exemplar(BugCategory category);
/// Skeleton checker handed to the Implementer.
const std::string &checker_template();

// --- Transcript ---------------------------------------------------------

struct TranscriptEntry {
  std::string digest;
  AgentRole role = AgentRole::PatternAnalyst;
  std::string response;
  std::string provider;
  std::string timestamp;  // ISO-8601 UTC
};

/// Append-only log of agent interactions. Appends are serialized; when a
/// file is attached every entry is also written to it as one JSON line.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::filesystem::path file);

  void append(TranscriptEntry entry);
  std::vector<TranscriptEntry> entries() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
  std::optional<std::filesystem::path> file_;
};

// --- Providers ----------------------------------------------------------

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  /// Must be safe to call concurrently.
  virtual std::string complete(const PromptBundle &bundle) = 0;
};

struct ScriptedOptions {
  /// Number of malformed Implementer/SyntaxRepairer outputs to emit before
  /// well-formed ones. Counted across the provider's lifetime.
  int faults = 0;
};

/// Deterministic template-based stand-in for a model.
class ScriptedProvider final : public Provider {
 public:
  explicit ScriptedProvider(ScriptedOptions options = {});
  std::string id() const override { return "scripted"; }
  /// Throws UnsupportedPattern when no exemplar matches the patch.
  std::string complete(const PromptBundle &bundle) override;
  int faults_remaining() const;

 private:
  bool take_fault();

  mutable std::mutex mu_;
  int faults_remaining_;
  int faults_emitted_ = 0;
};

/// Cassette file: one JSON object per line, {"digest","role","response"}.
struct CassetteRecord {
  std::string digest;
  std::string role;
  std::string response;
};
std::vector<CassetteRecord> load_cassette(const std::filesystem::path &file);

/// Answers from a cassette. Repeated digests are answered in recording
/// order; once exhausted the last answer repeats. Throws CassetteMiss.
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(const std::filesystem::path &cassette);
  std::string id() const override { return "replay"; }
  std::string complete(const PromptBundle &bundle) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::string>> answers_;
  std::map<std::string, std::size_t> next_;
};

/// Forwards to `inner` and appends every exchange to a cassette file.
class RecordingProvider final : public Provider {
 public:
  RecordingProvider(std::shared_ptr<Provider> inner, std::filesystem::path cassette);
  std::string id() const override { return inner_->id(); }
  std::string complete(const PromptBundle &bundle) override;

 private:
  std::shared_ptr<Provider> inner_;
  std::filesystem::path cassette_;
  std::mutex mu_;
};

struct LiveOptions {
  std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
};

/// OpenAI-style chat-completions client. Throws ProviderUnavailable.
class LiveProvider final : public Provider {
 public:
  explicit LiveProvider(LiveOptions options);
  std::string id() const override { return "live"; }
  std::string complete(const PromptBundle &bundle) override;

 private:
  LiveOptions options_;
};

/// Renders, completes and logs one agent call.
class Gateway {
 public:
  Gateway(std::shared_ptr<Provider> provider, std::shared_ptr<Transcript> transcript);

  std::string complete(AgentRole role, const PromptInputs &inputs);
  Provider &provider() { return *provider_; }
  Transcript &transcript() { return *transcript_; }

 private:
  std::shared_ptr<Provider> provider_;
  std::shared_ptr<Transcript> transcript_;
};

// --- Response formats shared by agents and the pipeline -------------------

/// Parsed `Category:` / `Callees:` / `Pattern:` / `Scope:` agent output.
struct PatternFields {
  std::optional<BugCategory> category;
  std::vector<std::string> callees;
  std::string narrative;
  std::string scope;
};
PatternFields parse_pattern_text(const std::string &text);

/// Extracts the CDSL program from a response, dropping a surrounding
/// ``` fence if present.
std::string extract_checker_text(const std::string &response);

}  // namespace kf::llm
