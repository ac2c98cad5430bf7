#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kf/categories.hpp"
#include "kf/common.hpp"

namespace kf::patch {

enum class LineKind { Context, Removed, Added };

struct HunkLine {
  LineKind kind = LineKind::Context;
  std::string text;

  friend bool operator==(const HunkLine &, const HunkLine &) = default;
};

struct Hunk {
  int old_start = 0;
  int old_len = 0;
  int new_start = 0;
  int new_len = 0;
  std::string section;  // text after the closing "@@", usually empty
  std::vector<HunkLine> lines;

  int count(LineKind kind) const;
  friend bool operator==(const Hunk &, const Hunk &) = default;
};

struct FileDiff {
  std::string path;
  std::vector<Hunk> hunks;

  friend bool operator==(const FileDiff &, const FileDiff &) = default;
};

struct PatchCommit {
  std::string id;
  std::string message;
  std::vector<FileDiff> file_diffs;

  const FileDiff *find(std::string_view path) const;
};

struct FunctionContext {
  std::string function_name;
  std::string path;
  std::string pre_source;
  std::string post_source;
};

enum class Direction { Forward, Reverse };

/// Splits a patch file into its message and per-file unified diffs.
/// Throws MalformedDiff with the offending 1-based line.
PatchCommit parse_patch(std::string_view text, std::string id = "patch");

/// Canonical unified-diff text for one file ("--- a/..", "+++ b/..", hunks).
std::string serialize(const FileDiff &diff);
/// Message followed by every file diff.
std::string serialize(const PatchCommit &commit);

/// Applies every hunk of `diff` to `source`. Reverse application swaps the
/// roles of removed and added lines. Throws ContextMismatch.
std::string apply_patch(std::string_view source, const FileDiff &diff,
                        Direction direction);

/// One FunctionContext per function whose body contains a changed line,
/// ordered by (path, start line). The corpus holds the post-patch state.
std::vector<FunctionContext> extract_function_contexts(
    const PatchCommit &commit, const std::filesystem::path &corpus_root);

/// Pre- and post-patch text of a touched file.
struct FileVersions {
  std::string path;
  std::string pre;
  std::string post;
};
FileVersions materialize(const FileDiff &diff,
                         const std::filesystem::path &corpus_root);

/// On-disk commit bundle: `<id>/message.txt`, `<id>/patch.diff`, optional
/// `<id>/meta.toml` carrying `category = "<label>"`.
struct CommitBundle {
  PatchCommit commit;
  std::optional<BugCategory> category;
  std::filesystem::path dir;
};

CommitBundle load_commit_bundle(const std::filesystem::path &dir);
std::vector<CommitBundle> load_commit_bundles(
    const std::filesystem::path &commits_root);

}  // namespace kf::patch
