#include "kf/patch.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "kf/minilang/parser.hpp"

namespace kf::patch {

int Hunk::count(LineKind kind) const {
  return static_cast<int>(std::count_if(
      lines.begin(), lines.end(),
      [kind](const HunkLine &l) { return l.kind == kind; }));
}

const FileDiff *PatchCommit::find(std::string_view path) const {
  for (const auto &fd : file_diffs) {
    if (fd.path == path) return &fd;
  }
  return nullptr;
}

namespace {

[[noreturn]] void malformed(std::size_t line_index, const std::string &reason) {
  throw MalformedDiff("line " + std::to_string(line_index + 1) + ": " + reason);
}

std::string strip_path_prefix(std::string path) {
  // "a/x.mc\t2024-01-01 ..." -> "x.mc"
  if (auto tab = path.find('\t'); tab != std::string::npos) path.resize(tab);
  path = rtrim(path);
  if (starts_with(path, "a/") || starts_with(path, "b/")) path = path.substr(2);
  return path;
}

bool is_file_header(const std::vector<std::string> &lines, std::size_t i) {
  return starts_with(lines[i], "--- ") && i + 1 < lines.size() &&
         starts_with(lines[i + 1], "+++ ");
}

const std::regex kHunkHeader(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$)");

const char *const kRejectedHeaders[] = {
    "new file mode", "deleted file mode", "rename from", "rename to",
    "copy from",     "copy to",           "similarity index",
    "old mode",      "new mode",          "Binary files",
};

}  // namespace

PatchCommit parse_patch(std::string_view text, std::string id) {
  if (id.empty()) throw MalformedDiff("empty commit id");
  const std::vector<std::string> lines = split_lines(text);
  PatchCommit commit;
  commit.id = std::move(id);

  std::size_t i = 0;
  while (i < lines.size() && !starts_with(lines[i], "diff --git ") &&
         !is_file_header(lines, i)) {
    ++i;
  }
  {
    // Message keeps its original bytes up to the first header.
    std::size_t offset = 0;
    for (std::size_t k = 0; k < i; ++k) offset += lines[k].size() + 1;
    commit.message = std::string(text.substr(0, std::min(offset, text.size())));
  }

  std::set<std::string> seen_paths;
  while (i < lines.size()) {
    const std::string &line = lines[i];
    if (line == "-- ") break;  // format-patch signature
    if (starts_with(line, "diff --git ") || starts_with(line, "index ")) {
      ++i;
      continue;
    }
    for (const char *rejected : kRejectedHeaders) {
      if (starts_with(line, rejected)) {
        malformed(i, "unsupported extended header '" + line + "'");
      }
    }
    if (trim(line).empty()) {
      ++i;
      continue;
    }
    if (!is_file_header(lines, i)) malformed(i, "expected '--- ' file header");

    std::string old_path = strip_path_prefix(lines[i].substr(4));
    std::string new_path = strip_path_prefix(lines[i + 1].substr(4));
    if (old_path == "/dev/null" || new_path == "/dev/null") {
      malformed(i, "file creation or deletion is not supported");
    }
    if (old_path != new_path) malformed(i, "renames are not supported");
    if (!seen_paths.insert(new_path).second) {
      malformed(i, "duplicate file diff for " + new_path);
    }
    FileDiff fd;
    fd.path = new_path;
    i += 2;

    while (i < lines.size() && starts_with(lines[i], "@@")) {
      std::smatch m;
      if (!std::regex_match(lines[i], m, kHunkHeader)) {
        malformed(i, "bad hunk header '" + lines[i] + "'");
      }
      Hunk h;
      h.old_start = std::stoi(m[1]);
      h.old_len = m[2].matched ? std::stoi(m[2]) : 1;
      h.new_start = std::stoi(m[3]);
      h.new_len = m[4].matched ? std::stoi(m[4]) : 1;
      h.section = m[5];
      const std::size_t header_line = i;
      ++i;
      int old_seen = 0;
      int new_seen = 0;
      while (old_seen < h.old_len || new_seen < h.new_len) {
        if (i >= lines.size()) {
          malformed(header_line, "hunk ends early: header claims " +
                                     std::to_string(h.old_len) + "/" +
                                     std::to_string(h.new_len) +
                                     " lines, found " + std::to_string(old_seen) +
                                     "/" + std::to_string(new_seen));
        }
        const std::string &body = lines[i];
        if (starts_with(body, "\\")) {
          ++i;
          continue;
        }
        char marker = body.empty() ? ' ' : body[0];
        std::string content = body.empty() ? std::string() : body.substr(1);
        if (marker == ' ') {
          h.lines.push_back({LineKind::Context, content});
          ++old_seen;
          ++new_seen;
        } else if (marker == '-' && !is_file_header(lines, i)) {
          h.lines.push_back({LineKind::Removed, content});
          ++old_seen;
        } else if (marker == '+') {
          h.lines.push_back({LineKind::Added, content});
          ++new_seen;
        } else {
          malformed(i, "hunk line count mismatch: header claims old_len=" +
                           std::to_string(h.old_len) + ", new_len=" +
                           std::to_string(h.new_len));
        }
        if (old_seen > h.old_len || new_seen > h.new_len) {
          malformed(i, "hunk has more lines than its header claims");
        }
        ++i;
      }
      while (i < lines.size() && starts_with(lines[i], "\\")) ++i;
      if (!fd.hunks.empty()) {
        const Hunk &prev = fd.hunks.back();
        if (h.old_start < prev.old_start + prev.old_len) {
          malformed(header_line, "overlapping or unsorted hunks");
        }
      }
      fd.hunks.push_back(std::move(h));
    }
    // A stray hunk-body line here means the previous header undercounted.
    if (i < lines.size() && !lines[i].empty() &&
        (lines[i][0] == ' ' || lines[i][0] == '+' ||
         (lines[i][0] == '-' && !is_file_header(lines, i) && lines[i] != "-- "))) {
      malformed(i, "hunk has more lines than its header claims");
    }
    commit.file_diffs.push_back(std::move(fd));
  }
  return commit;
}

std::string serialize(const FileDiff &diff) {
  std::string out = "--- a/" + diff.path + "\n+++ b/" + diff.path + "\n";
  for (const auto &h : diff.hunks) {
    out += "@@ -" + std::to_string(h.old_start) + "," + std::to_string(h.old_len) +
           " +" + std::to_string(h.new_start) + "," + std::to_string(h.new_len) +
           " @@" + h.section + "\n";
    for (const auto &l : h.lines) {
      out += l.kind == LineKind::Context ? ' ' : l.kind == LineKind::Removed ? '-' : '+';
      out += l.text;
      out += '\n';
    }
  }
  return out;
}

std::string serialize(const PatchCommit &commit) {
  std::string out = commit.message;
  for (const auto &fd : commit.file_diffs) out += serialize(fd);
  return out;
}

std::string apply_patch(std::string_view source, const FileDiff &diff,
                        Direction direction) {
  const std::vector<std::string> src = split_lines(source);
  const bool forward = direction == Direction::Forward;
  const LineKind drop = forward ? LineKind::Removed : LineKind::Added;
  const LineKind keep = forward ? LineKind::Added : LineKind::Removed;

  std::vector<std::string> out;
  std::size_t cursor = 0;
  for (std::size_t hi = 0; hi < diff.hunks.size(); ++hi) {
    const Hunk &h = diff.hunks[hi];
    const int start = forward ? h.old_start : h.new_start;
    const int len = forward ? h.old_len : h.new_len;
    // Zero-length sides name the line *after which* content goes.
    std::size_t at = len == 0 ? static_cast<std::size_t>(start)
                              : static_cast<std::size_t>(std::max(start - 1, 0));
    if (at < cursor || at > src.size()) {
      throw ContextMismatch(diff.path + ": hunk " + std::to_string(hi) +
                            " out of range");
    }
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(cursor),
               src.begin() + static_cast<std::ptrdiff_t>(at));
    cursor = at;
    for (const auto &l : h.lines) {
      if (l.kind == keep) {
        out.push_back(l.text);
        continue;
      }
      // Context or dropped line: must match the source.
      if (cursor >= src.size() || src[cursor] != l.text) {
        throw ContextMismatch(diff.path + ": hunk " + std::to_string(hi) +
                              " does not match source at line " +
                              std::to_string(cursor + 1));
      }
      if (l.kind != drop) out.push_back(src[cursor]);
      ++cursor;
    }
  }
  out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(cursor),
             src.end());

  std::string result;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k) result += '\n';
    result += out[k];
  }
  const bool trailing = source.empty() || source.back() == '\n';
  if (!out.empty() && trailing) result += '\n';
  return result;
}

FileVersions materialize(const FileDiff &diff,
                         const std::filesystem::path &corpus_root) {
  const auto path = corpus_root / diff.path;
  if (!std::filesystem::exists(path)) throw FileNotFound(path.string());
  FileVersions v;
  v.path = diff.path;
  v.post = read_file(path);
  v.pre = apply_patch(v.post, diff, Direction::Reverse);
  return v;
}

namespace {

std::string slice_lines(const std::vector<std::string> &lines, int first,
                        int last) {
  std::string out;
  for (int l = first; l <= last && l <= static_cast<int>(lines.size()); ++l) {
    out += lines[static_cast<std::size_t>(l - 1)];
    out += '\n';
  }
  return out;
}

const minilang::FunctionDef *function_at(const minilang::AstModule &m, int line) {
  for (const auto &fn : m.functions) {
    if (fn.span.start_line <= line && line <= fn.span.end_line) return &fn;
  }
  return nullptr;
}

minilang::AstModule parse_or_fail(const std::string &text,
                                  const std::string &path) {
  try {
    return minilang::parse_module(text, path);
  } catch (const minilang::SyntaxError &e) {
    throw ParseFailure(path + ": " + e.what());
  }
}

}  // namespace

std::vector<FunctionContext> extract_function_contexts(
    const PatchCommit &commit, const std::filesystem::path &corpus_root) {
  std::vector<const FileDiff *> diffs;
  for (const auto &fd : commit.file_diffs) diffs.push_back(&fd);
  std::sort(diffs.begin(), diffs.end(),
            [](const FileDiff *a, const FileDiff *b) { return a->path < b->path; });

  std::vector<FunctionContext> result;
  for (const FileDiff *fd : diffs) {
    FileVersions v = materialize(*fd, corpus_root);
    const auto pre_ast = parse_or_fail(v.pre, fd->path);
    const auto post_ast = parse_or_fail(v.post, fd->path);
    const auto pre_lines = split_lines(v.pre);
    const auto post_lines = split_lines(v.post);

    std::set<std::string> touched;
    for (const auto &h : fd->hunks) {
      int old_line = h.old_start;
      int new_line = h.new_start;
      for (const auto &l : h.lines) {
        if (l.kind == LineKind::Removed) {
          if (const auto *fn = function_at(pre_ast, old_line)) touched.insert(fn->name);
        } else if (l.kind == LineKind::Added) {
          if (const auto *fn = function_at(post_ast, new_line)) touched.insert(fn->name);
        }
        if (l.kind != LineKind::Added) ++old_line;
        if (l.kind != LineKind::Removed) ++new_line;
      }
    }

    std::vector<std::pair<int, FunctionContext>> found;
    for (const auto &name : touched) {
      const auto *pre_fn = pre_ast.find(name);
      const auto *post_fn = post_ast.find(name);
      FunctionContext ctx;
      ctx.function_name = name;
      ctx.path = fd->path;
      if (pre_fn) {
        ctx.pre_source = slice_lines(pre_lines, pre_fn->span.start_line,
                                     pre_fn->span.end_line);
      }
      if (post_fn) {
        ctx.post_source = slice_lines(post_lines, post_fn->span.start_line,
                                      post_fn->span.end_line);
      }
      if (ctx.pre_source == ctx.post_source) continue;
      int order = post_fn ? post_fn->span.start_line : pre_fn->span.start_line;
      found.emplace_back(order, std::move(ctx));
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const auto &a, const auto &b) { return a.first < b.first; });
    for (auto &f : found) result.push_back(std::move(f.second));
  }
  return result;
}

CommitBundle load_commit_bundle(const std::filesystem::path &dir) {
  const auto patch_path = dir / "patch.diff";
  if (!std::filesystem::exists(patch_path)) throw FileNotFound(patch_path.string());
  CommitBundle bundle;
  bundle.dir = dir;
  std::string message;
  if (std::filesystem::exists(dir / "message.txt")) {
    message = read_file(dir / "message.txt");
  }
  const std::string diff_text = read_file(patch_path);
  bundle.commit = parse_patch(diff_text, dir.filename().string());
  // message.txt is authoritative; text before the first header in
  // patch.diff is kept only when message.txt is absent.
  if (!message.empty()) bundle.commit.message = message;

  const auto meta = dir / "meta.toml";
  if (std::filesystem::exists(meta)) {
    static const std::regex kCategory(R"re(^\s*category\s*=\s*"([^"]*)"\s*$)re");
    for (const auto &line : split_lines(read_file(meta))) {
      std::smatch m;
      if (std::regex_match(line, m, kCategory)) {
        bundle.category = parse_category(m[1].str());
        if (!bundle.category) {
          throw CorpusError(meta.string() + ": unknown category '" + m[1].str() + "'");
        }
      }
    }
  }
  return bundle;
}

std::vector<CommitBundle> load_commit_bundles(
    const std::filesystem::path &commits_root) {
  std::vector<std::filesystem::path> dirs;
  if (std::filesystem::exists(commits_root)) {
    for (const auto &entry : std::filesystem::directory_iterator(commits_root)) {
      if (entry.is_directory() &&
          std::filesystem::exists(entry.path() / "patch.diff")) {
        dirs.push_back(entry.path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<CommitBundle> out;
  for (const auto &d : dirs) out.push_back(load_commit_bundle(d));
  return out;
}

}  // namespace kf::patch
