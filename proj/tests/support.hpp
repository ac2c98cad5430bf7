#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kf/common.hpp"

namespace kf::testing {

inline std::filesystem::path data_dir() { return KF_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return KF_FIXTURE_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("kf-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Copies the bundled workspace (commits + corpus) into `dest`.
inline void copy_workspace(const std::filesystem::path &dest) {
  std::filesystem::create_directories(dest);
  std::filesystem::copy(data_dir() / "workspace", dest,
                        std::filesystem::copy_options::recursive |
                            std::filesystem::copy_options::overwrite_existing);
}

/// Random MiniLang functions over pointer variables. Bounded so the
/// brute-force path oracle can handle them: at most `max_branches`
/// if/while statements, `max_calls` calls and no nested loops.
class FunctionGenerator {
 public:
  FunctionGenerator(std::uint64_t seed, int max_branches = 4, int max_calls = 2)
      : rng_(seed), max_branches_(max_branches), max_calls_(max_calls) {}

  std::string function(const std::string &name) {
    branches_ = 0;
    calls_ = 0;
    std::string out = "int " + name + "(int *p, int *q) {\n";
    for (const char *v : {"a", "b", "c"}) {
      switch (pick(4)) {
        case 0: out += "  int *" + std::string(v) + ";\n"; break;
        case 1: out += "  int *" + std::string(v) + " = NULL;\n"; break;
        case 2: out += "  int *" + std::string(v) + " = " + ptr() + ";\n"; break;
        default:
          if (calls_ < max_calls_) {
            ++calls_;
            out += "  int *" + std::string(v) + " = " + alloc_call() + ";\n";
          } else {
            out += "  int *" + std::string(v) + " = p;\n";
          }
      }
    }
    out += block(1, false, 2 + pick(5));
    if (pick(2)) out += "  return 0;\n";
    out += "}\n";
    return out;
  }

  std::string module(int functions) {
    std::string out;
    for (int i = 0; i < functions; ++i) {
      if (i) out += "\n";
      out += function("fn_" + std::to_string(i));
    }
    return out;
  }

 private:
  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }

  std::string var() {
    static const char *kVars[] = {"a", "b", "c", "p", "q"};
    return kVars[pick(5)];
  }
  std::string local() {
    static const char *kVars[] = {"a", "b", "c"};
    return kVars[pick(3)];
  }
  std::string ptr() { return var(); }
  std::string alloc_call() {
    static const char *kAlloc[] = {"alloc", "lookup"};
    return std::string(kAlloc[pick(2)]) + "(p, " + std::to_string(pick(64)) + ")";
  }

  std::string cond() {
    const std::string x = var();
    switch (pick(7)) {
      case 0: return "!" + x;
      case 1: return x;
      case 2: return x + " == NULL";
      case 3: return x + " != NULL";
      case 4: return x + " == " + var();
      case 5: return x + " != " + var();
      default: return "NULL == " + x;
    }
  }

  std::string stmt(int depth, bool in_loop) {
    const std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
    for (;;) {
      switch (pick(9)) {
        case 0: return ind + local() + " = " + var() + ";\n";
        case 1: return ind + local() + " = NULL;\n";
        case 2: return ind + var() + "->f = " + std::to_string(pick(9)) + ";\n";
        case 3: return ind + "*" + var() + " = 0;\n";
        case 4: return ind + local() + " = *" + var() + ";\n";
        case 5:
          if (calls_ >= max_calls_) break;
          ++calls_;
          return ind + "release(" + var() + ");\n";
        case 6: {
          if (branches_ >= max_branches_ || depth > 3) break;
          ++branches_;
          std::string s = ind + "if (" + cond() + ") {\n" + block(depth + 1, in_loop, 1 + pick(2));
          if (pick(2)) {
            s += ind + "} else {\n" + block(depth + 1, in_loop, 1 + pick(2));
          }
          return s + ind + "}\n";
        }
        case 7: {
          if (in_loop || branches_ >= max_branches_ || depth > 3) break;
          ++branches_;
          return ind + "while (" + cond() + ") {\n" + block(depth + 1, true, 1 + pick(2)) + ind +
                 "}\n";
        }
        default:
          if (pick(3)) break;
          return ind + "return " + std::to_string(pick(3)) + ";\n";
      }
    }
  }

  std::string block(int depth, bool in_loop, int n) {
    std::string out;
    for (int i = 0; i < n; ++i) out += stmt(depth, in_loop);
    return out;
  }

  std::mt19937_64 rng_;
  int max_branches_;
  int max_calls_;
  int branches_ = 0;
  int calls_ = 0;
};

/// Checkers used by equivalence tests: together they exercise every event
/// kind and every action.
inline const char *kEquivalenceCheckers[] = {
    R"(checker eq_npd {
  map Null : { Unchecked, Checked };
  alias;
  report deref = "unchecked deref";
  on post_call when callee_is("alloc") { set_state(Null, return_region, Unchecked); }
  on branch_condition when null_test_on(t) && state_is(Null, t, Unchecked) {
    set_state(Null, t, Checked);
  }
  on location when state_is(Null, base_region, Unchecked) { report(deref, base_region); }
  on bind { propagate_alias(bind_target, bind_value); }
})",
    R"(checker eq_df {
  map Free : { Freed };
  alias;
  report twice = "freed twice";
  report after = "used after free";
  on pre_call when callee_is("release") && state_is(Free, arg_region(0), Freed) {
    report(twice, arg_region(0));
  }
  on post_call when callee_is("release") { mark_all_aliases(Free, arg_region(0), Freed); }
  on location when state_is(Free, base_region, Freed) { report(after); }
  on bind { propagate_alias(bind_target, bind_value); }
})",
    R"(checker eq_ubi {
  map Init : { Uninit, Set };
  report done = "end reached";
  report uninit = "uninitialized release";
  on bind when value_is(undefined) { set_state(Init, bind_target, Uninit); }
  on bind when !value_is(undefined) { clear_state(Init, bind_target); }
  on pre_call when callee_is("release") && state_is(Init, arg_region(0), Uninit) {
    report(uninit, arg_region(0));
  }
  on post_call when callee_is("lookup") && arg_count(2) { set_state(Init, return_region, Set); }
  on end_function { report(done); }
})",
};

}  // namespace kf::testing
