#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kf {

/// Base of every error raised by the library. The `kind()` string is the
/// stable identifier used in persisted records and CLI output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string &what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string &kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define KF_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string &what) : Error(#Name, what) {} \
  }

KF_DEFINE_ERROR(MalformedDiff);
KF_DEFINE_ERROR(ContextMismatch);
KF_DEFINE_ERROR(FileNotFound);
KF_DEFINE_ERROR(ParseFailure);
KF_DEFINE_ERROR(OracleUnsupported);
KF_DEFINE_ERROR(CheckerRuntimeError);
KF_DEFINE_ERROR(MissingInput);
KF_DEFINE_ERROR(CassetteMiss);
KF_DEFINE_ERROR(ProviderUnavailable);
KF_DEFINE_ERROR(UnsupportedPattern);
KF_DEFINE_ERROR(CorpusError);
KF_DEFINE_ERROR(EmptyWorkspace);
KF_DEFINE_ERROR(PreconditionViolation);
KF_DEFINE_ERROR(ConfigError);

#undef KF_DEFINE_ERROR

/// Heap-allocated value with deep-copy semantics. Used for recursive AST
/// nodes so they keep value semantics.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT
  Box(const Box &other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box &&) noexcept = default;
  Box &operator=(const Box &other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box &operator=(Box &&) noexcept = default;
  ~Box() = default;

  T &operator*() { return *ptr_; }
  const T &operator*() const { return *ptr_; }
  T *operator->() { return ptr_.get(); }
  const T *operator->() const { return ptr_.get(); }
  const T &get() const { return *ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

// Text helpers.
std::vector<std::string> split_lines(std::string_view text);
std::string join_lines(const std::vector<std::string> &lines);
std::string rtrim(std::string_view s);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view content);

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace kf
