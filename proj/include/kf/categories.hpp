#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace kf {

/// The ten bug categories used to classify patch commits.
enum class BugCategory {
  NullPointerDereference,
  IntegerOverflow,
  OutOfBound,
  BufferOverflow,
  MemoryLeak,
  UseAfterFree,
  DoubleFree,
  UseBeforeInitialization,
  Concurrency,
  Misuse,
};

inline constexpr std::array<BugCategory, 10> kAllCategories = {
    BugCategory::NullPointerDereference, BugCategory::IntegerOverflow,
    BugCategory::OutOfBound,             BugCategory::BufferOverflow,
    BugCategory::MemoryLeak,             BugCategory::UseAfterFree,
    BugCategory::DoubleFree,             BugCategory::UseBeforeInitialization,
    BugCategory::Concurrency,            BugCategory::Misuse,
};

/// Short table label: "NPD", "Integer-Overflow", ..., "UBI", "Misuse".
std::string_view category_label(BugCategory c);
/// Accepts the short label, case-insensitively.
std::optional<BugCategory> parse_category(std::string_view label);

}  // namespace kf
