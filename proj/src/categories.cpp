#include "kf/categories.hpp"

#include <algorithm>
#include <cctype>

namespace kf {

std::string_view category_label(BugCategory c) {
  switch (c) {
    case BugCategory::NullPointerDereference: return "NPD";
    case BugCategory::IntegerOverflow: return "Integer-Overflow";
    case BugCategory::OutOfBound: return "Out-of-Bound";
    case BugCategory::BufferOverflow: return "Buffer-Overflow";
    case BugCategory::MemoryLeak: return "Memory-Leak";
    case BugCategory::UseAfterFree: return "Use-After-Free";
    case BugCategory::DoubleFree: return "Double-Free";
    case BugCategory::UseBeforeInitialization: return "UBI";
    case BugCategory::Concurrency: return "Concurrency";
    case BugCategory::Misuse: return "Misuse";
  }
  return "?";
}

std::optional<BugCategory> parse_category(std::string_view label) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string wanted = lower(label);
  for (BugCategory c : kAllCategories) {
    if (lower(category_label(c)) == wanted) return c;
  }
  return std::nullopt;
}

}  // namespace kf
