#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kf/minilang/ast.hpp"

namespace kf::minilang {

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int col, std::vector<std::string> expected,
              const std::string &message);

  int line() const { return line_; }
  int col() const { return col_; }
  const std::vector<std::string> &expected() const { return expected_; }

 private:
  int line_;
  int col_;
  std::vector<std::string> expected_;
};

/// Parses a whole MiniLang translation unit. `file` is recorded in every
/// span. Throws SyntaxError.
AstModule parse_module(std::string_view text, std::string file = "");

/// Source text that re-parses to a structurally equal module.
std::string pretty_print(const AstModule &module);
std::string pretty_print(const FunctionDef &fn);
std::string pretty_print(const Expr &expr);
std::string pretty_print(const Cond &cond);

}  // namespace kf::minilang
