#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kf/common.hpp"

namespace kf::minilang {

/// 1-based, inclusive-start / exclusive-end source range.
struct SourceSpan {
  std::string file;
  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;

  friend bool operator==(const SourceSpan &, const SourceSpan &) = default;
  friend auto operator<=>(const SourceSpan &, const SourceSpan &) = default;
};

enum class BaseType { Int, Void };

struct MiniType {
  BaseType base = BaseType::Int;
  int pointer_depth = 0;

  bool is_pointer() const { return pointer_depth > 0; }
  friend bool operator==(const MiniType &, const MiniType &) = default;
};

std::string to_string(const MiniType &type);

// --- Expressions --------------------------------------------------------

struct Expr;

struct IntLit {
  long long value = 0;
};
struct NullLit {};
struct VarRef {
  std::string name;
};
struct CallExpr {
  std::string callee;
  std::vector<Expr> args;
};
struct AddrOf {
  std::string name;
};
struct Deref {
  std::string name;
};
/// `base->field`; dereferences the object `base` points to.
struct FieldDeref {
  std::string base;
  std::string field;
};

struct Expr {
  using Node =
      std::variant<IntLit, NullLit, VarRef, CallExpr, AddrOf, Deref, FieldDeref>;
  Node node;
  SourceSpan span;

  template <typename T>
  const T *as() const {
    return std::get_if<T>(&node);
  }
  bool is_lvalue() const {
    return as<VarRef>() || as<Deref>() || as<FieldDeref>();
  }
};

// --- Conditions ---------------------------------------------------------

enum class CmpOp { Eq, Ne };

struct NotCond {
  Expr operand;
};
struct CmpCond {
  Expr lhs;
  CmpOp op = CmpOp::Eq;
  Expr rhs;
};
struct TruthyCond {
  Expr operand;
};

struct Cond {
  std::variant<NotCond, CmpCond, TruthyCond> node;
  SourceSpan span;
};

// --- Statements ---------------------------------------------------------

struct Stmt;

struct Block {
  std::vector<Stmt> stmts;
  SourceSpan span;
};

struct DeclStmt {
  MiniType type;
  std::string name;
  std::optional<Expr> init;
};
struct AssignStmt {
  Expr target;  // VarRef, Deref or FieldDeref
  Expr value;
};
struct CallStmt {
  Expr call;  // always a CallExpr
};
struct IfStmt {
  Cond cond;
  Box<Stmt> then_branch;
  std::optional<Box<Stmt>> else_branch;
};
struct WhileStmt {
  Cond cond;
  Block body;
};
struct ReturnStmt {
  std::optional<Expr> value;
};

struct Stmt {
  using Node = std::variant<DeclStmt, AssignStmt, CallStmt, IfStmt, WhileStmt,
                            ReturnStmt, Block>;
  Node node;
  SourceSpan span;

  template <typename T>
  const T *as() const {
    return std::get_if<T>(&node);
  }
};

struct Param {
  MiniType type;
  std::string name;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  MiniType return_type;
  Block body;
  SourceSpan span;
};

struct AstModule {
  std::vector<FunctionDef> functions;

  const FunctionDef *find(std::string_view name) const;
};

/// Canonical span-free S-expression dump. Two ASTs are structurally equal
/// iff their dumps are equal.
std::string to_sexpr(const AstModule &module);
std::string to_sexpr(const FunctionDef &fn);
std::string to_sexpr(const Expr &expr);
std::string to_sexpr(const Cond &cond);
std::string to_sexpr(const Stmt &stmt);

bool structurally_equal(const AstModule &a, const AstModule &b);

/// Number of `if` and `while` statements anywhere in `fn`.
int count_branches(const FunctionDef &fn);
/// Deepest nesting of `while` statements in `fn`.
int max_loop_nesting(const FunctionDef &fn);

}  // namespace kf::minilang
