#include "kf/minilang/ast.hpp"

#include <algorithm>

namespace kf::minilang {

std::string to_string(const MiniType &type) {
  std::string out = type.base == BaseType::Int ? "int" : "void";
  out.append(static_cast<std::size_t>(type.pointer_depth), '*');
  return out;
}

const FunctionDef *AstModule::find(std::string_view name) const {
  for (const auto &fn : functions) {
    if (fn.name == name) return &fn;
  }
  return nullptr;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void dump(const Expr &e, std::string &out);
void dump(const Stmt &s, std::string &out);

void dump(const Expr &e, std::string &out) {
  std::visit(Overloaded{
                 [&](const IntLit &n) { out += "(int " + std::to_string(n.value) + ")"; },
                 [&](const NullLit &) { out += "(null)"; },
                 [&](const VarRef &n) { out += "(var " + n.name + ")"; },
                 [&](const CallExpr &n) {
                   out += "(call " + n.callee;
                   for (const auto &a : n.args) {
                     out += ' ';
                     dump(a, out);
                   }
                   out += ')';
                 },
                 [&](const AddrOf &n) { out += "(addr " + n.name + ")"; },
                 [&](const Deref &n) { out += "(deref " + n.name + ")"; },
                 [&](const FieldDeref &n) {
                   out += "(field " + n.base + " " + n.field + ")";
                 },
             },
             e.node);
}

void dump(const Cond &c, std::string &out) {
  std::visit(Overloaded{
                 [&](const NotCond &n) {
                   out += "(not ";
                   dump(n.operand, out);
                   out += ')';
                 },
                 [&](const CmpCond &n) {
                   out += n.op == CmpOp::Eq ? "(eq " : "(ne ";
                   dump(n.lhs, out);
                   out += ' ';
                   dump(n.rhs, out);
                   out += ')';
                 },
                 [&](const TruthyCond &n) {
                   out += "(truthy ";
                   dump(n.operand, out);
                   out += ')';
                 },
             },
             c.node);
}

void dump(const Block &b, std::string &out) {
  out += "(block";
  for (const auto &s : b.stmts) {
    out += ' ';
    dump(s, out);
  }
  out += ')';
}

void dump(const Stmt &s, std::string &out) {
  std::visit(Overloaded{
                 [&](const DeclStmt &n) {
                   out += "(decl " + to_string(n.type) + " " + n.name;
                   if (n.init) {
                     out += ' ';
                     dump(*n.init, out);
                   }
                   out += ')';
                 },
                 [&](const AssignStmt &n) {
                   out += "(assign ";
                   dump(n.target, out);
                   out += ' ';
                   dump(n.value, out);
                   out += ')';
                 },
                 [&](const CallStmt &n) {
                   out += "(callstmt ";
                   dump(n.call, out);
                   out += ')';
                 },
                 [&](const IfStmt &n) {
                   out += "(if ";
                   dump(n.cond, out);
                   out += ' ';
                   dump(*n.then_branch, out);
                   if (n.else_branch) {
                     out += ' ';
                     dump(**n.else_branch, out);
                   }
                   out += ')';
                 },
                 [&](const WhileStmt &n) {
                   out += "(while ";
                   dump(n.cond, out);
                   out += ' ';
                   dump(n.body, out);
                   out += ')';
                 },
                 [&](const ReturnStmt &n) {
                   out += "(return";
                   if (n.value) {
                     out += ' ';
                     dump(*n.value, out);
                   }
                   out += ')';
                 },
                 [&](const Block &n) { dump(n, out); },
             },
             s.node);
}

void dump(const FunctionDef &fn, std::string &out) {
  out += "(fn " + fn.name + " " + to_string(fn.return_type) + " (";
  for (std::size_t i = 0; i < fn.params.size(); ++i) {
    if (i) out += ' ';
    out += to_string(fn.params[i].type) + ":" + fn.params[i].name;
  }
  out += ") ";
  dump(fn.body, out);
  out += ')';
}

void walk(const Stmt &s, int loop_depth, int &branches, int &max_depth);

void walk(const Block &b, int loop_depth, int &branches, int &max_depth) {
  for (const auto &s : b.stmts) walk(s, loop_depth, branches, max_depth);
}

void walk(const Stmt &s, int loop_depth, int &branches, int &max_depth) {
  if (const auto *n = s.as<IfStmt>()) {
    ++branches;
    walk(*n->then_branch, loop_depth, branches, max_depth);
    if (n->else_branch) walk(**n->else_branch, loop_depth, branches, max_depth);
  } else if (const auto *n = s.as<WhileStmt>()) {
    ++branches;
    max_depth = std::max(max_depth, loop_depth + 1);
    walk(n->body, loop_depth + 1, branches, max_depth);
  } else if (const auto *n = s.as<Block>()) {
    walk(*n, loop_depth, branches, max_depth);
  }
}

}  // namespace

std::string to_sexpr(const Expr &expr) {
  std::string out;
  dump(expr, out);
  return out;
}

std::string to_sexpr(const Cond &cond) {
  std::string out;
  dump(cond, out);
  return out;
}

std::string to_sexpr(const Stmt &stmt) {
  std::string out;
  dump(stmt, out);
  return out;
}

std::string to_sexpr(const FunctionDef &fn) {
  std::string out;
  dump(fn, out);
  return out;
}

std::string to_sexpr(const AstModule &module) {
  std::string out = "(module";
  for (const auto &fn : module.functions) {
    out += ' ';
    dump(fn, out);
  }
  out += ')';
  return out;
}

bool structurally_equal(const AstModule &a, const AstModule &b) {
  return to_sexpr(a) == to_sexpr(b);
}

int count_branches(const FunctionDef &fn) {
  int branches = 0;
  int depth = 0;
  walk(fn.body, 0, branches, depth);
  return branches;
}

int max_loop_nesting(const FunctionDef &fn) {
  int branches = 0;
  int depth = 0;
  walk(fn.body, 0, branches, depth);
  return depth;
}

}  // namespace kf::minilang
