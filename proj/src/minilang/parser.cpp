#include "kf/minilang/parser.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace kf::minilang {

namespace {

std::string describe_expected(const std::vector<std::string> &expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) out += ", ";
    out += expected[i];
  }
  return out;
}

}  // namespace

SyntaxError::SyntaxError(int line, int col, std::vector<std::string> expected,
                         const std::string &message)
    : Error("SyntaxError", std::to_string(line) + ":" + std::to_string(col) +
                               ": " + message +
                               (expected.empty()
                                    ? std::string()
                                    : " (expected " +
                                          describe_expected(expected) + ")")),
      line_(line),
      col_(col),
      expected_(std::move(expected)) {}

namespace {

enum class Tok { Ident, Int, Keyword, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
  int end_line = 1;
  int end_col = 1;
};

const std::set<std::string, std::less<>> kKeywords = {
    "int", "void", "if", "else", "while", "return", "NULL"};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::End;
        t.end_line = line_;
        t.end_col = col_;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_')) {
          advance();
        }
        t.text = std::string(text_.substr(start, pos_ - start));
        t.kind = kKeywords.count(t.text) ? Tok::Keyword : Tok::Ident;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          advance();
        }
        t.text = std::string(text_.substr(start, pos_ - start));
        t.kind = Tok::Int;
      } else {
        static constexpr std::string_view kTwo[] = {"==", "!=", "->"};
        t.kind = Tok::Punct;
        bool matched = false;
        for (auto two : kTwo) {
          if (text_.substr(pos_, 2) == two) {
            t.text = std::string(two);
            advance();
            advance();
            matched = true;
            break;
          }
        }
        if (!matched) {
          static constexpr std::string_view kOne = "(){};,=!*&-";
          if (kOne.find(c) == std::string_view::npos) {
            throw SyntaxError(line_, col_, {},
                              std::string("unexpected character '") + c + "'");
          }
          t.text = std::string(1, c);
          advance();
        }
      }
      t.end_line = line_;
      t.end_col = col_;
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (text_.substr(pos_, 2) == "//") {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (text_.substr(pos_, 2) == "/*") {
        int line = line_;
        int col = col_;
        advance();
        advance();
        while (pos_ < text_.size() && text_.substr(pos_, 2) != "*/") advance();
        if (pos_ >= text_.size()) {
          throw SyntaxError(line, col, {"*/"}, "unterminated comment");
        }
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string file)
      : toks_(std::move(tokens)), file_(std::move(file)) {}

  AstModule module() {
    AstModule m;
    std::set<std::string> names;
    while (peek().kind != Tok::End) {
      const Token &start = peek();
      FunctionDef fn = function();
      if (!names.insert(fn.name).second) {
        throw SyntaxError(start.line, start.col, {},
                          "duplicate function '" + fn.name + "'");
      }
      m.functions.push_back(std::move(fn));
    }
    return m;
  }

 private:
  const Token &peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token &last() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }

  bool at(std::string_view text) const {
    const Token &t = peek();
    return (t.kind == Tok::Punct || t.kind == Tok::Keyword) && t.text == text;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token &t = peek();
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(t.line, t.col, std::move(expected), "unexpected " + found);
  }

  const Token &expect(std::string_view text) {
    if (!at(text)) fail({std::string(text)});
    return toks_[pos_++];
  }

  std::string ident() {
    if (peek().kind != Tok::Ident) fail({"identifier"});
    return toks_[pos_++].text;
  }

  SourceSpan span_from(const Token &start) const {
    const Token &end = last();
    return SourceSpan{file_, start.line, start.col, end.end_line, end.end_col};
  }

  bool at_type() const { return at("int") || at("void"); }

  MiniType type() {
    MiniType t;
    if (at("int")) {
      t.base = BaseType::Int;
    } else if (at("void")) {
      t.base = BaseType::Void;
    } else {
      fail({"int", "void"});
    }
    ++pos_;
    while (at("*")) {
      ++pos_;
      ++t.pointer_depth;
    }
    return t;
  }

  FunctionDef function() {
    const Token &start = peek();
    FunctionDef fn;
    fn.return_type = type();
    fn.name = ident();
    expect("(");
    std::set<std::string> seen;
    if (!at(")")) {
      for (;;) {
        const Token &ptok = peek();
        Param p;
        p.type = type();
        p.name = ident();
        if (!seen.insert(p.name).second) {
          throw SyntaxError(ptok.line, ptok.col, {},
                            "duplicate parameter '" + p.name + "'");
        }
        fn.params.push_back(std::move(p));
        if (at(",")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    if (!at(")")) fail({")", ","});
    ++pos_;
    fn.body = block();
    fn.span = span_from(start);
    return fn;
  }

  Block block() {
    const Token &start = peek();
    expect("{");
    Block b;
    while (!at("}")) {
      if (peek().kind == Tok::End) fail({"}", "statement"});
      b.stmts.push_back(statement());
    }
    ++pos_;
    b.span = span_from(start);
    return b;
  }

  Stmt statement() {
    const Token &start = peek();
    Stmt s;
    if (at("{")) {
      s.node = block();
    } else if (at("if")) {
      ++pos_;
      expect("(");
      Cond c = condition();
      expect(")");
      Stmt then_branch = statement();
      std::optional<Box<Stmt>> else_branch;
      if (at("else")) {
        ++pos_;
        else_branch = Box<Stmt>(statement());
      }
      s.node = IfStmt{std::move(c), Box<Stmt>(std::move(then_branch)),
                      std::move(else_branch)};
    } else if (at("while")) {
      ++pos_;
      expect("(");
      Cond c = condition();
      expect(")");
      if (!at("{")) fail({"{"});
      s.node = WhileStmt{std::move(c), block()};
    } else if (at("return")) {
      ++pos_;
      ReturnStmt r;
      if (!at(";")) r.value = expression();
      expect(";");
      s.node = std::move(r);
    } else if (at_type()) {
      DeclStmt d;
      d.type = type();
      d.name = ident();
      if (at("=")) {
        ++pos_;
        d.init = expression();
      }
      if (!at(";")) fail({";", "="});
      ++pos_;
      s.node = std::move(d);
    } else if (peek().kind == Tok::Ident || at("*")) {
      Expr lhs = expression();
      if (lhs.as<CallExpr>() && at(";")) {
        ++pos_;
        s.node = CallStmt{std::move(lhs)};
      } else {
        if (!lhs.is_lvalue()) fail({";"});
        if (!at("=")) fail(lhs.as<VarRef>() ? std::vector<std::string>{"=", "("}
                                            : std::vector<std::string>{"="});
        ++pos_;
        Expr rhs = expression();
        expect(";");
        s.node = AssignStmt{std::move(lhs), std::move(rhs)};
      }
    } else {
      fail({"statement"});
    }
    s.span = span_from(start);
    return s;
  }

  Cond condition() {
    const Token &start = peek();
    Cond c;
    if (at("!")) {
      ++pos_;
      c.node = NotCond{expression()};
    } else {
      Expr lhs = expression();
      if (at("==") || at("!=")) {
        CmpOp op = at("==") ? CmpOp::Eq : CmpOp::Ne;
        ++pos_;
        c.node = CmpCond{std::move(lhs), op, expression()};
      } else {
        c.node = TruthyCond{std::move(lhs)};
      }
    }
    c.span = span_from(start);
    return c;
  }

  Expr expression() {
    const Token &start = peek();
    Expr e;
    if (peek().kind == Tok::Int) {
      e.node = IntLit{std::stoll(toks_[pos_++].text)};
    } else if (at("-") && peek(1).kind == Tok::Int) {
      ++pos_;
      e.node = IntLit{-std::stoll(toks_[pos_++].text)};
    } else if (at("NULL")) {
      ++pos_;
      e.node = NullLit{};
    } else if (at("&")) {
      ++pos_;
      e.node = AddrOf{ident()};
    } else if (at("*")) {
      ++pos_;
      e.node = Deref{ident()};
    } else if (peek().kind == Tok::Ident) {
      std::string name = ident();
      if (at("(")) {
        ++pos_;
        CallExpr call{std::move(name), {}};
        if (!at(")")) {
          for (;;) {
            call.args.push_back(expression());
            if (at(",")) {
              ++pos_;
              continue;
            }
            break;
          }
        }
        if (!at(")")) fail({")", ","});
        ++pos_;
        e.node = std::move(call);
      } else if (at("->")) {
        ++pos_;
        e.node = FieldDeref{std::move(name), ident()};
      } else {
        e.node = VarRef{std::move(name)};
      }
    } else {
      fail({"expression"});
    }
    e.span = span_from(start);
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string file_;
};

// --- Printer ------------------------------------------------------------

class Printer {
 public:
  std::string out;

  void function(const FunctionDef &fn) {
    out += to_string(fn.return_type) + " " + fn.name + "(";
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      if (i) out += ", ";
      out += to_string(fn.params[i].type) + " " + fn.params[i].name;
    }
    out += ") ";
    block(fn.body, 0);
    out += '\n';
  }

  void block(const Block &b, int indent) {
    out += "{\n";
    for (const auto &s : b.stmts) stmt(s, indent + 1);
    pad(indent);
    out += '}';
  }

  void stmt(const Stmt &s, int indent) {
    pad(indent);
    stmt_body(s, indent);
  }

  // Emits `s` assuming indentation for its first line was already written.
  void stmt_body(const Stmt &s, int indent) {
    if (const auto *n = s.as<Block>()) {
      block(*n, indent);
      out += '\n';
    } else if (const auto *n = s.as<DeclStmt>()) {
      out += to_string(n->type) + " " + n->name;
      if (n->init) out += " = " + pretty_print(*n->init);
      out += ";\n";
    } else if (const auto *n = s.as<AssignStmt>()) {
      out += pretty_print(n->target) + " = " + pretty_print(n->value) + ";\n";
    } else if (const auto *n = s.as<CallStmt>()) {
      out += pretty_print(n->call) + ";\n";
    } else if (const auto *n = s.as<ReturnStmt>()) {
      out += n->value ? "return " + pretty_print(*n->value) + ";\n" : "return;\n";
    } else if (const auto *n = s.as<WhileStmt>()) {
      out += "while (" + pretty_print(n->cond) + ") ";
      block(n->body, indent);
      out += '\n';
    } else if (const auto *n = s.as<IfStmt>()) {
      out += "if (" + pretty_print(n->cond) + ")";
      branch(*n->then_branch, indent);
      if (n->else_branch) {
        const Stmt &e = **n->else_branch;
        if (n->then_branch->as<Block>()) {
          // `} else` on the closing-brace line.
          out.pop_back();
          out += " else";
        } else {
          pad(indent);
          out += "else";
        }
        if (e.as<IfStmt>()) {
          out += ' ';
          stmt_body(e, indent);
        } else {
          branch(e, indent);
        }
      }
    }
  }

  void branch(const Stmt &s, int indent) {
    if (const auto *b = s.as<Block>()) {
      out += ' ';
      block(*b, indent);
      out += '\n';
    } else {
      out += '\n';
      stmt(s, indent + 1);
    }
  }

  void pad(int indent) { out.append(static_cast<std::size_t>(indent) * 2, ' '); }
};

}  // namespace

AstModule parse_module(std::string_view text, std::string file) {
  Lexer lexer(text);
  Parser parser(lexer.run(), std::move(file));
  return parser.module();
}

std::string pretty_print(const Expr &expr) {
  return std::visit(
      [](const auto &n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntLit>) {
          return std::to_string(n.value);
        } else if constexpr (std::is_same_v<T, NullLit>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          std::string out = n.callee + "(";
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            out += pretty_print(n.args[i]);
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, AddrOf>) {
          return "&" + n.name;
        } else if constexpr (std::is_same_v<T, Deref>) {
          return "*" + n.name;
        } else {
          return n.base + "->" + n.field;
        }
      },
      expr.node);
}

std::string pretty_print(const Cond &cond) {
  if (const auto *n = std::get_if<NotCond>(&cond.node)) {
    return "!" + pretty_print(n->operand);
  }
  if (const auto *n = std::get_if<CmpCond>(&cond.node)) {
    return pretty_print(n->lhs) + (n->op == CmpOp::Eq ? " == " : " != ") +
           pretty_print(n->rhs);
  }
  return pretty_print(std::get<TruthyCond>(cond.node).operand);
}

std::string pretty_print(const FunctionDef &fn) {
  Printer p;
  p.function(fn);
  return p.out;
}

std::string pretty_print(const AstModule &module) {
  Printer p;
  for (std::size_t i = 0; i < module.functions.size(); ++i) {
    if (i) p.out += '\n';
    p.function(module.functions[i]);
  }
  return p.out;
}

}  // namespace kf::minilang
