// Brute-force reference for analyze_function: enumerate syntactic paths,
// run each one straight-line, and decide feasibility with a batch solver
// over the collected literals. Shares no exploration code with the engine.

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <tuple>

#include "kf/engine/engine.hpp"
#include "kf/minilang/parser.hpp"

namespace kf::engine {

namespace {

using namespace minilang;

struct Step {
  enum class Kind { Simple, Branch, Enter, Leave };
  Kind kind = Kind::Simple;
  const minilang::Stmt *stmt = nullptr;  // Simple
  const Cond *cond = nullptr;            // Branch
  bool outcome = false;                  // Branch
  const minilang::Block *block = nullptr;  // Enter / Leave
};

using Path = std::vector<Step>;

// Pending work while enumerating. Kept as an immutable-by-copy list.
struct Pending {
  enum class Kind { Stmt, Leave, Loop };
  Kind kind = Kind::Stmt;
  const minilang::Stmt *stmt = nullptr;
  const minilang::Block *block = nullptr;
  const WhileStmt *loop = nullptr;
  int done = 0;
};

void push_block(std::vector<Pending> &todo, Path &path, const minilang::Block &b) {
  path.push_back({Step::Kind::Enter, nullptr, nullptr, false, &b});
  todo.push_back({Pending::Kind::Leave, nullptr, &b, nullptr, 0});
  for (auto it = b.stmts.rbegin(); it != b.stmts.rend(); ++it) {
    todo.push_back({Pending::Kind::Stmt, &*it, nullptr, nullptr, 0});
  }
}

void enumerate(std::vector<Pending> todo, Path path, int unroll, std::vector<Path> &out) {
  while (!todo.empty()) {
    Pending p = todo.back();
    todo.pop_back();
    if (p.kind == Pending::Kind::Leave) {
      path.push_back({Step::Kind::Leave, nullptr, nullptr, false, p.block});
      continue;
    }
    if (p.kind == Pending::Kind::Loop) {
      if (p.done >= unroll) continue;
      {
        auto t_todo = todo;
        auto t_path = path;
        t_path.push_back({Step::Kind::Branch, nullptr, &p.loop->cond, true, nullptr});
        t_todo.push_back({Pending::Kind::Loop, nullptr, nullptr, p.loop, p.done + 1});
        push_block(t_todo, t_path, p.loop->body);
        enumerate(std::move(t_todo), std::move(t_path), unroll, out);
      }
      path.push_back({Step::Kind::Branch, nullptr, &p.loop->cond, false, nullptr});
      continue;
    }
    const minilang::Stmt &s = *p.stmt;
    if (const auto *b = s.as<minilang::Block>()) {
      push_block(todo, path, *b);
    } else if (const auto *i = s.as<IfStmt>()) {
      {
        auto t_todo = todo;
        auto t_path = path;
        t_path.push_back({Step::Kind::Branch, nullptr, &i->cond, true, nullptr});
        t_todo.push_back({Pending::Kind::Stmt, &*i->then_branch, nullptr, nullptr, 0});
        enumerate(std::move(t_todo), std::move(t_path), unroll, out);
      }
      path.push_back({Step::Kind::Branch, nullptr, &i->cond, false, nullptr});
      if (i->else_branch) {
        todo.push_back({Pending::Kind::Stmt, &**i->else_branch, nullptr, nullptr, 0});
      }
    } else if (const auto *w = s.as<WhileStmt>()) {
      todo.push_back({Pending::Kind::Loop, nullptr, nullptr, w, 0});
    } else {
      path.push_back({Step::Kind::Simple, &s, nullptr, false, nullptr});
      if (s.as<ReturnStmt>()) break;
    }
  }
  out.push_back(std::move(path));
}

// Batch satisfiability of a conjunction of literals.
bool satisfiable(const std::vector<Literal> &lits) {
  std::map<SymbolId, SymbolId> parent;
  std::function<SymbolId(SymbolId)> root = [&](SymbolId s) -> SymbolId {
    auto it = parent.find(s);
    if (it == parent.end() || it->second == s) return s;
    return root(it->second);
  };
  for (const auto &l : lits) {
    if (l.kind == Literal::Kind::Eq) {
      const SymbolId a = root(l.a);
      const SymbolId b = root(l.b);
      if (a != b) parent[a] = b;
    }
  }
  std::map<SymbolId, bool> is_null;  // class -> forced value
  for (const auto &l : lits) {
    if (l.kind != Literal::Kind::IsNull && l.kind != Literal::Kind::NonNull) continue;
    const bool want = l.kind == Literal::Kind::IsNull;
    auto [it, fresh] = is_null.emplace(root(l.a), want);
    if (!fresh && it->second != want) return false;
  }
  for (const auto &l : lits) {
    if (l.kind != Literal::Kind::Neq) continue;
    const SymbolId a = root(l.a);
    const SymbolId b = root(l.b);
    if (a == b) return false;
    auto na = is_null.find(a);
    auto nb = is_null.find(b);
    if (na != is_null.end() && nb != is_null.end() && na->second && nb->second) {
      return false;
    }
  }
  return true;
}

class LinearEval {
 public:
  LinearEval(const FunctionDef &fn) : fn_(fn) {}

  OraclePath run(const Path &path) {
    OraclePath out;
    for (const auto &p : fn_.params) {
      mem_[var(p.name)] = SymbolicValue::make_symbol(next_++, "param:" + p.name);
    }
    std::vector<const minilang::Block *> open;
    bool contradiction = false;
    bool returned = false;
    for (const auto &step : path) {
      switch (step.kind) {
        case Step::Kind::Enter:
          open.push_back(step.block);
          break;
        case Step::Kind::Leave:
          dead(*step.block, out);
          open.pop_back();
          break;
        case Step::Kind::Branch: {
          Assumption a = branch(*step.cond, step.outcome, out);
          if (a.kind == Assumption::Kind::Contradiction) contradiction = true;
          if (a.kind == Assumption::Kind::Constrain) lits_.push_back(a.literal);
          out.assumptions.push_back("Assuming '" + pretty_print(*step.cond) + "' is " +
                                    (step.outcome ? "true" : "false"));
          break;
        }
        case Step::Kind::Simple:
          if (const auto *r = step.stmt->as<ReturnStmt>()) {
            if (r->value) eval(*r->value, out);
            for (auto it = open.rbegin(); it != open.rend(); ++it) dead(**it, out);
            out.events.push_back(EndFunctionEvent{step.stmt->span});
            returned = true;
          } else {
            simple(*step.stmt, out);
          }
          break;
      }
    }
    if (!returned) out.events.push_back(EndFunctionEvent{fn_.span});
    out.feasible = !contradiction && satisfiable(lits_);
    return out;
  }

 private:
  Region var(const std::string &n) const { return Region::var(fn_.name, n); }

  SymbolicValue get(const std::string &n) const {
    auto it = mem_.find(var(n));
    return it == mem_.end() ? SymbolicValue::make_unknown() : it->second;
  }

  std::optional<Region> target_of(const std::string &n) const { return get(n).region(); }

  std::optional<Region> place(const Expr &e) const {
    if (const auto *v = e.as<VarRef>()) return var(v->name);
    if (const auto *d = e.as<Deref>()) return target_of(d->name);
    if (const auto *f = e.as<FieldDeref>()) {
      if (auto t = target_of(f->base)) return Region::field(*t, f->field);
    }
    return std::nullopt;
  }

  std::optional<Region> region_for(const Expr &e, const SymbolicValue &v) const {
    if (v.region()) return v.region();
    return v.kind == SymbolicValue::Kind::Unknown ? place(e) : std::nullopt;
  }

  std::optional<Region> base_of(const std::string &n) const {
    const SymbolicValue v = get(n);
    if (v.region()) return v.region();
    if (v.kind == SymbolicValue::Kind::Unknown) return var(n);
    return std::nullopt;
  }

  SymbolicValue read(const std::optional<Region> &r) {
    if (!r) return SymbolicValue::make_unknown();
    auto it = mem_.find(*r);
    if (it != mem_.end()) return it->second;
    SymbolicValue v = SymbolicValue::make_symbol(next_++, "load:" + r->key());
    mem_.emplace(*r, v);
    return v;
  }

  SymbolicValue eval(const Expr &e, OraclePath &out) {
    return std::visit(
        [&](const auto &n) -> SymbolicValue {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, IntLit>) {
            return SymbolicValue::make_concrete(n.value);
          } else if constexpr (std::is_same_v<T, NullLit>) {
            return SymbolicValue::make_null();
          } else if constexpr (std::is_same_v<T, VarRef>) {
            return get(n.name);
          } else if constexpr (std::is_same_v<T, AddrOf>) {
            return SymbolicValue::make_address(var(n.name));
          } else if constexpr (std::is_same_v<T, Deref>) {
            out.events.push_back(LocationEvent{AccessKind::Load, base_of(n.name), e.span});
            return read(target_of(n.name));
          } else if constexpr (std::is_same_v<T, FieldDeref>) {
            out.events.push_back(LocationEvent{AccessKind::Load, base_of(n.base), e.span});
            return read(place(e));
          } else {
            std::vector<ArgInfo> args;
            for (const auto &a : n.args) {
              SymbolicValue v = eval(a, out);
              args.push_back({v, region_for(a, v), a.span});
            }
            out.events.push_back(PreCallEvent{n.callee, args, e.span});
            SymbolicValue ret = SymbolicValue::make_symbol(
                next_++, n.callee + "@" + std::to_string(e.span.start_line) + ":" +
                             std::to_string(e.span.start_col));
            out.events.push_back(PostCallEvent{n.callee, args, ret, ret.region(), e.span});
            return ret;
          }
        },
        e.node);
  }

  Assumption branch(const Cond &c, bool outcome, OraclePath &out) {
    BranchConditionEvent ev;
    ev.cond = &c;
    ev.span = c.span;
    Assumption a;
    if (const auto *n = std::get_if<NotCond>(&c.node)) {
      SymbolicValue v = eval(n->operand, out);
      ev.is_null_test = true;
      ev.tested_region = region_for(n->operand, v);
      a = assume_equality(v, SymbolicValue::make_null(), outcome);
    } else if (const auto *n = std::get_if<TruthyCond>(&c.node)) {
      SymbolicValue v = eval(n->operand, out);
      ev.is_null_test = true;
      ev.tested_region = region_for(n->operand, v);
      a = assume_equality(v, SymbolicValue::make_null(), !outcome);
    } else {
      const auto &cmp = std::get<CmpCond>(c.node);
      SymbolicValue l = eval(cmp.lhs, out);
      SymbolicValue r = eval(cmp.rhs, out);
      const bool want_equal = (cmp.op == CmpOp::Eq) == outcome;
      a = assume_equality(l, r, want_equal);
      const bool ln = cmp.lhs.as<NullLit>() != nullptr;
      const bool rn = cmp.rhs.as<NullLit>() != nullptr;
      if (ln != rn) {
        ev.is_null_test = true;
        ev.tested_region = ln ? region_for(cmp.rhs, r) : region_for(cmp.lhs, l);
      }
    }
    out.events.push_back(ev);
    return a;
  }

  void simple(const minilang::Stmt &s, OraclePath &out) {
    if (const auto *d = s.as<DeclStmt>()) {
      SymbolicValue v = d->init ? eval(*d->init, out) : SymbolicValue::make_unknown();
      mem_[var(d->name)] = v;
      BindEvent ev;
      ev.target = var(d->name);
      ev.value = v;
      if (d->init) ev.value_region = region_for(*d->init, v);
      ev.span = s.span;
      out.events.push_back(ev);
    } else if (const auto *a = s.as<AssignStmt>()) {
      SymbolicValue v = eval(a->value, out);
      auto value_region = region_for(a->value, v);
      if (const auto *d = a->target.as<Deref>()) {
        out.events.push_back(LocationEvent{AccessKind::Store, base_of(d->name), a->target.span});
      } else if (const auto *f = a->target.as<FieldDeref>()) {
        out.events.push_back(LocationEvent{AccessKind::Store, base_of(f->base), a->target.span});
      }
      auto where = place(a->target);
      if (where) mem_[*where] = v;
      BindEvent ev;
      ev.target = where;
      ev.value = v;
      ev.value_region = value_region;
      ev.span = s.span;
      out.events.push_back(ev);
    } else if (const auto *c = s.as<CallStmt>()) {
      eval(c->call, out);
    }
  }

  void dead(const minilang::Block &b, OraclePath &out) {
    std::vector<Region> regions;
    for (const auto &s : b.stmts) {
      if (const auto *d = s.as<DeclStmt>()) regions.push_back(var(d->name));
    }
    if (!regions.empty()) out.events.push_back(DeadSymbolsEvent{std::move(regions), b.span});
  }

  const FunctionDef &fn_;
  std::map<Region, SymbolicValue> mem_;
  std::vector<Literal> lits_;
  SymbolId next_ = 1;
};

class ReplayContext : public CheckerContext {
 public:
  ReplayContext(const std::string &checker,
                std::set<std::tuple<SourceSpan, std::string>> &seen,
                std::vector<Report> &out)
      : checker_(checker), seen_(seen), out_(out) {}

  ProgramState &state() override { return state_; }
  void note(const SourceSpan &, const std::string &, const std::optional<Region> &) override {}
  void report(const std::string &message, const SourceSpan &span,
              const std::optional<Region> &) override {
    if (!seen_.insert({span, message}).second) return;
    Report r;
    r.checker = checker_;
    r.message = message;
    r.span = span;
    r.trace.push_back({span, message});
    out_.push_back(std::move(r));
  }

 private:
  const std::string &checker_;
  std::set<std::tuple<SourceSpan, std::string>> &seen_;
  std::vector<Report> &out_;
  ProgramState state_;
};

}  // namespace

std::vector<OraclePath> enumerate_paths_oracle(const minilang::FunctionDef &fn,
                                               const EngineBudget &budget) {
  if (count_branches(fn) > 6) throw OracleUnsupported("more than 6 branch statements");
  if (max_loop_nesting(fn) > 1) throw OracleUnsupported("nested loops");
  std::vector<Path> paths;
  Path start;
  std::vector<Pending> todo;
  push_block(todo, start, fn.body);
  enumerate(std::move(todo), std::move(start), budget.loop_unroll, paths);

  std::vector<OraclePath> out;
  out.reserve(paths.size());
  for (const auto &p : paths) out.push_back(LinearEval(fn).run(p));
  return out;
}

std::vector<Report> replay_hooks(const std::vector<OraclePath> &paths,
                                 const CheckerHooks &hooks) {
  std::vector<Report> reports;
  std::set<std::tuple<SourceSpan, std::string>> seen;
  for (const auto &path : paths) {
    if (!path.feasible) continue;
    ReplayContext ctx(hooks.name(), seen, reports);
    for (const auto &ev : path.events) hooks.on_event(ev, ctx);
  }
  std::stable_sort(reports.begin(), reports.end(), report_less);
  return reports;
}

}  // namespace kf::engine
