#include "kf/engine/engine.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "kf/minilang/parser.hpp"

namespace kf::engine {

std::string_view event_name(const EngineEvent &e) {
  static constexpr std::string_view kNames[] = {
      "pre_call", "post_call", "branch_condition", "location",
      "bind",     "dead_symbols", "end_function"};
  return kNames[e.index()];
}

const SourceSpan &event_span(const EngineEvent &e) {
  return std::visit([](const auto &ev) -> const SourceSpan & { return ev.span; }, e);
}

bool report_less(const Report &a, const Report &b) {
  return std::tie(a.span.file, a.span.start_line, a.span.start_col, a.message,
                  a.checker, a.span.end_line, a.span.end_col) <
         std::tie(b.span.file, b.span.start_line, b.span.start_col, b.message,
                  b.checker, b.span.end_line, b.span.end_col);
}

namespace {

using namespace minilang;

struct HistoryEntry {
  SourceSpan span;
  std::string note;
  std::optional<Region> region;  // nullopt for branch assumptions
};

struct WorkItem {
  enum class Kind { Stmt, Block, ExitScope, LoopHead };
  Kind kind = Kind::Stmt;
  const minilang::Stmt *stmt = nullptr;
  const minilang::Block *block = nullptr;
  const WhileStmt *loop = nullptr;
  int iteration = 0;
};

/// A program point (the pending continuation) paired with its state.
struct ExplodedNode {
  ProgramState state;
  std::vector<WorkItem> continuation;  // back() executes next
  std::vector<HistoryEntry> history;
};

class Explorer {
 public:
  Explorer(const FunctionDef &fn, const CheckerHooks &hooks, EngineBudget budget)
      : fn_(fn), hooks_(hooks), budget_(budget) {}

  AnalysisResult run() {
    ExplodedNode root;
    for (const auto &p : fn_.params) {
      root.state.bindings.insert_or_assign(
          var(p.name), SymbolicValue::make_symbol(next_symbol_++, "param:" + p.name));
    }
    WorkItem body;
    body.kind = WorkItem::Kind::Block;
    body.block = &fn_.body;
    root.continuation.push_back(body);
    worklist_.push_back(std::move(root));

    while (!worklist_.empty() && !truncated_) {
      ExplodedNode node = std::move(worklist_.back());
      worklist_.pop_back();
      run_path(std::move(node));
    }

    AnalysisResult result;
    result.reports = std::move(reports_);
    std::stable_sort(result.reports.begin(), result.reports.end(), report_less);
    result.truncated = truncated_;
    result.nodes = nodes_;
    return result;
  }

 private:
  class Ctx : public CheckerContext {
   public:
    Ctx(ExplodedNode &node, Explorer &ex) : node_(node), ex_(ex) {}
    ProgramState &state() override { return node_.state; }
    void note(const SourceSpan &span, const std::string &text,
              const std::optional<Region> &region) override {
      node_.history.push_back({span, text, region});
    }
    void report(const std::string &message, const SourceSpan &span,
                const std::optional<Region> &region) override {
      ex_.add_report(node_, message, span, region);
    }

   private:
    ExplodedNode &node_;
    Explorer &ex_;
  };

  Region var(const std::string &name) const { return Region::var(fn_.name, name); }

  void add_report(const ExplodedNode &node, const std::string &message,
                  const SourceSpan &span, const std::optional<Region> &region) {
    auto key = std::make_tuple(hooks_.name(), span, message);
    if (!seen_.insert(key).second) return;
    Report r;
    r.checker = hooks_.name();
    r.message = message;
    r.span = span;
    const std::optional<Region> rep =
        region ? std::optional<Region>(node.state.representative(*region)) : std::nullopt;
    for (const auto &h : node.history) {
      bool relevant = !h.region.has_value();
      if (h.region && rep) relevant = node.state.representative(*h.region) == *rep;
      if (relevant && h.span != span) r.trace.push_back({h.span, h.note});
    }
    r.trace.push_back({span, message});
    reports_.push_back(std::move(r));
  }

  void dispatch(ExplodedNode &node, const EngineEvent &ev) {
    Ctx ctx(node, *this);
    hooks_.on_event(ev, ctx);
  }

  bool count_node() {
    if (++nodes_ > budget_.max_nodes) {
      truncated_ = true;
      return false;
    }
    return true;
  }

  SymbolicValue lookup(const ExplodedNode &node, const std::string &name) const {
    auto it = node.state.bindings.find(var(name));
    return it == node.state.bindings.end() ? SymbolicValue::make_unknown() : it->second;
  }

  std::optional<Region> pointee(const ExplodedNode &node, const std::string &name) const {
    return lookup(node, name).region();
  }

  /// Base region reported to checkers for `*name` / `name->f`.
  std::optional<Region> location_base(const ExplodedNode &node, const std::string &name) const {
    const SymbolicValue v = lookup(node, name);
    if (auto r = v.region()) return r;
    if (v.kind == SymbolicValue::Kind::Unknown) return var(name);
    return std::nullopt;
  }

  std::optional<Region> storage(const ExplodedNode &node, const Expr &e) const {
    if (const auto *v = e.as<VarRef>()) return var(v->name);
    if (const auto *d = e.as<Deref>()) return pointee(node, d->name);
    if (const auto *f = e.as<FieldDeref>()) {
      if (auto base = pointee(node, f->base)) return Region::field(*base, f->field);
    }
    return std::nullopt;
  }

  // Values with a pointee report it; an unknown value falls back to the
  // storage it was read from; NULL and integers have no region.
  std::optional<Region> checker_region(const ExplodedNode &node, const Expr &e,
                                       const SymbolicValue &v) const {
    if (auto r = v.region()) return r;
    if (v.kind == SymbolicValue::Kind::Unknown) return storage(node, e);
    return std::nullopt;
  }

  SymbolicValue load(ExplodedNode &node, const std::optional<Region> &where) {
    if (!where) return SymbolicValue::make_unknown();
    auto it = node.state.bindings.find(*where);
    if (it != node.state.bindings.end()) return it->second;
    SymbolicValue fresh = SymbolicValue::make_symbol(next_symbol_++, "load:" + where->key());
    node.state.bindings.insert_or_assign(*where, fresh);
    return fresh;
  }

  SymbolicValue eval(ExplodedNode &node, const Expr &e) {
    if (const auto *n = e.as<IntLit>()) return SymbolicValue::make_concrete(n->value);
    if (e.as<NullLit>()) return SymbolicValue::make_null();
    if (const auto *n = e.as<VarRef>()) return lookup(node, n->name);
    if (const auto *n = e.as<AddrOf>()) return SymbolicValue::make_address(var(n->name));
    if (const auto *n = e.as<Deref>()) {
      dispatch(node, LocationEvent{AccessKind::Load, location_base(node, n->name), e.span});
      return load(node, pointee(node, n->name));
    }
    if (const auto *n = e.as<FieldDeref>()) {
      dispatch(node, LocationEvent{AccessKind::Load, location_base(node, n->base), e.span});
      return load(node, storage(node, e));
    }
    const auto &call = std::get<CallExpr>(e.node);
    std::vector<ArgInfo> args;
    for (const auto &a : call.args) {
      SymbolicValue v = eval(node, a);
      args.push_back({v, checker_region(node, a, v), a.span});
    }
    dispatch(node, PreCallEvent{call.callee, args, e.span});
    SymbolicValue ret = SymbolicValue::make_symbol(
        next_symbol_++, call.callee + "@" + std::to_string(e.span.start_line) + ":" +
                            std::to_string(e.span.start_col));
    dispatch(node, PostCallEvent{call.callee, std::move(args), ret, ret.region(), e.span});
    return ret;
  }

  void bind(ExplodedNode &node, const std::optional<Region> &where, const SymbolicValue &v) {
    if (where) node.state.bindings.insert_or_assign(*where, v);
  }

  std::vector<Region> block_decls(const minilang::Block &b) const {
    std::vector<Region> out;
    for (const auto &s : b.stmts) {
      if (const auto *d = s.as<DeclStmt>()) out.push_back(var(d->name));
    }
    return out;
  }

  void finish(ExplodedNode &node, const SourceSpan &span) {
    // Close every scope still open on this path, innermost first.
    for (auto it = node.continuation.rbegin(); it != node.continuation.rend(); ++it) {
      if (it->kind == WorkItem::Kind::ExitScope) {
        auto regions = block_decls(*it->block);
        if (!regions.empty()) dispatch(node, DeadSymbolsEvent{std::move(regions), it->block->span});
      }
    }
    node.continuation.clear();
    dispatch(node, EndFunctionEvent{span});
  }

  /// Evaluates `cond`, fires BranchCondition and queues the feasible
  /// successors. `on_true`/`on_false` are pushed onto each successor's
  /// continuation.
  void branch(ExplodedNode &node, const Cond &cond, std::vector<WorkItem> on_true,
              std::vector<WorkItem> on_false) {
    BranchConditionEvent ev;
    ev.cond = &cond;
    ev.span = cond.span;
    Assumption when_true;
    Assumption when_false;
    auto null_test = [&](const Expr &operand, bool true_means_null) {
      SymbolicValue v = eval(node, operand);
      ev.is_null_test = true;
      ev.tested_region = checker_region(node, operand, v);
      when_true = assume_equality(v, SymbolicValue::make_null(), true_means_null);
      when_false = assume_equality(v, SymbolicValue::make_null(), !true_means_null);
    };
    if (const auto *n = std::get_if<NotCond>(&cond.node)) {
      null_test(n->operand, true);
    } else if (const auto *n = std::get_if<TruthyCond>(&cond.node)) {
      null_test(n->operand, false);
    } else {
      const auto &c = std::get<CmpCond>(cond.node);
      SymbolicValue lhs = eval(node, c.lhs);
      SymbolicValue rhs = eval(node, c.rhs);
      const bool eq = c.op == CmpOp::Eq;
      when_true = assume_equality(lhs, rhs, eq);
      when_false = assume_equality(lhs, rhs, !eq);
      const bool lhs_null = c.lhs.as<NullLit>() != nullptr;
      const bool rhs_null = c.rhs.as<NullLit>() != nullptr;
      if (lhs_null != rhs_null) {
        ev.is_null_test = true;
        ev.tested_region =
            lhs_null ? checker_region(node, c.rhs, rhs) : checker_region(node, c.lhs, lhs);
      }
    }
    dispatch(node, ev);

    const std::string text = pretty_print(cond);
    auto make = [&](const Assumption &a, std::vector<WorkItem> &items, bool outcome)
        -> std::optional<ExplodedNode> {
      ExplodedNode succ = node;
      if (!succ.state.apply(a)) return std::nullopt;
      succ.history.push_back(
          {cond.span, "Assuming '" + text + "' is " + (outcome ? "true" : "false"),
           std::nullopt});
      for (auto &it : items) succ.continuation.push_back(it);
      return succ;
    };
    auto t = make(when_true, on_true, true);
    auto f = make(when_false, on_false, false);
    // Stack discipline: the true successor is explored first.
    if (f) worklist_.push_back(std::move(*f));
    if (t) worklist_.push_back(std::move(*t));
  }

  void run_path(ExplodedNode node) {
    for (;;) {
      if (node.continuation.empty()) {
        finish(node, fn_.span);
        return;
      }
      WorkItem item = node.continuation.back();
      node.continuation.pop_back();
      switch (item.kind) {
        case WorkItem::Kind::Block: {
          WorkItem exit;
          exit.kind = WorkItem::Kind::ExitScope;
          exit.block = item.block;
          node.continuation.push_back(exit);
          for (auto it = item.block->stmts.rbegin(); it != item.block->stmts.rend(); ++it) {
            WorkItem s;
            s.stmt = &*it;
            node.continuation.push_back(s);
          }
          break;
        }
        case WorkItem::Kind::ExitScope: {
          auto regions = block_decls(*item.block);
          if (!regions.empty()) {
            dispatch(node, DeadSymbolsEvent{std::move(regions), item.block->span});
          }
          break;
        }
        case WorkItem::Kind::LoopHead: {
          if (!count_node()) return;
          if (item.iteration >= budget_.loop_unroll) break;
          WorkItem next = item;
          ++next.iteration;
          WorkItem body;
          body.kind = WorkItem::Kind::Block;
          body.block = &item.loop->body;
          branch(node, item.loop->cond, {next, body}, {});
          return;
        }
        case WorkItem::Kind::Stmt: {
          if (!count_node()) return;
          if (!exec(node, *item.stmt)) return;
          break;
        }
      }
    }
  }

  /// Returns false when the path ended or was handed to the worklist.
  bool exec(ExplodedNode &node, const minilang::Stmt &s) {
    if (const auto *n = s.as<minilang::Block>()) {
      WorkItem b;
      b.kind = WorkItem::Kind::Block;
      b.block = n;
      node.continuation.push_back(b);
      return true;
    }
    if (const auto *n = s.as<DeclStmt>()) {
      SymbolicValue v = n->init ? eval(node, *n->init) : SymbolicValue::make_unknown();
      const Region where = var(n->name);
      bind(node, where, v);
      BindEvent ev;
      ev.target = where;
      ev.value = v;
      if (n->init) ev.value_region = checker_region(node, *n->init, v);
      ev.span = s.span;
      dispatch(node, ev);
      return true;
    }
    if (const auto *n = s.as<AssignStmt>()) {
      SymbolicValue v = eval(node, n->value);
      std::optional<Region> value_region = checker_region(node, n->value, v);
      if (const auto *d = n->target.as<Deref>()) {
        dispatch(node, LocationEvent{AccessKind::Store, location_base(node, d->name),
                                     n->target.span});
      } else if (const auto *f = n->target.as<FieldDeref>()) {
        dispatch(node, LocationEvent{AccessKind::Store, location_base(node, f->base),
                                     n->target.span});
      }
      const std::optional<Region> where = storage(node, n->target);
      bind(node, where, v);
      BindEvent ev;
      ev.target = where;
      ev.value = v;
      ev.value_region = value_region;
      ev.span = s.span;
      dispatch(node, ev);
      return true;
    }
    if (const auto *n = s.as<CallStmt>()) {
      eval(node, n->call);
      return true;
    }
    if (const auto *n = s.as<ReturnStmt>()) {
      if (n->value) eval(node, *n->value);
      finish(node, s.span);
      return false;
    }
    if (const auto *n = s.as<IfStmt>()) {
      WorkItem then_item;
      then_item.stmt = &*n->then_branch;
      std::vector<WorkItem> on_false;
      if (n->else_branch) {
        WorkItem else_item;
        else_item.stmt = &**n->else_branch;
        on_false.push_back(else_item);
      }
      branch(node, n->cond, {then_item}, std::move(on_false));
      return false;
    }
    const auto &w = std::get<WhileStmt>(s.node);
    WorkItem head;
    head.kind = WorkItem::Kind::LoopHead;
    head.loop = &w;
    node.continuation.push_back(head);
    return true;
  }

  const FunctionDef &fn_;
  const CheckerHooks &hooks_;
  EngineBudget budget_;
  SymbolId next_symbol_ = 1;
  std::size_t nodes_ = 0;
  bool truncated_ = false;
  std::vector<ExplodedNode> worklist_;
  std::vector<Report> reports_;
  std::set<std::tuple<std::string, SourceSpan, std::string>> seen_;
};

}  // namespace

AnalysisResult analyze_function(const minilang::FunctionDef &fn,
                                const CheckerHooks &hooks, const EngineBudget &budget) {
  if (budget.max_nodes < 1 || budget.loop_unroll < 1) {
    throw PreconditionViolation("engine budget values must be >= 1");
  }
  Explorer ex(fn, hooks, budget);
  return ex.run();
}

}  // namespace kf::engine
