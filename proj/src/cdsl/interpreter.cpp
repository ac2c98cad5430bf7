#include <map>

#include "kf/cdsl/program.hpp"

namespace kf::cdsl {

namespace {

using engine::CheckerContext;
using engine::EngineEvent;
using engine::Region;

using Env = std::map<std::string, Region>;

class Interpreter final : public engine::CheckerHooks {
 public:
  explicit Interpreter(CheckerProgram p) : program_(std::move(p)) {}

  const std::string &name() const override { return program_.name; }

  void on_event(const EngineEvent &ev, CheckerContext &ctx) const override {
    const auto kind = classify(ev);
    if (!kind) return;
    for (const auto &h : program_.handlers) {
      if (h.event != *kind) continue;
      Env env;
      bool pass = true;
      for (const auto &g : h.guards) {
        if (!eval_guard(g, ev, ctx, env)) {
          pass = false;
          break;
        }
      }
      if (!pass) continue;
      for (const auto &a : h.actions) run_action(a, ev, ctx, env);
    }
  }

 private:
  static std::optional<EventKind> classify(const EngineEvent &ev) {
    switch (ev.index()) {
      case 0: return EventKind::PreCall;
      case 1: return EventKind::PostCall;
      case 2: return EventKind::BranchCondition;
      case 3: return EventKind::Location;
      case 4: return EventKind::Bind;
      case 6: return EventKind::EndFunction;
      default: return std::nullopt;
    }
  }

  static const std::vector<engine::ArgInfo> *call_args(const EngineEvent &ev) {
    if (const auto *e = std::get_if<engine::PreCallEvent>(&ev)) return &e->args;
    if (const auto *e = std::get_if<engine::PostCallEvent>(&ev)) return &e->args;
    return nullptr;
  }

  static const std::string *callee(const EngineEvent &ev) {
    if (const auto *e = std::get_if<engine::PreCallEvent>(&ev)) return &e->callee;
    if (const auto *e = std::get_if<engine::PostCallEvent>(&ev)) return &e->callee;
    return nullptr;
  }

  std::optional<Region> eval_region(const RegionExpr &r, const EngineEvent &ev,
                                    const Env &env) const {
    switch (r.kind) {
      case RegionExpr::Kind::ArgRegion: {
        const auto *args = call_args(ev);
        if (!args) return std::nullopt;
        if (r.index < 0 || static_cast<std::size_t>(r.index) >= args->size()) {
          throw CheckerRuntimeError("checker '" + program_.name + "': arg_region(" +
                                    std::to_string(r.index) + ") on a call to '" +
                                    *callee(ev) + "' with " + std::to_string(args->size()) +
                                    " argument(s)");
        }
        return (*args)[r.index].region;
      }
      case RegionExpr::Kind::ReturnRegion:
        if (const auto *e = std::get_if<engine::PostCallEvent>(&ev)) return e->return_region;
        return std::nullopt;
      case RegionExpr::Kind::BaseRegion:
        if (const auto *e = std::get_if<engine::LocationEvent>(&ev)) return e->base;
        return std::nullopt;
      case RegionExpr::Kind::BindTarget:
        if (const auto *e = std::get_if<engine::BindEvent>(&ev)) return e->target;
        return std::nullopt;
      case RegionExpr::Kind::BindValue:
        if (const auto *e = std::get_if<engine::BindEvent>(&ev)) return e->value_region;
        return std::nullopt;
      case RegionExpr::Kind::Binding: {
        auto it = env.find(r.name);
        if (it == env.end()) return std::nullopt;
        return it->second;
      }
    }
    return std::nullopt;
  }

  // Guards read state but never write it; only `env` gains bindings.
  bool eval_guard(const Guard &g, const EngineEvent &ev, CheckerContext &ctx, Env &env) const {
    bool result = false;
    switch (g.kind) {
      case Guard::Kind::CalleeIs: {
        const std::string *c = callee(ev);
        result = c && *c == g.text;
        break;
      }
      case Guard::Kind::ArgCount: {
        const auto *args = call_args(ev);
        result = args && static_cast<int>(args->size()) == g.number;
        break;
      }
      case Guard::Kind::AccessKind:
        if (const auto *e = std::get_if<engine::LocationEvent>(&ev)) {
          result = (e->kind == engine::AccessKind::Load) == (g.text == "load");
        }
        break;
      case Guard::Kind::NullTestOn:
        if (const auto *e = std::get_if<engine::BranchConditionEvent>(&ev)) {
          if (e->is_null_test && e->tested_region) {
            result = true;
            if (!g.negated) env.insert_or_assign(g.text, *e->tested_region);
          }
        }
        break;
      case Guard::Kind::StateIs: {
        auto r = eval_region(g.region, ev, env);
        if (r) {
          const engine::ProgramState &state = ctx.state();
          auto tag = state.get_state(g.map, *r);
          result = tag && *tag == g.tag;
        }
        break;
      }
      case Guard::Kind::ValueIs:
        if (const auto *e = std::get_if<engine::BindEvent>(&ev)) {
          using K = engine::SymbolicValue::Kind;
          const auto &v = e->value;
          if (g.text == "undefined") result = v.kind == K::Unknown;
          if (g.text == "null") result = v.is_zero();
          if (g.text == "symbol") result = v.kind == K::Symbol;
          if (g.text == "concrete") result = v.kind == K::Concrete;
          if (g.text == "address") result = v.kind == K::Address;
        }
        break;
    }
    return g.negated ? !result : result;
  }

  void run_action(const Action &a, const EngineEvent &ev, CheckerContext &ctx,
                  const Env &env) const {
    const auto &span = engine::event_span(ev);
    std::optional<Region> target;
    if (a.region) target = eval_region(*a.region, ev, env);
    switch (a.kind) {
      case Action::Kind::SetState:
        if (!target) return;
        ctx.state().set_state(a.map, *target, a.tag);
        ctx.note(span, a.map + " set to " + a.tag, target);
        return;
      case Action::Kind::MarkAllAliases:
        if (!target) return;
        ctx.state().mark_all_aliases(a.map, *target, a.tag);
        ctx.note(span, a.map + " set to " + a.tag + " on all aliases", target);
        return;
      case Action::Kind::ClearState:
        if (target) ctx.state().clear_state(a.map, *target);
        return;
      case Action::Kind::PropagateAlias: {
        auto source = eval_region(*a.source, ev, env);
        if (!target) return;
        if (!source) {
          ctx.state().clear_alias(*target);
        } else if (*target != *source) {
          ctx.state().set_alias(*target, *source);
        }
        return;
      }
      case Action::Kind::Report:
        ctx.report(program_.find_template(a.template_id)->message, span, target);
        return;
    }
  }

  const CheckerProgram program_;
};

}  // namespace

std::shared_ptr<const engine::CheckerHooks> instantiate_hooks(const CheckerProgram &program) {
  return std::make_shared<const Interpreter>(program);
}

}  // namespace kf::cdsl
