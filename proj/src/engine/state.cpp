#include "kf/engine/state.hpp"

namespace kf::engine {

Region Region::var(const std::string &function, const std::string &name) {
  Region r;
  r.kind_ = Kind::Var;
  r.name_ = name;
  r.key_ = "var:" + function + ":" + name;
  return r;
}

Region Region::sym(SymbolId id) {
  Region r;
  r.kind_ = Kind::Sym;
  r.symbol_ = id;
  r.key_ = "sym:" + std::to_string(id);
  return r;
}

Region Region::field(const Region &parent, const std::string &field) {
  Region r;
  r.kind_ = Kind::Field;
  r.name_ = field;
  r.parent_ = std::make_shared<const Region>(parent);
  r.key_ = "field:(" + parent.key() + ")." + field;
  return r;
}

SymbolicValue SymbolicValue::make_concrete(long long v) {
  SymbolicValue s;
  s.kind = Kind::Concrete;
  s.concrete = v;
  return s;
}

SymbolicValue SymbolicValue::make_null() {
  SymbolicValue s;
  s.kind = Kind::Null;
  return s;
}

SymbolicValue SymbolicValue::make_symbol(SymbolId id, std::string origin) {
  SymbolicValue s;
  s.kind = Kind::Symbol;
  s.symbol = id;
  s.origin = std::move(origin);
  return s;
}

SymbolicValue SymbolicValue::make_unknown() { return SymbolicValue{}; }

SymbolicValue SymbolicValue::make_address(Region r) {
  SymbolicValue s;
  s.kind = Kind::Address;
  s.address = std::move(r);
  return s;
}

std::optional<Region> SymbolicValue::region() const {
  if (kind == Kind::Symbol) return Region::sym(symbol);
  if (kind == Kind::Address) return address;
  return std::nullopt;
}

bool SymbolicValue::is_zero() const {
  return kind == Kind::Null || (kind == Kind::Concrete && concrete == 0);
}

std::string SymbolicValue::to_string() const {
  switch (kind) {
    case Kind::Concrete: return std::to_string(concrete);
    case Kind::Null: return "NULL";
    case Kind::Symbol: return "$" + std::to_string(symbol);
    case Kind::Unknown: return "unknown";
    case Kind::Address: return "&" + address->key();
  }
  return "?";
}

std::string Literal::to_string() const {
  const std::string sa = "$" + std::to_string(a);
  const std::string sb = "$" + std::to_string(b);
  switch (kind) {
    case Kind::IsNull: return sa + " == NULL";
    case Kind::NonNull: return sa + " != NULL";
    case Kind::Eq: return sa + " == " + sb;
    case Kind::Neq: return sa + " != " + sb;
  }
  return "?";
}

Assumption assume_equality(const SymbolicValue &lhs, const SymbolicValue &rhs,
                           bool want_equal) {
  using K = SymbolicValue::Kind;
  auto constant = [&](bool equal) {
    return Assumption{equal == want_equal ? Assumption::Kind::Trivial
                                          : Assumption::Kind::Contradiction,
                      {}};
  };
  auto constrain = [](Literal::Kind k, SymbolId a, SymbolId b = 0) {
    return Assumption{Assumption::Kind::Constrain, Literal{k, a, b}};
  };
  auto integral = [](const SymbolicValue &v) {
    return v.kind == K::Concrete || v.kind == K::Null;
  };

  if (lhs.kind == K::Unknown || rhs.kind == K::Unknown) return {};
  if (integral(lhs) && integral(rhs)) {
    const long long a = lhs.kind == K::Null ? 0 : lhs.concrete;
    const long long b = rhs.kind == K::Null ? 0 : rhs.concrete;
    return constant(a == b);
  }
  if (lhs.kind == K::Address && rhs.kind == K::Address) {
    return constant(*lhs.address == *rhs.address);
  }
  if ((lhs.kind == K::Address && integral(rhs)) ||
      (rhs.kind == K::Address && integral(lhs))) {
    return constant(false);
  }
  if (lhs.kind == K::Symbol && rhs.kind == K::Symbol) {
    return constrain(want_equal ? Literal::Kind::Eq : Literal::Kind::Neq,
                     lhs.symbol, rhs.symbol);
  }
  // Exactly one side is a symbol.
  const SymbolicValue &sym = lhs.kind == K::Symbol ? lhs : rhs;
  const SymbolicValue &other = lhs.kind == K::Symbol ? rhs : lhs;
  if (other.is_zero()) {
    return constrain(want_equal ? Literal::Kind::IsNull : Literal::Kind::NonNull,
                     sym.symbol);
  }
  // Equal to a non-zero integer or an address implies non-null; the
  // disequality carries no information in this domain.
  if (want_equal) return constrain(Literal::Kind::NonNull, sym.symbol);
  return {};
}

SymbolId ProgramState::find(SymbolId s) const {
  auto it = eq_parent_.find(s);
  while (it != eq_parent_.end() && it->second != s) {
    s = it->second;
    it = eq_parent_.find(s);
  }
  return s;
}

Nullness ProgramState::nullness(SymbolId s) const {
  auto it = nullness_.find(find(s));
  return it == nullness_.end() ? Nullness::Unconstrained : it->second;
}

bool ProgramState::must_equal(SymbolId a, SymbolId b) const {
  return find(a) == find(b);
}

bool ProgramState::assume(const Literal &lit) {
  const SymbolId ra = find(lit.a);
  switch (lit.kind) {
    case Literal::Kind::IsNull: {
      const Nullness cur = nullness(ra);
      if (cur == Nullness::MustNonNull) return false;
      if (cur == Nullness::MustNull) return true;
      // NULL is a single value: two null classes cannot be distinct.
      for (const auto &[x, y] : neq_) {
        const SymbolId rx = find(x);
        const SymbolId ry = find(y);
        if ((rx == ra && nullness(ry) == Nullness::MustNull) ||
            (ry == ra && nullness(rx) == Nullness::MustNull)) {
          return false;
        }
      }
      nullness_[ra] = Nullness::MustNull;
      return true;
    }
    case Literal::Kind::NonNull: {
      const Nullness cur = nullness(ra);
      if (cur == Nullness::MustNull) return false;
      nullness_[ra] = Nullness::MustNonNull;
      return true;
    }
    case Literal::Kind::Eq: {
      const SymbolId rb = find(lit.b);
      if (ra == rb) return true;
      const Nullness na = nullness(ra);
      const Nullness nb = nullness(rb);
      if ((na == Nullness::MustNull && nb == Nullness::MustNonNull) ||
          (na == Nullness::MustNonNull && nb == Nullness::MustNull)) {
        return false;
      }
      const bool merged_null = na == Nullness::MustNull || nb == Nullness::MustNull;
      for (const auto &[x, y] : neq_) {
        const SymbolId rx = find(x);
        const SymbolId ry = find(y);
        if ((rx == ra && ry == rb) || (rx == rb && ry == ra)) return false;
        if (merged_null) {
          const bool x_in = rx == ra || rx == rb;
          const bool y_in = ry == ra || ry == rb;
          if ((x_in && nullness(ry) == Nullness::MustNull) ||
              (y_in && nullness(rx) == Nullness::MustNull)) {
            return false;
          }
        }
      }
      // Union: the smaller id stays representative.
      const SymbolId root = std::min(ra, rb);
      const SymbolId child = std::max(ra, rb);
      eq_parent_[child] = root;
      const Nullness merged = na != Nullness::Unconstrained ? na : nb;
      nullness_.erase(child);
      if (merged != Nullness::Unconstrained) nullness_[root] = merged;
      return true;
    }
    case Literal::Kind::Neq: {
      const SymbolId rb = find(lit.b);
      if (ra == rb) return false;
      if (nullness(ra) == Nullness::MustNull && nullness(rb) == Nullness::MustNull) {
        return false;
      }
      neq_.insert({std::min(lit.a, lit.b), std::max(lit.a, lit.b)});
      return true;
    }
  }
  return false;
}

bool ProgramState::apply(const Assumption &a) {
  switch (a.kind) {
    case Assumption::Kind::Trivial: return true;
    case Assumption::Kind::Contradiction: return false;
    case Assumption::Kind::Constrain: return assume(a.literal);
  }
  return false;
}

Region ProgramState::representative(const Region &r) const {
  const Region *cur = &r;
  auto it = alias_map_.find(*cur);
  while (it != alias_map_.end()) {
    cur = &it->second;
    it = alias_map_.find(*cur);
  }
  return *cur;
}

void ProgramState::set_alias(const Region &lhs, const Region &rhs) {
  const Region root = representative(rhs);
  if (representative(lhs) == root) return;
  if (lhs == root) return;
  alias_map_.insert_or_assign(lhs, root);
}

void ProgramState::clear_alias(const Region &r) { alias_map_.erase(r); }

std::vector<Region> ProgramState::alias_class(const Region &r) const {
  const Region rep = representative(r);
  std::vector<Region> out{rep};
  for (const auto &[from, to] : alias_map_) {
    if (from != rep && representative(from) == rep) out.push_back(from);
  }
  return out;
}

std::optional<std::string> ProgramState::get_state(const std::string &map,
                                                   const Region &r) const {
  auto it = checker_store_.find({map, representative(r)});
  if (it == checker_store_.end()) return std::nullopt;
  return it->second;
}

void ProgramState::set_state(const std::string &map, const Region &r,
                             const std::string &tag) {
  checker_store_.insert_or_assign({map, representative(r)}, tag);
}

void ProgramState::clear_state(const std::string &map, const Region &r) {
  checker_store_.erase({map, representative(r)});
}

void ProgramState::mark_all_aliases(const std::string &map, const Region &r,
                                    const std::string &tag) {
  for (const auto &member : alias_class(r)) {
    checker_store_.insert_or_assign({map, member}, tag);
  }
}

std::optional<std::string> ProgramState::check_invariants() const {
  for (const auto &[from, to] : alias_map_) {
    std::set<Region> seen{from};
    const Region *cur = &to;
    for (;;) {
      if (!seen.insert(*cur).second) return "alias cycle through " + from.key();
      auto it = alias_map_.find(*cur);
      if (it == alias_map_.end()) break;
      cur = &it->second;
    }
  }
  for (const auto &[x, y] : neq_) {
    if (find(x) == find(y)) {
      return "symbols $" + std::to_string(x) + " and $" + std::to_string(y) +
             " are both equal and distinct";
    }
  }
  return std::nullopt;
}

}  // namespace kf::engine
