#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace kf::engine {

using SymbolId = std::uint64_t;

/// An abstract memory location. Regions compare and order by a canonical
/// key, e.g. `var:f:p`, `sym:3`, `field:(sym:3).next`.
class Region {
 public:
  enum class Kind { Var, Sym, Field };

  static Region var(const std::string &function, const std::string &name);
  static Region sym(SymbolId id);
  static Region field(const Region &parent, const std::string &field);

  Kind kind() const { return kind_; }
  const std::string &key() const { return key_; }
  SymbolId symbol() const { return symbol_; }
  const std::string &name() const { return name_; }
  const Region *parent() const { return parent_.get(); }

  friend bool operator==(const Region &a, const Region &b) { return a.key_ == b.key_; }
  friend std::strong_ordering operator<=>(const Region &a, const Region &b) {
    return a.key_ <=> b.key_;
  }

 private:
  Region() = default;
  Kind kind_ = Kind::Var;
  std::string key_;
  std::string name_;  // variable or field name
  SymbolId symbol_ = 0;
  std::shared_ptr<const Region> parent_;
};

struct SymbolicValue {
  enum class Kind { Concrete, Null, Symbol, Unknown, Address };

  Kind kind = Kind::Unknown;
  long long concrete = 0;
  SymbolId symbol = 0;
  std::string origin;  // where a symbol was conjured, e.g. "devm_kzalloc@3:14"
  std::optional<Region> address;

  static SymbolicValue make_concrete(long long v);
  static SymbolicValue make_null();
  static SymbolicValue make_symbol(SymbolId id, std::string origin);
  static SymbolicValue make_unknown();
  static SymbolicValue make_address(Region r);

  /// The region this value points to, when it is a pointer with a known
  /// target: SymRegion for symbols, the region itself for addresses.
  std::optional<Region> region() const;
  /// True for Concrete(0) and Null.
  bool is_zero() const;
  std::string to_string() const;
};

enum class Nullness { Unconstrained, MustNull, MustNonNull };

/// A constraint literal over symbols.
struct Literal {
  enum class Kind { IsNull, NonNull, Eq, Neq };
  Kind kind = Kind::IsNull;
  SymbolId a = 0;
  SymbolId b = 0;

  std::string to_string() const;
};

/// What assuming a comparison outcome means for the constraint store.
struct Assumption {
  enum class Kind { Trivial, Contradiction, Constrain };
  Kind kind = Kind::Trivial;
  Literal literal;
};

/// Semantics of assuming `lhs == rhs` (want_equal) or `lhs != rhs`.
/// Null and Concrete(0) are the same value; addresses are never zero and
/// never equal to an integer; Unknown yields no information.
Assumption assume_equality(const SymbolicValue &lhs, const SymbolicValue &rhs,
                           bool want_equal);

/// Abstract state along one path.
class ProgramState {
 public:
  // Region contents.
  std::map<Region, SymbolicValue> bindings;

  // --- Constraints (nullness + symbol equality) ---
  Nullness nullness(SymbolId s) const;
  bool must_equal(SymbolId a, SymbolId b) const;
  /// Adds `lit`; returns false (leaving the state unchanged) if the
  /// result would be inconsistent.
  bool assume(const Literal &lit);
  bool apply(const Assumption &a);

  // --- Checker store and alias map ---
  /// Follows the alias map to the class representative.
  Region representative(const Region &r) const;
  /// Makes `lhs` an alias of `rhs`'s representative. No-op when they
  /// already share a representative.
  void set_alias(const Region &lhs, const Region &rhs);
  /// Drops `r`'s own alias link, if any.
  void clear_alias(const Region &r);
  /// Every region whose representative equals `r`'s, including it.
  std::vector<Region> alias_class(const Region &r) const;

  std::optional<std::string> get_state(const std::string &map, const Region &r) const;
  void set_state(const std::string &map, const Region &r, const std::string &tag);
  void clear_state(const std::string &map, const Region &r);
  /// Sets the tag on every member of `r`'s alias class.
  void mark_all_aliases(const std::string &map, const Region &r,
                        const std::string &tag);

  const std::map<std::pair<std::string, Region>, std::string> &checker_store() const {
    return checker_store_;
  }
  const std::map<Region, Region> &alias_map() const { return alias_map_; }

  /// Checks the structural invariants; returns a description of the
  /// first violation or nullopt.
  std::optional<std::string> check_invariants() const;

 private:
  SymbolId find(SymbolId s) const;

  std::map<SymbolId, SymbolId> eq_parent_;
  std::map<SymbolId, Nullness> nullness_;  // keyed by class representative
  std::set<std::pair<SymbolId, SymbolId>> neq_;
  std::map<std::pair<std::string, Region>, std::string> checker_store_;
  std::map<Region, Region> alias_map_;
};

}  // namespace kf::engine
