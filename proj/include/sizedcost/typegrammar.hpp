#pragma once

#include <functional>
#include <set>

#include "sizedcost/costexpr.hpp"
#include "sizedcost/term.hpp"

namespace sizedcost {

// A grammar maps each type symbol to its alternatives (one rhs term per
// rule).  The base type "num" is implicit and always defined.
using Grammar = std::map<std::string, std::vector<Term>>;

// Subterm position relative to the parent symbol: either the top of the
// argument (empty functor) or the n-th argument of constructor f, 1-based.
struct TypePos {
  std::string functor;
  int idx = 0;
  bool is_top() const { return functor.empty(); }
};

// A sized-type schema tree.  Bounds are symbolic cost expressions; at
// derivation time they are single fresh variables, while computed output
// schemas carry arbitrary expressions.  Null bounds mean "no bound"
// (an unpopulated position).
struct Schema {
  enum class K { Base, RecSym, NonRecSym };

  K k = K::Base;
  std::string symbol;
  TypePos pos;
  ExprP lower, upper;  // both null = nob
  std::vector<Schema> args;

  bool has_bounds() const { return lower != nullptr; }
};

// Same tree shape with bounds measured on one concrete term.  At a
// recursive position lo == hi; at a num position they are the min/max
// element values; unpopulated positions stay nob.
struct ConcreteSize {
  std::string symbol;
  TypePos pos;
  bool carries_bounds = false;  // node kind admits bounds at all
  bool populated = false;
  Rat lo, hi;
  std::vector<ConcreteSize> args;
};

struct TypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void rhs_symbols(const Term& rhs, const Grammar& g,
                        std::set<std::string>& out) {
  if (rhs.is_atom() && g.count(rhs.name)) {
    out.insert(rhs.name);
    return;
  }
  for (auto& a : rhs.args) rhs_symbols(a, g, out);
}

}  // namespace detail

inline bool is_recursive_symbol(const Grammar& g, const std::string& sym) {
  auto it = g.find(sym);
  if (it == g.end()) throw TypeError("undefined type symbol: " + sym);
  // reachability closure over the rule graph
  std::set<std::string> reach, frontier{sym};
  while (!frontier.empty()) {
    std::string s = *frontier.begin();
    frontier.erase(frontier.begin());
    for (auto& rhs : g.at(s)) {
      std::set<std::string> next;
      detail::rhs_symbols(rhs, g, next);
      for (auto& n : next) {
        if (n == sym) return true;
        if (reach.insert(n).second && g.count(n)) frontier.insert(n);
      }
    }
  }
  return false;
}

// Supplies fresh (lower, upper) bound-variable pairs.
struct VarSupply {
  std::string lo_prefix = "a", hi_prefix = "b";
  int k = 0;
  std::pair<std::string, std::string> next() {
    ++k;
    return {lo_prefix + std::to_string(k), hi_prefix + std::to_string(k)};
  }
};

namespace detail {

inline Schema derive_schema_at(const Grammar& g, const std::string& sym,
                               VarSupply& supply, TypePos pos,
                               std::set<std::string>& path) {
  Schema s;
  s.pos = pos;
  s.symbol = sym;
  if (sym == "num" && !g.count("num")) {
    s.k = Schema::K::Base;
    auto [lo, hi] = supply.next();
    s.lower = ex_var(lo);
    s.upper = ex_var(hi);
    return s;
  }
  auto it = g.find(sym);
  if (it == g.end()) throw TypeError("undefined type symbol: " + sym);

  bool rec = is_recursive_symbol(g, sym);
  s.k = rec ? Schema::K::RecSym : Schema::K::NonRecSym;
  if (rec) {
    auto [lo, hi] = supply.next();
    s.lower = ex_var(lo);
    s.upper = ex_var(hi);
  }
  // determinism check: alternatives must have distinct outermost functors
  std::set<std::string> heads;
  for (auto& rhs : it->second) {
    std::string key = rhs.is_comp() ? rhs.functor_key() : "?";
    if (!heads.insert(key).second)
      throw TypeError("non-deterministic grammar for symbol " + sym);
  }
  path.insert(sym);
  for (auto& rhs : it->second) {
    if (!rhs.is_comp() || rhs.args.empty()) continue;  // constant alternative
    for (size_t i = 0; i < rhs.args.size(); ++i) {
      const Term& a = rhs.args[i];
      if (!a.is_atom())
        throw TypeError("nested constructor in grammar rhs for " + sym);
      if (a.name == sym) continue;  // the recursive spine itself
      if (path.count(a.name)) continue;  // mutual recursion: spine partner
      if (a.name == "num" || g.count(a.name)) {
        TypePos p{rhs.name, (int)i + 1};
        s.args.push_back(derive_schema_at(g, a.name, supply, p, path));
      } else {
        throw TypeError("unknown symbol " + a.name + " in rules for " + sym);
      }
    }
  }
  path.erase(sym);
  return s;
}

}  // namespace detail

inline Schema derive_sized_schema(const Grammar& g, const std::string& sym,
                                  VarSupply& supply) {
  std::set<std::string> path;
  return detail::derive_schema_at(g, sym, supply, TypePos{}, path);
}

// Pre-order list of (lower, upper) bound-variable pairs of a freshly
// derived schema; the canonical naming of analysis results follows this
// order.
inline void schema_bound_vars(const Schema& s,
                              std::vector<std::pair<std::string, std::string>>& out) {
  if (s.has_bounds()) out.push_back({s.lower->name, s.upper->name});
  for (auto& a : s.args) schema_bound_vars(a, out);
}

// ---------------------------------------------------------------------------
// Concrete measurement

namespace detail {

inline ConcreteSize skeleton_of(const Schema& s) {
  ConcreteSize c;
  c.symbol = s.symbol;
  c.pos = s.pos;
  c.carries_bounds = s.has_bounds();
  for (auto& a : s.args) c.args.push_back(skeleton_of(a));
  return c;
}

inline void merge_value(ConcreteSize& c, const Rat& v) {
  if (!c.populated) {
    c.populated = true;
    c.lo = c.hi = v;
  } else {
    c.lo = Rat::min(c.lo, v);
    c.hi = Rat::max(c.hi, v);
  }
}

inline const Term* match_rule(const Grammar& g, const std::string& sym,
                              const Term& t) {
  for (auto& rhs : g.at(sym)) {
    if (rhs.is_atom() && t.is_atom(rhs.name)) return &rhs;
    if (rhs.is_comp() && !rhs.args.empty() && t.is_comp() &&
        t.name == rhs.name && t.args.size() == rhs.args.size())
      return &rhs;
  }
  return nullptr;
}

inline void measure_at(const Grammar& g, const Schema& s, ConcreteSize& c,
                       const Term& t) {
  if (s.k == Schema::K::Base) {
    if (!t.is_num()) throw TypeError("expected a number, found " + term_to_string(t));
    merge_value(c, Rat(t.num));
    return;
  }
  auto descend = [&](const Term& rhs, const Term& node) {
    for (size_t i = 0; i < rhs.args.size(); ++i) {
      const Term& spec = rhs.args[i];
      if (spec.is_atom(s.symbol)) continue;  // handled by the spine walk
      for (size_t j = 0; j < s.args.size(); ++j) {
        if (c.args[j].pos.functor == rhs.name && c.args[j].pos.idx == (int)i + 1) {
          measure_at(g, s.args[j], c.args[j], node.args[i]);
          break;
        }
      }
    }
  };
  if (s.k == Schema::K::NonRecSym) {
    const Term* rhs = match_rule(g, s.symbol, t);
    if (!rhs) throw TypeError("term not in type " + s.symbol + ": " + term_to_string(t));
    if (rhs->is_comp() && !rhs->args.empty()) descend(*rhs, t);
    return;
  }
  // recursive symbol: count rule applications along the spine
  const Term* node = &t;
  long long count = 0;
  for (;;) {
    const Term* rhs = match_rule(g, s.symbol, *node);
    if (!rhs)
      throw TypeError("term not in type " + s.symbol + ": " + term_to_string(*node));
    const Term* next = nullptr;
    if (rhs->is_comp() && !rhs->args.empty()) {
      int selfs = 0;
      for (size_t i = 0; i < rhs->args.size(); ++i)
        if (rhs->args[i].is_atom(s.symbol)) {
          ++selfs;
          next = &node->args[i];
        }
      if (selfs > 1) throw TypeError("non-linear recursion in type " + s.symbol);
      descend(*rhs, *node);
    }
    if (!next) break;
    ++count;  // applied a recursive rule
    node = next;
  }
  merge_value(c, Rat(count));
}

}  // namespace detail

inline ConcreteSize measure_term(const Grammar& g, const Schema& schema,
                                 const Term& t) {
  ConcreteSize c = detail::skeleton_of(schema);
  detail::measure_at(g, schema, c, t);
  return c;
}

inline ConcreteSize measure_term(const Grammar& g, const std::string& sym,
                                 const Term& t) {
  VarSupply supply;
  return measure_term(g, derive_sized_schema(g, sym, supply), t);
}

// ---------------------------------------------------------------------------
// Pretty printers

namespace detail {

inline std::string display_symbol(const std::string& sym) {
  if (sym == "num") return "n";
  if (sym == "listnum") return "ln";
  return sym;
}

inline std::string pos_tag(const TypePos& p) {
  if (p.is_top()) return "";
  return "<" + p.functor + "," + std::to_string(p.idx) + ">";
}

}  // namespace detail

inline std::string schema_to_string(const Schema& s, bool with_positions = true) {
  std::string out = detail::display_symbol(s.symbol);
  if (with_positions) out += detail::pos_tag(s.pos);
  if (s.has_bounds())
    out += "^(" + to_string(s.lower) + "," + to_string(s.upper) + ")";
  else if (s.k != Schema::K::NonRecSym)
    out += "^nob";
  if (!s.args.empty()) {
    out += "(";
    for (size_t i = 0; i < s.args.size(); ++i)
      out += (i ? "," : "") + schema_to_string(s.args[i], with_positions);
    out += ")";
  }
  return out;
}

inline std::string concrete_to_string(const ConcreteSize& c,
                                      bool with_positions = false) {
  std::string out = detail::display_symbol(c.symbol);
  if (with_positions) out += detail::pos_tag(c.pos);
  if (c.carries_bounds) {
    if (c.populated)
      out += "^(" + c.lo.str() + "," + c.hi.str() + ")";
    else
      out += "^nob";
  }
  if (!c.args.empty()) {
    out += "(";
    for (size_t i = 0; i < c.args.size(); ++i)
      out += (i ? "," : "") + concrete_to_string(c.args[i], with_positions);
    out += ")";
  }
  return out;
}

// Flattened pre-order view of a concrete measurement, aligned with
// schema_bound_vars of the matching schema.  Unpopulated positions
// surface as nullopt.
inline void concrete_bounds(const ConcreteSize& c,
                            std::vector<std::optional<std::pair<Rat, Rat>>>& out) {
  if (c.carries_bounds) {
    if (c.populated)
      out.push_back(std::make_pair(c.lo, c.hi));
    else
      out.push_back(std::nullopt);
  }
  for (auto& a : c.args) concrete_bounds(a, out);
}

}  // namespace sizedcost
