#pragma once

#include "sizedcost/recsolve.hpp"
#include "sizedcost/typegrammar.hpp"

namespace sizedcost {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain constraints over bound variables reuse the solver's guard atoms.
using Constraint = GuardAtom;

enum class VarClass { Output, Relevant, Irrelevant, Clausal };

// The compact pair relation: (lo_var, hi_var) related to (lo, hi), which
// expands to lo_var >= lo and hi_var <= hi.
struct Relation {
  std::string lo_var, hi_var;
  ExprP lo, hi;
};

struct Ineq {
  std::string var;
  bool is_lower;  // var >= rhs when true, var <= rhs when false
  ExprP rhs;
};

inline std::vector<Ineq> expand_lessgtr(const Relation& rel) {
  std::vector<Ineq> out;
  if (rel.lo) out.push_back({rel.lo_var, true, rel.lo});
  if (rel.hi) out.push_back({rel.hi_var, false, rel.hi});
  return out;
}

struct SizedElement {
  // program variable -> (schema with expression bounds, classification)
  std::map<std::string, std::pair<Schema, VarClass>> t;
  std::vector<Constraint> d;
  std::vector<Relation> r;
};

inline std::string relation_to_string(const Relation& rel) {
  return "(" + rel.lo_var + "," + rel.hi_var + ") <> (" +
         (rel.lo ? to_string(rel.lo) : std::string("_")) + "," +
         (rel.hi ? to_string(rel.hi) : std::string("_")) + ")";
}

inline std::string element_to_string(const SizedElement& e) {
  std::string s = "t:\n";
  for (auto& [v, sc] : e.t) s += "  " + v + " : " + schema_to_string(sc.first) + "\n";
  s += "d: ";
  Guard g(e.d.begin(), e.d.end());
  s += guard_to_string(g) + "\nr:\n";
  for (auto& rel : e.r) s += "  " + relation_to_string(rel) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Schema arithmetic helpers.

inline Schema schema_subst(const Schema& s, const std::map<std::string, ExprP>& env) {
  Schema out = s;
  if (out.lower) out.lower = subst_vars(out.lower, env);
  if (out.upper) out.upper = subst_vars(out.upper, env);
  for (auto& a : out.args) a = schema_subst(a, env);
  return out;
}

inline Schema schema_decrement(const Schema& s, long long by) {
  Schema out = s;
  if (out.lower) out.lower = simplify(ex_sub(out.lower, ex_int(by)));
  if (out.upper) out.upper = simplify(ex_sub(out.upper, ex_int(by)));
  return out;
}

// Turns "expr op k" into a constraint on a single bound variable when expr
// is var + c; otherwise nullopt (the caller drops the undecidable guard).
inline std::optional<Constraint> constrain_expr(const ExprP& e, GuardAtom::Op op,
                                               const Rat& k) {
  ExprP s = simplify(e);
  if (s->k == Expr::K::Var) return Constraint{s->name, op, k};
  auto monos = detail::to_monos(s);
  Rat shift(0);
  std::optional<std::string> var;
  for (auto& m : monos) {
    if (m.factors.empty()) {
      shift = shift + m.coeff;
    } else if (m.factors.size() == 1 && m.coeff.is_one() &&
               m.factors.begin()->second.first->k == Expr::K::Var &&
               m.factors.begin()->second.second == 1 && !var) {
      var = m.factors.begin()->second.first->name;
    } else {
      return std::nullopt;
    }
  }
  if (!var) return std::nullopt;
  return Constraint{*var, op, k - shift};
}

// ---------------------------------------------------------------------------
// Head decomposition: bind pattern subvariables to component schemas and
// collect the induced domain constraints.

inline void add_head_decomposition(SizedElement& e, const Grammar& g,
                                   const Term& pat, const Schema& schema,
                                   VarClass cls) {
  if (pat.is_var()) {
    auto it = e.t.find(pat.name);
    if (it == e.t.end()) e.t.emplace(pat.name, std::make_pair(schema, cls));
    return;
  }
  if (pat.is_num()) {
    if (schema.k != Schema::K::Base)
      throw DomainError("numeric pattern against non-numeric type");
    if (auto c = constrain_expr(schema.lower, GuardAtom::Op::Eq, Rat(pat.num)))
      e.d.push_back(*c);
    if (auto c = constrain_expr(schema.upper, GuardAtom::Op::Eq, Rat(pat.num)))
      e.d.push_back(*c);
    return;
  }
  // constructor pattern over a recursive or non-recursive symbol
  if (schema.k == Schema::K::RecSym) {
    auto it = g.find(schema.symbol);
    if (it == g.end()) throw DomainError("undefined symbol " + schema.symbol);
    const Term* rhs = nullptr;
    for (auto& alt : it->second) {
      if (alt.is_atom() && pat.is_atom(alt.name)) rhs = &alt;
      if (alt.is_comp() && !alt.args.empty() && pat.is_comp() &&
          pat.name == alt.name && pat.args.size() == alt.args.size())
        rhs = &alt;
    }
    if (!rhs) throw DomainError("pattern " + term_to_string(pat) +
                                " not in type " + schema.symbol);
    if (rhs->is_atom()) {
      // base alternative (e.g. []): zero remaining applications
      if (auto c = constrain_expr(schema.lower, GuardAtom::Op::Eq, Rat(0)))
        e.d.push_back(*c);
      if (auto c = constrain_expr(schema.upper, GuardAtom::Op::Eq, Rat(0)))
        e.d.push_back(*c);
      return;
    }
    // recursive alternative: one application peeled off
    if (auto c = constrain_expr(schema.lower, GuardAtom::Op::Gt, Rat(0)))
      e.d.push_back(*c);
    if (auto c = constrain_expr(schema.upper, GuardAtom::Op::Gt, Rat(0)))
      e.d.push_back(*c);
    for (size_t i = 0; i < rhs->args.size(); ++i) {
      const Term& spec = rhs->args[i];
      if (spec.is_atom(schema.symbol)) {
        add_head_decomposition(e, g, pat.args[i], schema_decrement(schema, 1), cls);
      } else {
        for (auto& child : schema.args) {
          if (child.pos.functor == rhs->name && child.pos.idx == (int)i + 1) {
            add_head_decomposition(e, g, pat.args[i], child, cls);
            break;
          }
        }
      }
    }
    return;
  }
  if (schema.k == Schema::K::NonRecSym) {
    auto it = g.find(schema.symbol);
    if (it == g.end()) throw DomainError("undefined symbol " + schema.symbol);
    for (auto& alt : it->second) {
      if (alt.is_comp() && pat.is_comp() && pat.name == alt.name &&
          pat.args.size() == alt.args.size()) {
        for (size_t i = 0; i < alt.args.size(); ++i)
          for (auto& child : schema.args)
            if (child.pos.functor == alt.name && child.pos.idx == (int)i + 1)
              add_head_decomposition(e, g, pat.args[i], child, cls);
        return;
      }
    }
    throw DomainError("pattern not in type " + schema.symbol);
  }
  throw DomainError("constructor pattern against numeric type");
}

// Sets up the per-clause element: input head arguments are decomposed
// against the (pre-derived, shared per call pattern) input schemas;
// output arguments contribute no constraints yet.
inline SizedElement init_clause_element(const Clause& c, const EntryAssertion& entry,
                                        const Grammar& g,
                                        const std::vector<Schema>& input_schemas) {
  SizedElement e;
  size_t in_idx = 0;
  for (size_t i = 0; i < entry.args.size(); ++i) {
    if (entry.args[i].mode == ArgMode::Input) {
      add_head_decomposition(e, g, c.head.args[i], input_schemas[in_idx],
                             VarClass::Relevant);
      ++in_idx;
    } else if (c.head.args[i].is_var()) {
      // remember the variable as an output root; schema arrives from the body
      // (recorded with an empty schema placeholder)
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Normalization: express every relation's rhs over root variables only by
// substituting intermediate definitions (reverse topological order).

inline SizedElement normalize_relations(const SizedElement& e,
                                        const std::set<std::string>& roots) {
  // definition map: defined variable -> rhs expr
  std::map<std::string, ExprP> defs;
  for (auto& rel : e.r) {
    if (rel.lo && !roots.count(rel.lo_var)) defs[rel.lo_var] = rel.lo;
    if (rel.hi && !roots.count(rel.hi_var)) defs[rel.hi_var] = rel.hi;
  }
  auto resolve = [&](ExprP x) {
    for (int i = 0; i < 64; ++i) {
      std::set<std::string> vs;
      free_vars(x, vs);
      bool any = false;
      for (auto& v : vs)
        if (defs.count(v)) any = true;
      if (!any) return simplify(x);
      x = subst_vars(x, defs);
    }
    throw DomainError("cyclic non-recursive size dependency");
  };
  SizedElement out = e;
  out.r.clear();
  for (auto& rel : e.r) {
    bool lo_root = rel.lo && roots.count(rel.lo_var);
    bool hi_root = rel.hi && roots.count(rel.hi_var);
    if (!lo_root && !hi_root) continue;  // intermediate, eliminated
    Relation nr = rel;
    if (nr.lo) nr.lo = resolve(nr.lo);
    if (nr.hi) nr.hi = resolve(nr.hi);
    out.r.push_back(nr);
  }
  for (auto& [v, sc] : out.t) {
    Schema s = sc.first;
    if (s.lower) s.lower = resolve(s.lower);
    if (s.upper) s.upper = resolve(s.upper);
    sc.first = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Abstract interval arithmetic over schemas for is/2 and term sizes.

struct IntervalExpr {
  ExprP lo, hi;  // null = unbounded in that direction (nob)
};

inline IntervalExpr interval_add(const IntervalExpr& a, const IntervalExpr& b) {
  IntervalExpr r;
  if (a.lo && b.lo) r.lo = simplify(ex_add(a.lo, b.lo));
  if (a.hi && b.hi) r.hi = simplify(ex_add(a.hi, b.hi));
  return r;
}
inline IntervalExpr interval_sub(const IntervalExpr& a, const IntervalExpr& b) {
  IntervalExpr r;
  if (a.lo && b.hi) r.lo = simplify(ex_sub(a.lo, b.hi));
  if (a.hi && b.lo) r.hi = simplify(ex_sub(a.hi, b.lo));
  return r;
}
inline IntervalExpr interval_mul(const IntervalExpr& a, const IntervalExpr& b) {
  IntervalExpr r;
  if (a.lo && a.hi && b.lo && b.hi) {
    std::vector<ExprP> prods = {ex_mul(a.lo, b.lo), ex_mul(a.lo, b.hi),
                                ex_mul(a.hi, b.lo), ex_mul(a.hi, b.hi)};
    r.lo = simplify(ex_min(prods));
    r.hi = simplify(ex_max(prods));
  }
  return r;
}
// Truncating division and mod: loose but sound for nonnegative operands.
inline IntervalExpr interval_intdiv(const IntervalExpr& a, const IntervalExpr&) {
  IntervalExpr r;
  r.lo = ex_int(0);
  r.hi = a.hi;
  return r;
}
inline IntervalExpr interval_mod(const IntervalExpr& a, const IntervalExpr& b) {
  IntervalExpr r;
  r.lo = ex_int(0);
  if (a.hi && b.hi) r.hi = simplify(ex_min({a.hi, b.hi}));
  else r.hi = a.hi ? a.hi : b.hi;
  return r;
}

// Evaluates an arithmetic term over program-variable schemas.
inline IntervalExpr abstract_arith(const Term& t, const SizedElement& e) {
  if (t.is_num()) {
    IntervalExpr r;
    r.lo = r.hi = ex_int(t.num);
    return r;
  }
  if (t.is_var()) {
    auto it = e.t.find(t.name);
    if (it == e.t.end()) return {};
    return {it->second.first.lower, it->second.first.upper};
  }
  if (t.args.size() == 2) {
    IntervalExpr a = abstract_arith(t.args[0], e);
    IntervalExpr b = abstract_arith(t.args[1], e);
    if (t.name == "+") return interval_add(a, b);
    if (t.name == "-") return interval_sub(a, b);
    if (t.name == "*") return interval_mul(a, b);
    if (t.name == "//") return interval_intdiv(a, b);
    if (t.name == "mod") return interval_mod(a, b);
  }
  if (t.args.size() == 1 && t.name == "-") {
    IntervalExpr a = abstract_arith(t.args[0], e);
    IntervalExpr r;
    if (a.hi) r.lo = simplify(ex_mul(ex_int(-1), a.hi));
    if (a.lo) r.hi = simplify(ex_mul(ex_int(-1), a.lo));
    return r;
  }
  return {};
}

}  // namespace sizedcost
