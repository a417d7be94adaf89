#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sizedcost/num.hpp"

namespace sizedcost {

// Symbolic cost expressions: the vocabulary of bound functions.
// Constants (rationals, inf), bound variables, + - * min max,
// exponentials with a constant base (2, 3, ..., or phi), factorial,
// and function-application terms (recurrence unknowns or callee
// closed forms waiting to be substituted).
struct Expr;
using ExprP = std::shared_ptr<const Expr>;

struct Expr {
  enum class K { Const, Var, Add, Mul, Min, Max, Pow, Fact, Call };

  K k;
  Rat c;                    // Const value; Pow base when not phi
  bool phi_base = false;    // Pow: base is phi
  std::string name;         // Var name; Call: function key
  std::vector<ExprP> args;  // Add/Mul/Min/Max children; Pow: {exponent};
                            // Fact: {arg}; Call: arguments
};

inline ExprP ex_const(Rat v) {
  auto e = std::make_shared<Expr>();
  e->k = Expr::K::Const;
  e->c = v;
  return e;
}
inline ExprP ex_int(long long v) { return ex_const(Rat(v)); }
inline ExprP ex_inf() { return ex_const(Rat::inf()); }

inline ExprP ex_var(std::string n) {
  auto e = std::make_shared<Expr>();
  e->k = Expr::K::Var;
  e->name = std::move(n);
  return e;
}

inline ExprP ex_nary(Expr::K k, std::vector<ExprP> args) {
  auto e = std::make_shared<Expr>();
  e->k = k;
  e->args = std::move(args);
  return e;
}
inline ExprP ex_add(std::vector<ExprP> a) { return ex_nary(Expr::K::Add, std::move(a)); }
inline ExprP ex_add(ExprP a, ExprP b) { return ex_add({std::move(a), std::move(b)}); }
inline ExprP ex_mul(std::vector<ExprP> a) { return ex_nary(Expr::K::Mul, std::move(a)); }
inline ExprP ex_mul(ExprP a, ExprP b) { return ex_mul({std::move(a), std::move(b)}); }
inline ExprP ex_sub(ExprP a, ExprP b) {
  return ex_add(std::move(a), ex_mul(ex_int(-1), std::move(b)));
}
inline ExprP ex_min(std::vector<ExprP> a) { return ex_nary(Expr::K::Min, std::move(a)); }
inline ExprP ex_max(std::vector<ExprP> a) { return ex_nary(Expr::K::Max, std::move(a)); }

inline ExprP ex_pow(Rat base, ExprP exponent) {
  auto e = std::make_shared<Expr>();
  e->k = Expr::K::Pow;
  e->c = base;
  e->args = {std::move(exponent)};
  return e;
}
inline ExprP ex_pow_phi(ExprP exponent) {
  auto e = std::make_shared<Expr>();
  e->k = Expr::K::Pow;
  e->phi_base = true;
  e->args = {std::move(exponent)};
  return e;
}
inline ExprP ex_fact(ExprP arg) {
  auto e = std::make_shared<Expr>();
  e->k = Expr::K::Fact;
  e->args = {std::move(arg)};
  return e;
}
inline ExprP ex_call(std::string key, std::vector<ExprP> args) {
  auto e = std::make_shared<Expr>();
  e->k = Expr::K::Call;
  e->name = std::move(key);
  e->args = std::move(args);
  return e;
}

// ---------------------------------------------------------------------------
// Canonical serialization, used for ordering and structural equality.

inline std::string expr_key(const ExprP& e) {
  std::ostringstream os;
  std::function<void(const ExprP&)> go = [&](const ExprP& x) {
    switch (x->k) {
      case Expr::K::Const: os << "c[" << x->c.str() << "]"; break;
      case Expr::K::Var: os << "v[" << x->name << "]"; break;
      case Expr::K::Add: os << "add("; break;
      case Expr::K::Mul: os << "mul("; break;
      case Expr::K::Min: os << "min("; break;
      case Expr::K::Max: os << "max("; break;
      case Expr::K::Pow:
        os << "pow[" << (x->phi_base ? "phi" : x->c.str()) << "](";
        break;
      case Expr::K::Fact: os << "fact("; break;
      case Expr::K::Call: os << "call[" << x->name << "]("; break;
    }
    if (x->k != Expr::K::Const && x->k != Expr::K::Var) {
      for (size_t i = 0; i < x->args.size(); ++i) {
        if (i) os << ",";
        go(x->args[i]);
      }
      os << ")";
    }
  };
  go(e);
  return os.str();
}

inline bool expr_identical(const ExprP& a, const ExprP& b) {
  return expr_key(a) == expr_key(b);
}

inline void free_vars(const ExprP& e, std::set<std::string>& out) {
  if (e->k == Expr::K::Var) out.insert(e->name);
  for (auto& a : e->args) free_vars(a, out);
}

inline bool contains_call(const ExprP& e, const std::string& key_prefix = "") {
  if (e->k == Expr::K::Call &&
      (key_prefix.empty() || e->name.rfind(key_prefix, 0) == 0))
    return true;
  for (auto& a : e->args)
    if (contains_call(a, key_prefix)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Substitution.

inline ExprP subst_vars(const ExprP& e, const std::map<std::string, ExprP>& env) {
  switch (e->k) {
    case Expr::K::Const: return e;
    case Expr::K::Var: {
      auto it = env.find(e->name);
      return it == env.end() ? e : it->second;
    }
    default: {
      auto n = std::make_shared<Expr>(*e);
      for (auto& a : n->args) a = subst_vars(a, env);
      return n;
    }
  }
}

// Replaces Call nodes; the hook sees the call key and (already rewritten)
// arguments and may return a replacement.
inline ExprP subst_calls(
    const ExprP& e,
    const std::function<std::optional<ExprP>(const std::string&,
                                             const std::vector<ExprP>&)>& hook) {
  if (e->args.empty() && e->k != Expr::K::Call) return e;
  auto n = std::make_shared<Expr>(*e);
  for (auto& a : n->args) a = subst_calls(a, hook);
  if (n->k == Expr::K::Call) {
    auto r = hook(n->name, n->args);
    if (r) return *r;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Evaluation.  env must cover all free variables; Call nodes must be gone.

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Rat evaluate(const ExprP& e, const std::map<std::string, Rat>& env,
                    RoundDir dir) {
  switch (e->k) {
    case Expr::K::Const: return e->c;
    case Expr::K::Var: {
      auto it = env.find(e->name);
      if (it == env.end()) throw EvalError("unbound variable " + e->name);
      return it->second;
    }
    case Expr::K::Add: {
      Rat acc(0);
      for (auto& a : e->args) acc = acc + evaluate(a, env, dir);
      return acc;
    }
    case Expr::K::Mul: {
      Rat acc(1);
      for (auto& a : e->args) acc = acc * evaluate(a, env, dir);
      return acc;
    }
    case Expr::K::Min: {
      Rat acc = Rat::inf();
      for (auto& a : e->args) acc = Rat::min(acc, evaluate(a, env, dir));
      return acc;
    }
    case Expr::K::Max: {
      Rat acc = Rat::neg_inf();
      for (auto& a : e->args) acc = Rat::max(acc, evaluate(a, env, dir));
      return acc;
    }
    case Expr::K::Pow: {
      Rat ev = evaluate(e->args[0], env, dir);
      if (!ev.is_finite()) {
        if (ev.is_pos_inf()) return dir == RoundDir::Up ? Rat::inf() : Rat(0);
        return Rat(0);
      }
      long long n = ev.ceil().num();
      if (n < 0) n = 0;  // bases exceed 1; x^neg < 1, clamp keeps bounds one-sided
      Rat base = e->phi_base ? (dir == RoundDir::Up ? phi_upper() : phi_lower())
                             : e->c;
      return rat_pow(base, n, dir);
    }
    case Expr::K::Fact: {
      Rat v = evaluate(e->args[0], env, dir);
      if (v.is_finite() && v.sign() < 0)
        throw EvalError("factorial of negative value");
      return rat_factorial(v.floor());
    }
    case Expr::K::Call:
      throw EvalError("unresolved call " + e->name);
  }
  throw EvalError("unreachable");
}

// ---------------------------------------------------------------------------
// Simplification to a polynomial-style normal form: a sum of monomials,
// each a rational coefficient times sorted atomic factors (variables,
// min/max, pow, factorial, call terms), with constant folding throughout.

namespace detail {

struct Mono {
  Rat coeff;
  // factor -> power; keyed by canonical serialization, value keeps the expr
  std::map<std::string, std::pair<ExprP, long long>> factors;
};

inline Mono mono_mul(const Mono& a, const Mono& b) {
  Mono r;
  r.coeff = a.coeff * b.coeff;
  r.factors = a.factors;
  for (auto& [k, fe] : b.factors) {
    auto it = r.factors.find(k);
    if (it == r.factors.end())
      r.factors.emplace(k, fe);
    else
      it->second.second += fe.second;
  }
  return r;
}

inline std::string mono_key(const Mono& m) {
  std::string s;
  for (auto& [k, fe] : m.factors)
    s += k + "^" + std::to_string(fe.second) + ";";
  return s;
}

}  // namespace detail

inline ExprP simplify(const ExprP& e);

namespace detail {

inline std::vector<Mono> to_monos(const ExprP& e);

inline std::vector<Mono> mul_monos(const std::vector<Mono>& a,
                                   const std::vector<Mono>& b) {
  std::vector<Mono> out;
  for (auto& x : a)
    for (auto& y : b) out.push_back(mono_mul(x, y));
  return out;
}

inline std::vector<Mono> to_monos(const ExprP& e) {
  switch (e->k) {
    case Expr::K::Const: {
      Mono m;
      m.coeff = e->c;
      return {m};
    }
    case Expr::K::Add: {
      std::vector<Mono> out;
      for (auto& a : e->args) {
        auto ms = to_monos(a);
        out.insert(out.end(), ms.begin(), ms.end());
      }
      return out;
    }
    case Expr::K::Mul: {
      Mono one;
      one.coeff = Rat(1);
      std::vector<Mono> acc = {one};
      for (auto& a : e->args) acc = mul_monos(acc, to_monos(a));
      return acc;
    }
    default: {
      ExprP s = e;  // already simplified by caller
      if (s->k == Expr::K::Const) return to_monos(s);
      Mono m;
      m.coeff = Rat(1);
      m.factors.emplace(expr_key(s), std::make_pair(s, 1LL));
      return {m};
    }
  }
}

inline ExprP from_monos(std::vector<Mono> ms) {
  // collect like monomials
  std::map<std::string, Mono> coll;
  bool saw_inf = false, saw_neg_inf = false;
  for (auto& m : ms) {
    if (m.coeff.is_pos_inf() && m.factors.empty()) saw_inf = true;
    if (m.coeff.is_neg_inf() && m.factors.empty()) saw_neg_inf = true;
    auto key = mono_key(m);
    auto it = coll.find(key);
    if (it == coll.end())
      coll.emplace(key, m);
    else
      it->second.coeff = it->second.coeff + m.coeff;
  }
  if (saw_inf && !saw_neg_inf) return ex_inf();
  if (saw_neg_inf && !saw_inf) return ex_const(Rat::neg_inf());
  std::vector<ExprP> terms;
  Rat const_part(0);
  // graded order: higher total degree first, then key
  std::vector<std::pair<std::string, Mono>> sorted(coll.begin(), coll.end());
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) {
    long long da = 0, db = 0;
    for (auto& [k, fe] : a.second.factors) da += fe.second;
    for (auto& [k, fe] : b.second.factors) db += fe.second;
    if (da != db) return da > db;
    return a.first < b.first;
  });
  for (auto& [key, m] : sorted) {
    if (m.coeff.is_zero()) continue;
    if (m.factors.empty()) {
      const_part = const_part + m.coeff;
      continue;
    }
    std::vector<ExprP> factors;
    if (!m.coeff.is_one()) factors.push_back(ex_const(m.coeff));
    for (auto& [k, fe] : m.factors) {
      for (long long i = 0; i < fe.second; ++i) factors.push_back(fe.first);
    }
    terms.push_back(factors.size() == 1 ? factors[0] : ex_mul(factors));
  }
  if (!const_part.is_zero() || terms.empty())
    terms.push_back(ex_const(const_part));
  return terms.size() == 1 ? terms[0] : ex_add(terms);
}

// a provably >= b (syntactically): a - b simplifies to a nonnegative constant.
inline bool provably_ge(const ExprP& a, const ExprP& b) {
  ExprP d = simplify(ex_sub(a, b));
  return d->k == Expr::K::Const && d->c.sign() >= 0;
}

}  // namespace detail

inline ExprP simplify(const ExprP& e) {
  switch (e->k) {
    case Expr::K::Const:
    case Expr::K::Var:
      return e;
    case Expr::K::Fact: {
      ExprP a = simplify(e->args[0]);
      if (a->k == Expr::K::Const && a->c.is_integer() && a->c.sign() >= 0)
        return ex_const(rat_factorial(a->c));
      return ex_fact(a);
    }
    case Expr::K::Pow: {
      ExprP ex = simplify(e->args[0]);
      if (!e->phi_base && ex->k == Expr::K::Const && ex->c.is_integer() &&
          ex->c.sign() >= 0 && ex->c.num() <= 62)
        return ex_const(rat_pow(e->c, ex->c.num(), RoundDir::Up));
      auto n = std::make_shared<Expr>(*e);
      n->args = {ex};
      return n;
    }
    case Expr::K::Call: {
      auto n = std::make_shared<Expr>(*e);
      for (auto& a : n->args) a = simplify(a);
      return n;
    }
    case Expr::K::Min:
    case Expr::K::Max: {
      bool is_min = e->k == Expr::K::Min;
      std::vector<ExprP> flat;
      std::function<void(const ExprP&)> collect = [&](const ExprP& x) {
        ExprP s = simplify(x);
        if (s->k == e->k) {
          for (auto& a : s->args) collect(a);
        } else {
          flat.push_back(s);
        }
      };
      for (auto& a : e->args) collect(a);
      // dedupe and drop dominated entries
      std::vector<ExprP> kept;
      for (auto& cand : flat) {
        bool drop = false;
        for (auto& other : kept) {
          if (expr_identical(cand, other)) { drop = true; break; }
          if (is_min && detail::provably_ge(cand, other)) { drop = true; break; }
          if (!is_min && detail::provably_ge(other, cand)) { drop = true; break; }
        }
        if (drop) continue;
        std::vector<ExprP> next;
        for (auto& other : kept) {
          bool other_dropped =
              is_min ? detail::provably_ge(other, cand) : detail::provably_ge(cand, other);
          if (!other_dropped) next.push_back(other);
        }
        next.push_back(cand);
        kept = next;
      }
      if (kept.size() == 1) return kept[0];
      std::sort(kept.begin(), kept.end(),
                [](const ExprP& a, const ExprP& b) { return expr_key(a) < expr_key(b); });
      return ex_nary(e->k, kept);
    }
    case Expr::K::Add:
    case Expr::K::Mul: {
      auto n = std::make_shared<Expr>(*e);
      for (auto& a : n->args) a = simplify(a);
      return detail::from_monos(detail::to_monos(n));
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Printing, in the documented closed-form grammar: `b1+1`, `2^(b1+1)-1`,
// `min(a1,a2,a3)`, `phi^b1`, `fact(c1)`.

inline std::string to_string(const ExprP& e);

namespace detail {

inline bool atomic_for_print(const ExprP& e) {
  return e->k == Expr::K::Var ||
         (e->k == Expr::K::Const && e->c.is_finite() && e->c.sign() >= 0 &&
          e->c.is_integer()) ||
         e->k == Expr::K::Min || e->k == Expr::K::Max ||
         e->k == Expr::K::Fact || e->k == Expr::K::Call;
}

inline std::string print_factor(const ExprP& e) {
  if (atomic_for_print(e) || e->k == Expr::K::Pow) {
    if (e->k == Expr::K::Pow) {
      std::string base = e->phi_base ? "phi" : e->c.str();
      const ExprP& ex = e->args[0];
      bool simple = ex->k == Expr::K::Var ||
                    (ex->k == Expr::K::Const && ex->c.is_integer() && ex->c.sign() >= 0);
      return base + "^" + (simple ? to_string(ex) : "(" + to_string(ex) + ")");
    }
    return to_string(e);
  }
  return "(" + to_string(e) + ")";
}

}  // namespace detail

inline std::string to_string(const ExprP& e) {
  switch (e->k) {
    case Expr::K::Const: return e->c.str();
    case Expr::K::Var: return e->name;
    case Expr::K::Min:
    case Expr::K::Max: {
      std::string s = e->k == Expr::K::Min ? "min(" : "max(";
      for (size_t i = 0; i < e->args.size(); ++i)
        s += (i ? "," : "") + to_string(e->args[i]);
      return s + ")";
    }
    case Expr::K::Fact: return "fact(" + to_string(e->args[0]) + ")";
    case Expr::K::Pow: return detail::print_factor(e);
    case Expr::K::Call: {
      std::string s = e->name + "(";
      for (size_t i = 0; i < e->args.size(); ++i)
        s += (i ? "," : "") + to_string(e->args[i]);
      return s + ")";
    }
    case Expr::K::Mul: {
      // split off a leading negative/rational coefficient if present
      std::string s;
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) s += "*";
        s += detail::print_factor(e->args[i]);
      }
      return s;
    }
    case Expr::K::Add: {
      std::string s;
      for (size_t i = 0; i < e->args.size(); ++i) {
        const ExprP& t = e->args[i];
        // detect negative terms for "a-b" rendering
        Rat coeff(1);
        ExprP body = t;
        if (t->k == Expr::K::Const) coeff = t->c;
        if (t->k == Expr::K::Mul && !t->args.empty() &&
            t->args[0]->k == Expr::K::Const)
          coeff = t->args[0]->c;
        bool neg = coeff.sign() < 0;
        if (neg) {
          // re-render with flipped sign
          ExprP flipped = simplify(ex_mul(ex_int(-1), t));
          s += (i ? "-" : "-");
          s += detail::atomic_for_print(flipped) || flipped->k == Expr::K::Mul ||
                       flipped->k == Expr::K::Pow
                   ? to_string(flipped)
                   : "(" + to_string(flipped) + ")";
        } else {
          if (i) s += "+";
          s += t->k == Expr::K::Add ? "(" + to_string(t) + ")" : to_string(t);
        }
      }
      return s;
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Complexity orders: dominant-term descriptors.

namespace detail {

struct OrderMono {
  std::map<std::string, long long> poly;          // var -> degree
  std::set<std::pair<std::string, std::string>> exps;  // (base, var)
  std::vector<ExprP> atoms;                       // min/max/fact/call atoms
  bool operator==(const OrderMono& o) const {
    if (poly != o.poly || exps != o.exps || atoms.size() != o.atoms.size())
      return false;
    for (size_t i = 0; i < atoms.size(); ++i)
      if (!expr_identical(atoms[i], o.atoms[i])) return false;
    return true;
  }
};

// true if a grows at least as fast as b
inline bool order_dominates(const OrderMono& a, const OrderMono& b) {
  if (!b.atoms.empty() || !a.atoms.empty()) {
    // atoms (min/max/...) compare only by equality
    OrderMono a2 = a, b2 = b;
    return a == b;
  }
  if (!std::includes(a.exps.begin(), a.exps.end(), b.exps.begin(), b.exps.end()))
    return false;
  std::set<std::string> exp_vars;
  for (auto& [base, v] : a.exps) exp_vars.insert(v);
  for (auto& [v, d] : b.poly) {
    if (exp_vars.count(v)) continue;  // exponential beats any polynomial degree
    auto it = a.poly.find(v);
    if (it == a.poly.end() || it->second < d) return false;
  }
  return true;
}

}  // namespace detail

inline ExprP complexity_order(const ExprP& e) {
  ExprP s = simplify(e);
  if (s->k == Expr::K::Const) {
    if (s->c.is_pos_inf()) return ex_inf();
    return ex_int(1);
  }
  auto monos = detail::to_monos(s);
  std::vector<detail::OrderMono> oms;
  std::vector<ExprP> om_exprs;
  for (auto& m : monos) {
    if (m.coeff.is_zero()) continue;
    if (m.coeff.is_pos_inf()) return ex_inf();
    detail::OrderMono om;
    std::vector<ExprP> factors;
    for (auto& [k, fe] : m.factors) {
      const ExprP& f = fe.first;
      long long p = fe.second;
      if (f->k == Expr::K::Var) {
        om.poly[f->name] += p;
      } else if (f->k == Expr::K::Pow) {
        // strip additive constants in the exponent
        ExprP exo = simplify(f->args[0]);
        auto ems = detail::to_monos(exo);
        std::vector<detail::Mono> nonconst;
        for (auto& em : ems)
          if (!em.factors.empty()) nonconst.push_back(em);
        ExprP ex2 = detail::from_monos(nonconst);
        // drop rational coefficient scaling? keep: base^2n differs from base^n,
        // but for descriptors we keep the variable part as-is.
        std::string base = f->phi_base ? "phi" : f->c.str();
        std::set<std::string> vs;
        free_vars(ex2, vs);
        std::string vkey = vs.size() == 1 ? *vs.begin() : to_string(ex2);
        for (long long i = 0; i < p; ++i) om.exps.insert({base, vkey});
      } else if (f->k == Expr::K::Min || f->k == Expr::K::Max) {
        // reduce under the convention that every parameter grows without
        // bound: a constant argument dominates a min and is dominated in a max
        std::vector<ExprP> oargs;
        for (auto& c : f->args) oargs.push_back(complexity_order(c));
        ExprP red;
        if (f->k == Expr::K::Max) {
          std::vector<ExprP> keep;
          for (auto& o : oargs) {
            if (o->k == Expr::K::Const) continue;
            bool dup = false;
            for (auto& u : keep)
              if (expr_identical(o, u)) { dup = true; break; }
            if (!dup) keep.push_back(o);
          }
          red = keep.empty()
                    ? ex_int(1)
                    : (keep.size() == 1 ? keep[0]
                                        : ex_nary(Expr::K::Max, keep));
        } else {
          bool any_const = false;
          std::vector<ExprP> keep;
          for (auto& o : oargs) {
            any_const = any_const || o->k == Expr::K::Const;
            bool dup = false;
            for (auto& u : keep)
              if (expr_identical(o, u)) { dup = true; break; }
            if (!dup) keep.push_back(o);
          }
          red = any_const ? ex_int(1)
                          : (keep.size() == 1 ? keep[0]
                                              : ex_nary(Expr::K::Min, keep));
        }
        red = simplify(red);
        for (long long i = 0; i < p; ++i) {
          if (red->k == Expr::K::Const) continue;  // order-1 factor
          if (red->k == Expr::K::Var)
            om.poly[red->name] += 1;
          else
            om.atoms.push_back(red);
        }
      } else if (f->k == Expr::K::Fact || f->k == Expr::K::Call) {
        for (long long i = 0; i < p; ++i) om.atoms.push_back(f);
      }
    }
    if (om.poly.empty() && om.exps.empty() && om.atoms.empty()) {
      // constant term: order 1, dominated by anything else
    }
    // rebuild descriptor expr
    for (auto& [v, d] : om.poly) {
      ExprP var = ex_var(v);
      for (long long i = 0; i < d; ++i) factors.push_back(var);
    }
    for (auto& [base, v] : om.exps) {
      ExprP pw = base == "phi"
                     ? ex_pow_phi(ex_var(v))
                     : ex_pow([&] {
                         // parse rational base string back (n or n/d)
                         auto slash = base.find('/');
                         if (slash == std::string::npos)
                           return Rat(std::stoll(base));
                         return Rat(std::stoll(base.substr(0, slash)),
                                    std::stoll(base.substr(slash + 1)));
                       }(),
                              ex_var(v));
      factors.push_back(pw);
    }
    for (auto& a : om.atoms) factors.push_back(a);
    ExprP ome = factors.empty()
                    ? ex_int(1)
                    : (factors.size() == 1 ? factors[0] : ex_mul(factors));
    oms.push_back(om);
    om_exprs.push_back(ome);
  }
  // filter dominated monomials; constants are dominated by anything nonconstant
  std::vector<ExprP> kept;
  for (size_t i = 0; i < oms.size(); ++i) {
    bool dominated = false;
    bool i_const = oms[i].poly.empty() && oms[i].exps.empty() && oms[i].atoms.empty();
    for (size_t j = 0; j < oms.size(); ++j) {
      if (i == j) continue;
      bool j_const =
          oms[j].poly.empty() && oms[j].exps.empty() && oms[j].atoms.empty();
      if (i_const && !j_const) { dominated = true; break; }
      if (detail::order_dominates(oms[j], oms[i]) &&
          !detail::order_dominates(oms[i], oms[j])) {
        dominated = true;
        break;
      }
      if (oms[i] == oms[j] && j < i) { dominated = true; break; }
    }
    if (!dominated) kept.push_back(om_exprs[i]);
  }
  // dedupe
  std::vector<ExprP> uniq;
  for (auto& k : kept) {
    bool dup = false;
    for (auto& u : uniq)
      if (expr_identical(simplify(k), simplify(u))) { dup = true; break; }
    if (!dup) uniq.push_back(k);
  }
  if (uniq.empty()) return ex_int(1);
  return simplify(uniq.size() == 1 ? uniq[0] : ex_add(uniq));
}

inline std::string order_string(const ExprP& e) {
  return to_string(complexity_order(e));
}

}  // namespace sizedcost
