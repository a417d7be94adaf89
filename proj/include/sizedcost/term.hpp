#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sizedcost/num.hpp"

namespace sizedcost {

// First-order terms.  Atoms are 0-ary compounds; lists desugar to
// './2' and '[]'/0 at parse time.
struct Term {
  enum class K { Var, Num, Comp };

  K k = K::Comp;
  std::string name;         // variable name or functor
  long long num = 0;        // K::Num payload
  std::vector<Term> args;

  bool is_var() const { return k == K::Var; }
  bool is_num() const { return k == K::Num; }
  bool is_comp() const { return k == K::Comp; }
  bool is_atom() const { return k == K::Comp && args.empty(); }
  bool is_atom(const std::string& n) const { return is_atom() && name == n; }
  bool is_nil() const { return is_atom("[]"); }
  bool is_cons() const { return k == K::Comp && name == "." && args.size() == 2; }

  std::string functor_key() const {
    return name + "/" + std::to_string(args.size());
  }
};

inline Term mk_var(std::string n) {
  Term t;
  t.k = Term::K::Var;
  t.name = std::move(n);
  return t;
}
inline Term mk_num(long long v) {
  Term t;
  t.k = Term::K::Num;
  t.num = v;
  return t;
}
inline Term mk_comp(std::string f, std::vector<Term> args) {
  Term t;
  t.k = Term::K::Comp;
  t.name = std::move(f);
  t.args = std::move(args);
  return t;
}
inline Term mk_atom(std::string f) { return mk_comp(std::move(f), {}); }
inline Term mk_nil() { return mk_atom("[]"); }
inline Term mk_cons(Term head, Term tail) {
  return mk_comp(".", {std::move(head), std::move(tail)});
}
inline Term mk_list(const std::vector<Term>& items) {
  Term t = mk_nil();
  for (auto it = items.rbegin(); it != items.rend(); ++it) t = mk_cons(*it, t);
  return t;
}

inline bool term_equal(const Term& a, const Term& b) {
  if (a.k != b.k) return false;
  switch (a.k) {
    case Term::K::Var: return a.name == b.name;
    case Term::K::Num: return a.num == b.num;
    case Term::K::Comp:
      if (a.name != b.name || a.args.size() != b.args.size()) return false;
      for (size_t i = 0; i < a.args.size(); ++i)
        if (!term_equal(a.args[i], b.args[i])) return false;
      return true;
  }
  return false;
}

inline std::string term_to_string(const Term& t) {
  switch (t.k) {
    case Term::K::Var: return t.name;
    case Term::K::Num: return std::to_string(t.num);
    case Term::K::Comp: {
      if (t.is_nil()) return "[]";
      if (t.is_cons()) {
        std::string s = "[" + term_to_string(t.args[0]);
        const Term* rest = &t.args[1];
        while (rest->is_cons()) {
          s += "," + term_to_string(rest->args[0]);
          rest = &rest->args[1];
        }
        if (!rest->is_nil()) s += "|" + term_to_string(*rest);
        return s + "]";
      }
      static const std::map<std::string, int> infix = {
          {"is", 2}, {"<", 2},  {">", 2},  {"=<", 2}, {">=", 2},
          {"=:=", 2}, {"=\\=", 2}, {"+", 2}, {"-", 2}, {"*", 2}, {"//", 2}};
      if (t.args.size() == 2 && infix.count(t.name))
        return term_to_string(t.args[0]) + t.name + term_to_string(t.args[1]);
      if (t.args.empty()) return t.name;
      std::string s = t.name + "(";
      for (size_t i = 0; i < t.args.size(); ++i)
        s += (i ? "," : "") + term_to_string(t.args[i]);
      return s + ")";
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------

struct Clause {
  Term head;
  std::vector<Term> body;
  int clause_id = 0;
  int line = 0;
};

enum class ArgMode { Input, Output };

struct EntryArgSpec {
  ArgMode mode;
  std::string type_name;
};

struct EntryAssertion {
  std::string pred;  // name/arity
  std::vector<EntryArgSpec> args;
  int line = 0;
};

struct TypeRuleDecl {
  std::string symbol;
  Term rhs;
};

enum class Agg { Sum, Min, Max };

struct ResourceDef {
  struct CostEntry {
    std::optional<std::string> pred;  // nullopt = wildcard "_"
    Rat cost;
  };
  std::string name;
  std::vector<CostEntry> head_costs;     // beta
  std::vector<CostEntry> literal_costs;  // delta
  Agg upper_agg = Agg::Sum;
  Agg lower_agg = Agg::Min;
  Rat default_lower = Rat(0);
  Rat default_upper = Rat(0);

  Rat head_cost(const std::string& pred_key) const {
    return lookup(head_costs, pred_key, Rat(0));
  }
  Rat literal_cost(const std::string& pred_key) const {
    return lookup(literal_costs, pred_key, Rat(0));
  }

 private:
  static Rat lookup(const std::vector<CostEntry>& es, const std::string& key,
                    Rat dflt) {
    // specific entries win over wildcards
    for (auto& e : es)
      if (e.pred && *e.pred == key) return e.cost;
    for (auto& e : es)
      if (!e.pred) return e.cost;
    return dflt;
  }
};

// The "number of resolution steps" resource used throughout the worked
// examples: one unit on entering a user clause, nothing per literal.
inline ResourceDef steps_resource() {
  ResourceDef r;
  r.name = "steps";
  r.head_costs.push_back({std::nullopt, Rat(1)});
  r.literal_costs.push_back({std::nullopt, Rat(0)});
  r.upper_agg = Agg::Sum;
  r.lower_agg = Agg::Min;
  r.default_lower = Rat(0);
  r.default_upper = Rat(0);
  return r;
}

struct Program {
  // insertion-ordered predicate table
  std::vector<std::string> pred_order;
  std::map<std::string, std::vector<Clause>> predicates;

  std::map<std::string, std::vector<Term>> type_rules;  // symbol -> alternatives
  std::vector<EntryAssertion> entries;
  std::map<std::string, bool> trust_nf;   // pred -> not_fails?
  std::map<std::string, bool> trust_det;  // pred -> is_det?
  std::vector<ResourceDef> resources;

  const std::vector<Clause>* clauses_of(const std::string& pred_key) const {
    auto it = predicates.find(pred_key);
    return it == predicates.end() ? nullptr : &it->second;
  }
};

inline bool is_builtin(const std::string& pred_key) {
  static const std::vector<std::string> bs = {
      "is/2", "</2", "=</2", ">/2", ">=/2", "=:=/2", "=\\=/2"};
  for (auto& b : bs)
    if (b == pred_key) return true;
  return false;
}

inline bool is_comparison(const std::string& functor) {
  return functor == "<" || functor == "=<" || functor == ">" ||
         functor == ">=" || functor == "=:=" || functor == "=\\=";
}

inline std::string program_to_string(const Program& p) {
  std::string s;
  for (auto& key : p.pred_order) {
    for (auto& c : p.predicates.at(key)) {
      s += term_to_string(c.head);
      if (!c.body.empty()) {
        s += " :- ";
        for (size_t i = 0; i < c.body.size(); ++i)
          s += (i ? ", " : "") + term_to_string(c.body[i]);
      }
      s += ".\n";
    }
  }
  return s;
}

}  // namespace sizedcost
