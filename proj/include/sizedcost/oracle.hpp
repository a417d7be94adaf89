#pragma once

#include <optional>

#include "sizedcost/costexpr.hpp"
#include "sizedcost/term.hpp"
#include "sizedcost/typegrammar.hpp"

namespace sizedcost {

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Limits {
  long long max_steps = 1'000'000;
  int max_depth = 10'000;
};

struct ExecTrace {
  Term goal;
  long long steps = 0;
  long long solutions = 0;
  // fully dereferenced goal instance per solution
  std::vector<Term> solution_goals;
  bool cap_hit = false;
};

namespace detail {

class Interp {
 public:
  Interp(const Program& p, Limits lim) : prog_(p), lim_(lim) {}

  ExecTrace run(const Term& goal) {
    ExecTrace tr;
    tr.goal = goal;
    trace_ = &tr;
    try {
      std::vector<Term> goals{goal};
      solve(goals, 0);
    } catch (const CapHit&) {
      tr.cap_hit = true;
    }
    return tr;
  }

 private:
  struct CapHit {};

  const Program& prog_;
  Limits lim_;
  ExecTrace* trace_ = nullptr;
  std::map<std::string, Term> bind_;
  std::vector<std::string> trail_;
  long long rename_counter_ = 0;

  const Term* walk(const Term* t) const {
    while (t->is_var()) {
      auto it = bind_.find(t->name);
      if (it == bind_.end()) break;
      t = &it->second;
    }
    return t;
  }

  void bind(const std::string& v, const Term& t) {
    bind_.emplace(v, t);
    trail_.push_back(v);
  }

  void undo_to(size_t mark) {
    while (trail_.size() > mark) {
      bind_.erase(trail_.back());
      trail_.pop_back();
    }
  }

  bool unify(const Term& a0, const Term& b0) {
    const Term* a = walk(&a0);
    const Term* b = walk(&b0);
    if (a->is_var()) {
      if (b->is_var() && a->name == b->name) return true;
      bind(a->name, *b);
      return true;
    }
    if (b->is_var()) {
      bind(b->name, *a);
      return true;
    }
    if (a->is_num() || b->is_num()) return a->is_num() && b->is_num() && a->num == b->num;
    if (a->name != b->name || a->args.size() != b->args.size()) return false;
    for (size_t i = 0; i < a->args.size(); ++i)
      if (!unify(a->args[i], b->args[i])) return false;
    return true;
  }

  Term resolve(const Term& t0) const {
    const Term* t = walk(&t0);
    if (!t->is_comp() || t->args.empty()) return *t;
    Term out = *t;
    for (auto& a : out.args) a = resolve(a);
    return out;
  }

  Term rename(const Term& t, long long id) const {
    if (t.is_var()) return mk_var(t.name + "#" + std::to_string(id));
    if (!t.is_comp() || t.args.empty()) return t;
    Term out = t;
    for (auto& a : out.args) a = rename(a, id);
    return out;
  }

  long long eval_arith(const Term& t0) {
    const Term* t = walk(&t0);
    if (t->is_num()) return t->num;
    if (t->is_var())
      throw OracleError("unbound variable in arithmetic expression");
    if (t->args.size() == 2) {
      long long a = eval_arith(t->args[0]);
      long long b = eval_arith(t->args[1]);
      if (t->name == "+") return a + b;
      if (t->name == "-") return a - b;
      if (t->name == "*") return a * b;
      if (t->name == "//") {
        if (b == 0) throw OracleError("zero divisor");
        return a / b;  // C++ division truncates, matching //
      }
      if (t->name == "mod") {
        if (b == 0) throw OracleError("zero divisor");
        long long r = a % b;
        if (r != 0 && (r < 0) != (b < 0)) r += b;
        return r;
      }
    }
    if (t->args.size() == 1 && t->name == "-") return -eval_arith(t->args[0]);
    throw OracleError("unknown arithmetic term: " + term_to_string(*t));
  }

  bool eval_builtin(const Term& g) {
    const std::string& f = g.name;
    if (f == "is") {
      long long v = eval_arith(g.args[1]);
      return unify(g.args[0], mk_num(v));
    }
    long long a = eval_arith(g.args[0]);
    long long b = eval_arith(g.args[1]);
    if (f == "<") return a < b;
    if (f == ">") return a > b;
    if (f == "=<") return a <= b;
    if (f == ">=") return a >= b;
    if (f == "=:=") return a == b;
    if (f == "=\\=") return a != b;
    throw OracleError("unknown builtin: " + g.functor_key());
  }

  void solve(std::vector<Term>& goals, int depth) {
    if (depth > lim_.max_depth) throw CapHit{};
    if (goals.empty()) {
      ++trace_->solutions;
      trace_->solution_goals.push_back(resolve(trace_->goal));
      return;
    }
    // goals are kept in execution order; take the first
    Term g = *walk(&goals.front());
    std::vector<Term> rest(goals.begin() + 1, goals.end());

    if (is_builtin(g.functor_key())) {
      size_t mark = trail_.size();
      if (eval_builtin(g)) solve(rest, depth + 1);
      undo_to(mark);
      return;
    }
    const std::vector<Clause>* cs = prog_.clauses_of(g.functor_key());
    if (!cs)
      throw OracleError("call to undefined predicate " + g.functor_key());
    for (const Clause& c : *cs) {
      long long id = ++rename_counter_;
      Term head = rename(c.head, id);
      size_t mark = trail_.size();
      if (unify(g, head)) {
        if (++trace_->steps > lim_.max_steps) throw CapHit{};
        std::vector<Term> next;
        next.reserve(c.body.size() + rest.size());
        for (auto& b : c.body) next.push_back(rename(b, id));
        next.insert(next.end(), rest.begin(), rest.end());
        solve(next, depth + 1);
      }
      undo_to(mark);
    }
  }
};

}  // namespace detail

inline ExecTrace run_goal(const Program& p, const Term& goal, Limits lim = {}) {
  detail::Interp in(p, lim);
  return in.run(goal);
}

inline std::string trace_to_string(const ExecTrace& tr) {
  std::string s = "goal: " + term_to_string(tr.goal) + "\n";
  s += "steps: " + std::to_string(tr.steps) + "\n";
  s += "solutions: " + std::to_string(tr.solutions) + "\n";
  for (auto& g : tr.solution_goals) s += "solution: " + term_to_string(g) + "\n";
  if (tr.cap_hit) s += "cap_hit: true\n";
  return s;
}

// ---------------------------------------------------------------------------
// Bound checking against closed forms

struct Verdict {
  bool ok = true;
  std::vector<std::string> violations;

  void violate(const std::string& msg) {
    ok = false;
    violations.push_back(msg);
  }
};

// Environment construction: one map per bound direction.  Measured input
// positions have lo == hi, so both the lower-bound variable and the
// upper-bound variable of a position map to the measured value; positions
// with no occupants map to the direction's safe extreme (0 below,
// infinity above).
inline void extend_env_from_measurement(const Schema& schema,
                                        const ConcreteSize& measured,
                                        std::map<std::string, Rat>& env_lo,
                                        std::map<std::string, Rat>& env_hi) {
  std::vector<std::pair<std::string, std::string>> vars;
  schema_bound_vars(schema, vars);
  std::vector<std::optional<std::pair<Rat, Rat>>> vals;
  concrete_bounds(measured, vals);
  if (vars.size() != vals.size())
    throw OracleError("schema/measurement shape mismatch");
  for (size_t i = 0; i < vars.size(); ++i) {
    Rat lo = vals[i] ? vals[i]->first : Rat(0);
    Rat hi = vals[i] ? vals[i]->second : Rat::inf();
    env_lo[vars[i].first] = lo;
    env_lo[vars[i].second] = lo;
    env_hi[vars[i].first] = hi;
    env_hi[vars[i].second] = hi;
  }
}

inline void check_value(const std::string& what, const Rat& observed,
                        const ExprP& lower, const ExprP& upper,
                        const std::map<std::string, Rat>& env_lo,
                        const std::map<std::string, Rat>& env_hi, Verdict& v) {
  Rat lo = lower ? evaluate(lower, env_lo, RoundDir::Down) : Rat(0);
  Rat hi = upper ? evaluate(upper, env_hi, RoundDir::Up) : Rat::inf();
  if (observed < lo)
    v.violate(what + ": observed " + observed.str() + " < lower " + lo.str());
  if (observed > hi)
    v.violate(what + ": observed " + observed.str() + " > upper " + hi.str());
}

// Checks one measured output argument against an output schema whose
// bounds are closed-form expressions over the input bound variables.
inline void check_output_schema(const std::string& what, const Schema& out_schema,
                                const ConcreteSize& measured,
                                const std::map<std::string, Rat>& env_lo,
                                const std::map<std::string, Rat>& env_hi,
                                Verdict& v) {
  std::vector<const Schema*> snodes;
  std::vector<const ConcreteSize*> cnodes;
  std::function<void(const Schema&)> flat_s = [&](const Schema& s) {
    snodes.push_back(&s);
    for (auto& a : s.args) flat_s(a);
  };
  std::function<void(const ConcreteSize&)> flat_c = [&](const ConcreteSize& c) {
    cnodes.push_back(&c);
    for (auto& a : c.args) flat_c(a);
  };
  flat_s(out_schema);
  flat_c(measured);
  if (snodes.size() != cnodes.size())
    throw OracleError("output schema/measurement shape mismatch");
  for (size_t i = 0; i < snodes.size(); ++i) {
    const Schema& s = *snodes[i];
    const ConcreteSize& c = *cnodes[i];
    if (!c.populated) continue;  // nothing observed at this position
    std::string where = what + "@" + detail::display_symbol(s.symbol) +
                        detail::pos_tag(s.pos);
    check_value(where, c.lo, s.lower, nullptr, env_lo, env_hi, v);
    check_value(where, c.hi, nullptr, s.upper, env_lo, env_hi, v);
  }
}

}  // namespace sizedcost
