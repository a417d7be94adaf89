#pragma once

#include "sizedcost/resdom.hpp"

namespace sizedcost {

// ---------------------------------------------------------------------------
// Whole-program analysis: demand-driven over call patterns, grouped by
// strongly connected components of the call graph.  Each predicate summary
// carries closed-form bounds over the canonical input bound variables
// (a1..ak below, b1..bk above, in schema pre-order across input arguments).

struct AnalysisOptions {
  int max_patterns_per_scc = 20;
  size_t max_inline_equations = 64;
  int max_inline_rounds = 8;
};

struct PredSummary {
  std::string key;
  std::string pred;  // name/arity
  std::vector<ArgMode> modes;
  std::vector<std::string> in_types;
  std::vector<std::string> out_types;  // "" when unknown
  std::vector<Schema> input_schemas;   // canonical fresh a/b variables
  std::vector<Schema> out_schemas;     // bounds are closed forms (null = nob)
  ExprP sol_lo, sol_hi;
  std::map<std::string, std::pair<ExprP, ExprP>> res;
  NfDet nfdet;
  bool fallback = false;
  std::vector<std::string> diagnostics;
};

struct AnalysisResult {
  Grammar grammar;
  std::map<std::string, PredSummary> summaries;
  std::vector<std::string> entry_keys;  // aligned with the entry assertions
  std::vector<std::string> diagnostics;
};

// A call pattern: the predicate plus per-argument modes, input types, and
// (optional) constant value ranges of numeric inputs.
struct CallPattern {
  std::string pred;  // name/arity
  std::vector<ArgMode> modes;
  std::vector<std::string> in_types;   // one per input argument
  std::vector<std::string> out_types;  // one per output argument
  std::vector<std::optional<std::pair<long long, long long>>> in_ranges;
  // list-length floors used only to narrow nf sampling; deliberately not
  // part of the pattern key, so they never split call patterns
  std::vector<std::optional<std::pair<long long, long long>>> list_ranges;

  std::string key() const {
    std::string s = pred + "[";
    size_t ii = 0, oi = 0;
    for (size_t i = 0; i < modes.size(); ++i) {
      if (i) s += ",";
      if (modes[i] == ArgMode::Input) {
        s += "in:" + in_types[ii];
        if (ii < in_ranges.size() && in_ranges[ii])
          s += "{" + std::to_string(in_ranges[ii]->first) + ".." +
               std::to_string(in_ranges[ii]->second) + "}";
        ++ii;
      } else {
        s += "out:" + (oi < out_types.size() ? out_types[oi] : std::string());
        ++oi;
      }
    }
    return s + "]";
  }
};

namespace detail {

// --- schema helpers --------------------------------------------------------

// pre-order bound slots: every Base or recursive-symbol node carries one
inline void schema_slots(Schema& s, std::vector<Schema*>& out) {
  if (s.k != Schema::K::NonRecSym) out.push_back(&s);
  for (auto& a : s.args) schema_slots(a, out);
}
inline void schema_slots_const(const Schema& s, std::vector<const Schema*>& out) {
  if (s.k != Schema::K::NonRecSym) out.push_back(&s);
  for (auto& a : s.args) schema_slots_const(a, out);
}

inline Schema schema_clear_bounds(const Schema& s) {
  Schema out = s;
  out.lower = nullptr;
  out.upper = nullptr;
  for (auto& a : out.args) a = schema_clear_bounds(a);
  return out;
}

// positionwise merge of bound contributions: lower = min, upper = max;
// a null side (no occupants) is neutral
inline void schema_merge(Schema& into, const Schema& from) {
  if (into.k != Schema::K::NonRecSym) {
    if (from.lower)
      into.lower = into.lower ? simplify(ex_min({into.lower, from.lower}))
                              : from.lower;
    if (from.upper)
      into.upper = into.upper ? simplify(ex_max({into.upper, from.upper}))
                              : from.upper;
  }
  size_t n = std::min(into.args.size(), from.args.size());
  for (size_t i = 0; i < n; ++i) schema_merge(into.args[i], from.args[i]);
}

inline std::string find_list_symbol(const Grammar& g, const std::string& elem) {
  for (auto& [sym, alts] : g)
    for (auto& alt : alts)
      if (alt.is_comp() && alt.args.size() == 2 && alt.args[0].is_atom(elem) &&
          alt.args[1].is_atom(sym))
        return sym;
  return "";
}

inline void term_vars(const Term& t, std::set<std::string>& out) {
  if (t.is_var()) out.insert(t.name);
  for (auto& a : t.args) term_vars(a, out);
}

// type symbol of a term under the current variable typing; "" when unknown
inline std::string term_symbol(const Term& t, const SizedElement& e,
                               const Grammar& g) {
  if (t.is_num()) return "num";
  if (t.is_var()) {
    auto it = e.t.find(t.name);
    return it == e.t.end() ? "" : it->second.first.symbol;
  }
  if (t.is_cons()) {
    // walk the spine: a typed tail names the symbol directly
    const Term* node = &t;
    while (node->is_cons()) node = &node->args[1];
    if (node->is_var()) {
      auto it = e.t.find(node->name);
      if (it != e.t.end()) return it->second.first.symbol;
    }
    std::string es = term_symbol(t.args[0], e, g);
    if (!es.empty()) return find_list_symbol(g, es);
    return "";
  }
  for (auto& [sym, alts] : g)
    for (auto& alt : alts) {
      if (alt.is_atom() && t.is_atom(alt.name)) return sym;
      if (alt.is_comp() && t.is_comp() && alt.name == t.name &&
          alt.args.size() == t.args.size())
        return sym;
    }
  return "";
}

// schema (with expression bounds) of a term against a known type shape;
// null bounds mean "no occupants at this position"
inline Schema term_schema(const Term& t, const Schema& shape,
                          const SizedElement& e, const Grammar& g) {
  if (t.is_var()) {
    auto it = e.t.find(t.name);
    if (it != e.t.end()) return it->second.first;
    // unbound variable: nothing known
    Schema out = schema_clear_bounds(shape);
    std::vector<Schema*> slots;
    schema_slots(out, slots);
    for (auto* s : slots) {
      s->lower = s->k == Schema::K::Base ? ex_const(Rat::neg_inf()) : ex_int(0);
      s->upper = ex_inf();
    }
    return out;
  }
  if (t.is_num()) {
    if (shape.k != Schema::K::Base)
      throw DomainError("numeric term against non-numeric type");
    Schema out = shape;
    out.args.clear();
    out.lower = ex_int(t.num);
    out.upper = ex_int(t.num);
    return out;
  }
  if (shape.k == Schema::K::Base)
    throw DomainError("constructor term against numeric type");

  auto it = g.find(shape.symbol);
  if (it == g.end()) throw DomainError("undefined symbol " + shape.symbol);

  if (shape.k == Schema::K::NonRecSym) {
    for (auto& alt : it->second) {
      if (alt.is_atom() && t.is_atom(alt.name)) return schema_clear_bounds(shape);
      if (alt.is_comp() && t.is_comp() && alt.name == t.name &&
          alt.args.size() == t.args.size()) {
        Schema out = schema_clear_bounds(shape);
        for (size_t i = 0; i < alt.args.size(); ++i)
          for (size_t j = 0; j < shape.args.size(); ++j)
            if (shape.args[j].pos.functor == alt.name &&
                shape.args[j].pos.idx == (int)i + 1)
              schema_merge(out.args[j],
                           term_schema(t.args[i], shape.args[j], e, g));
        return out;
      }
    }
    throw DomainError("term not in type " + shape.symbol);
  }

  // recursive symbol: walk the spine, merging non-spine children
  Schema out = schema_clear_bounds(shape);
  long long count = 0;
  const Term* node = &t;
  for (;;) {
    if (node->is_var()) {
      auto vt = e.t.find(node->name);
      if (vt == e.t.end()) {
        out.lower = ex_int(count);
        out.upper = ex_inf();
        std::vector<Schema*> slots;
        std::vector<Schema*> top;
        schema_slots(out, top);
        for (size_t i = 1; i < top.size(); ++i) {
          top[i]->lower = top[i]->k == Schema::K::Base
                              ? ex_const(Rat::neg_inf())
                              : ex_int(0);
          top[i]->upper = ex_inf();
        }
        return out;
      }
      const Schema& tail = vt->second.first;
      if (tail.lower) out.lower = simplify(ex_add(tail.lower, ex_int(count)));
      if (tail.upper) out.upper = simplify(ex_add(tail.upper, ex_int(count)));
      size_t n = std::min(out.args.size(), tail.args.size());
      for (size_t i = 0; i < n; ++i) schema_merge(out.args[i], tail.args[i]);
      return out;
    }
    const Term* alt = nullptr;
    for (auto& a : it->second) {
      if (a.is_atom() && node->is_atom(a.name)) alt = &a;
      if (a.is_comp() && !a.args.empty() && node->is_comp() &&
          node->name == a.name && node->args.size() == a.args.size())
        alt = &a;
    }
    if (!alt)
      throw DomainError("term not in type " + shape.symbol + ": " +
                        term_to_string(*node));
    if (alt->is_atom()) {
      out.lower = ex_int(count);
      out.upper = ex_int(count);
      return out;
    }
    const Term* spine = nullptr;
    for (size_t i = 0; i < alt->args.size(); ++i) {
      if (alt->args[i].is_atom(shape.symbol)) {
        spine = &node->args[i];
        continue;
      }
      for (size_t j = 0; j < shape.args.size(); ++j)
        if (shape.args[j].pos.functor == alt->name &&
            shape.args[j].pos.idx == (int)i + 1)
          schema_merge(out.args[j],
                       term_schema(node->args[i], shape.args[j], e, g));
    }
    if (!spine) {  // no recursive position: behaves like a closed node
      out.lower = ex_int(count);
      out.upper = ex_int(count);
      return out;
    }
    ++count;
    node = spine;
  }
}

// expected type shapes for variables in a head output pattern, top-down
inline void expected_shapes(const Term& t, const Schema& shape, const Grammar& g,
                            std::map<std::string, const Schema*>& out) {
  if (t.is_var()) {
    out.emplace(t.name, &shape);
    return;
  }
  if (t.is_num() || shape.k == Schema::K::Base) return;
  auto it = g.find(shape.symbol);
  if (it == g.end()) return;
  if (shape.k == Schema::K::RecSym) {
    const Term* node = &t;
    while (node->is_comp()) {
      const Term* alt = nullptr;
      for (auto& a : it->second)
        if (a.is_comp() && !a.args.empty() && node->name == a.name &&
            node->args.size() == a.args.size())
          alt = &a;
      if (!alt) return;
      const Term* spine = nullptr;
      for (size_t i = 0; i < alt->args.size(); ++i) {
        if (alt->args[i].is_atom(shape.symbol)) {
          spine = &node->args[i];
          continue;
        }
        for (size_t j = 0; j < shape.args.size(); ++j)
          if (shape.args[j].pos.functor == alt->name &&
              shape.args[j].pos.idx == (int)i + 1)
            expected_shapes(node->args[i], shape.args[j], g, out);
      }
      if (!spine) return;
      node = spine;
    }
    if (node->is_var()) out.emplace(node->name, &shape);
    return;
  }
  for (auto& alt : it->second)
    if (alt.is_comp() && t.is_comp() && alt.name == t.name &&
        alt.args.size() == t.args.size())
      for (size_t i = 0; i < alt.args.size(); ++i)
        for (size_t j = 0; j < shape.args.size(); ++j)
          if (shape.args[j].pos.functor == alt.name &&
              shape.args[j].pos.idx == (int)i + 1)
            expected_shapes(t.args[i], shape.args[j], g, out);
}

// negation of a single guard atom, as one or two atoms (one per piece)
inline std::vector<Constraint> negate_constraint(const Constraint& c) {
  switch (c.op) {
    case GuardAtom::Op::Eq:
      return {{c.var, GuardAtom::Op::Lt, c.k}, {c.var, GuardAtom::Op::Gt, c.k}};
    case GuardAtom::Op::Ge: return {{c.var, GuardAtom::Op::Lt, c.k}};
    case GuardAtom::Op::Gt: return {{c.var, GuardAtom::Op::Le, c.k}};
    case GuardAtom::Op::Le: return {{c.var, GuardAtom::Op::Gt, c.k}};
    case GuardAtom::Op::Lt: return {{c.var, GuardAtom::Op::Ge, c.k}};
  }
  return {};
}

inline std::optional<GuardAtom::Op> comparison_op(const std::string& f) {
  if (f == "<") return GuardAtom::Op::Lt;
  if (f == ">") return GuardAtom::Op::Gt;
  if (f == "=<") return GuardAtom::Op::Le;
  if (f == ">=") return GuardAtom::Op::Ge;
  if (f == "=:=") return GuardAtom::Op::Eq;
  return std::nullopt;  // =\= has no single-atom encoding
}

inline GuardAtom::Op flip_op(GuardAtom::Op op) {
  switch (op) {
    case GuardAtom::Op::Lt: return GuardAtom::Op::Gt;
    case GuardAtom::Op::Gt: return GuardAtom::Op::Lt;
    case GuardAtom::Op::Le: return GuardAtom::Op::Ge;
    case GuardAtom::Op::Ge: return GuardAtom::Op::Le;
    default: return op;
  }
}

// positional canonicalization of head variables, so that tests compare
// equal across clauses regardless of variable naming
inline void canon_positions(const Term& t, const std::string& path,
                            std::map<std::string, std::string>& m) {
  if (t.is_var()) {
    m.emplace(t.name, path);
    return;
  }
  for (size_t i = 0; i < t.args.size(); ++i)
    canon_positions(t.args[i], path + "." + std::to_string(i), m);
}

inline Term rename_vars(const Term& t,
                        const std::map<std::string, std::string>& m) {
  Term c = t;
  if (c.is_var()) {
    auto it = m.find(c.name);
    c.name = it != m.end() ? it->second : "?";
    return c;
  }
  for (auto& a : c.args) a = rename_vars(a, m);
  return c;
}

// head input pattern classification for the nf/det heuristic
// constant lower bound of an expression over nonnegative variable
// assignments; defined only for monotone operator combinations
inline std::optional<Rat> monotone_floor(const ExprP& e) {
  switch (e->k) {
    case Expr::K::Const:
      return e->c.is_finite() && e->c.sign() >= 0 ? std::optional<Rat>(e->c)
                                                  : std::nullopt;
    case Expr::K::Var:
      return Rat(0);
    case Expr::K::Add: {
      Rat s(0);
      for (auto& a : e->args) {
        auto f = monotone_floor(a);
        if (!f) return std::nullopt;
        s = s + *f;
      }
      return s;
    }
    case Expr::K::Mul: {
      Rat s(1);
      for (auto& a : e->args) {
        auto f = monotone_floor(a);
        if (!f) return std::nullopt;
        s = s * *f;
      }
      return s;
    }
    case Expr::K::Min: {
      std::optional<Rat> s;
      for (auto& a : e->args) {
        auto f = monotone_floor(a);
        if (!f) return std::nullopt;
        s = s ? Rat::min(*s, *f) : *f;
      }
      return s;
    }
    case Expr::K::Max: {
      std::optional<Rat> s;
      for (auto& a : e->args) {
        auto f = monotone_floor(a);
        if (!f) return std::nullopt;
        s = s ? Rat::max(*s, *f) : *f;
      }
      return s;
    }
    default:
      return std::nullopt;
  }
}

inline std::string input_pattern_of(const Term& t, const Schema& sch,
                                    const Grammar& g) {
  if (t.is_var()) return "var";
  if (t.is_num()) return sch.k == Schema::K::Base ? "num:" + std::to_string(t.num)
                                                  : "var";
  if (sch.k != Schema::K::RecSym) return "var";
  auto it = g.find(sch.symbol);
  if (it == g.end()) return "var";
  long long count = 0;
  const Term* node = &t;
  for (;;) {
    if (node->is_var()) return "list:ge:" + std::to_string(count);
    const Term* alt = nullptr;
    for (auto& a : it->second) {
      if (a.is_atom() && node->is_atom(a.name)) alt = &a;
      if (a.is_comp() && !a.args.empty() && node->is_comp() &&
          node->name == a.name && node->args.size() == a.args.size())
        alt = &a;
    }
    if (!alt) return "var";
    if (alt->is_atom()) return "list:eq:" + std::to_string(count);
    const Term* spine = nullptr;
    for (size_t i = 0; i < alt->args.size(); ++i)
      if (alt->args[i].is_atom(sch.symbol)) spine = &node->args[i];
    if (!spine) return "list:eq:" + std::to_string(count);
    ++count;
    node = spine;
  }
}

// ---------------------------------------------------------------------------

class Analyzer {
 public:
  Analyzer(const Program& prog, std::vector<ResourceDef> resources,
           AnalysisOptions opts)
      : prog_(prog), resources_(std::move(resources)), opts_(opts) {
    g_ = prog.type_rules;
    compute_sccs();
  }

  const Grammar& grammar() const { return g_; }
  const std::map<std::string, PredSummary>& summaries() const {
    return summaries_;
  }
  std::vector<std::string> diagnostics;

  const PredSummary& analyze(const CallPattern& pat) {
    std::string key = pat.key();
    auto it = summaries_.find(key);
    if (it != summaries_.end()) return it->second;
    if (!prog_.clauses_of(pat.pred) || in_progress_.count(key))
      return external_summary(pat);
    run_scc(pat);
    it = summaries_.find(key);
    if (it != summaries_.end()) return it->second;
    return external_summary(pat);
  }

 private:
  const Program& prog_;
  Grammar g_;
  std::vector<ResourceDef> resources_;
  AnalysisOptions opts_;
  std::map<std::string, int> scc_id_;
  std::map<std::string, PredSummary> summaries_;
  std::set<std::string> in_progress_;
  std::map<std::string, Schema> shape_cache_;
  int tag_ = 1;

  // --- SCCs over the predicate call graph ---------------------------------

  void compute_sccs() {
    std::map<std::string, std::vector<std::string>> edges;
    for (auto& key : prog_.pred_order) {
      auto& cs = prog_.predicates.at(key);
      for (auto& c : cs)
        for (auto& b : c.body) {
          std::string bk = b.functor_key();
          if (prog_.predicates.count(bk)) edges[key].push_back(bk);
        }
      edges[key];  // ensure node exists
    }
    // Tarjan
    std::map<std::string, int> index, low;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    int idx = 0, comp = 0;
    std::function<void(const std::string&)> strong = [&](const std::string& v) {
      index[v] = low[v] = idx++;
      stack.push_back(v);
      on_stack.insert(v);
      for (auto& w : edges[v]) {
        if (!index.count(w)) {
          strong(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.count(w)) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        for (;;) {
          std::string w = stack.back();
          stack.pop_back();
          on_stack.erase(w);
          scc_id_[w] = comp;
          if (w == v) break;
        }
        ++comp;
      }
    };
    for (auto& [v, _] : edges)
      if (!index.count(v)) strong(v);
  }

  bool same_scc(const std::string& a, const std::string& b) const {
    auto i = scc_id_.find(a), j = scc_id_.find(b);
    return i != scc_id_.end() && j != scc_id_.end() && i->second == j->second;
  }

  // structural typing of the variables in a head input term
  void head_var_symbols(const Term& t, const std::string& sym,
                        std::map<std::string, std::string>& out) const {
    if (t.is_var()) {
      out.emplace(t.name, sym);
      return;
    }
    if (sym == "num" || t.is_num()) return;
    auto it = g_.find(sym);
    if (it == g_.end()) return;
    for (auto& alt : it->second)
      if (alt.is_comp() && t.is_comp() && alt.name == t.name &&
          alt.args.size() == t.args.size())
        for (size_t i = 0; i < alt.args.size(); ++i)
          if (alt.args[i].is_atom())
            head_var_symbols(t.args[i], alt.args[i].name, out);
  }

  std::string symbol_of_term(const Term& t,
                             const std::map<std::string, std::string>& vt) const {
    if (t.is_num()) return "num";
    if (t.is_var()) {
      auto it = vt.find(t.name);
      return it == vt.end() ? "" : it->second;
    }
    if (t.is_cons()) {
      const Term* n = &t;
      while (n->is_cons()) n = &n->args[1];
      if (n->is_var()) {
        auto it = vt.find(n->name);
        if (it != vt.end()) return it->second;
      }
      std::string es = symbol_of_term(t.args[0], vt);
      return es.empty() ? "" : find_list_symbol(g_, es);
    }
    for (auto& [sym, alts] : g_)
      for (auto& alt : alts)
        if ((alt.is_atom() && t.is_atom(alt.name)) ||
            (alt.is_comp() && t.is_comp() && alt.name == t.name &&
             alt.args.size() == t.args.size()))
          return sym;
    return "";
  }

  // fill blank output types of a callee pattern from the structure of its
  // own clause heads (input variables typed against the call's input types)
  void infer_out_types(CallPattern& q) const {
    const std::vector<Clause>* cls = prog_.clauses_of(q.pred);
    if (!cls) return;
    for (size_t o = 0; o < q.out_types.size(); ++o) {
      if (!q.out_types[o].empty()) continue;
      for (auto& c : *cls) {
        if (c.head.args.size() != q.modes.size()) continue;
        std::map<std::string, std::string> vt;
        size_t ii = 0, oi = 0;
        const Term* out_term = nullptr;
        for (size_t i = 0; i < c.head.args.size(); ++i) {
          if (q.modes[i] == ArgMode::Input) {
            head_var_symbols(c.head.args[i], q.in_types[ii++], vt);
          } else {
            if (oi == o) out_term = &c.head.args[i];
            ++oi;
          }
        }
        if (!out_term) continue;
        std::string sym = symbol_of_term(*out_term, vt);
        if (!sym.empty()) {
          q.out_types[o] = sym;
          break;
        }
      }
    }
  }

  const Schema& shape_of(const std::string& sym) {
    auto it = shape_cache_.find(sym);
    if (it != shape_cache_.end()) return it->second;
    VarSupply throwaway;
    Schema s = derive_sized_schema(g_, sym, throwaway);
    return shape_cache_.emplace(sym, schema_clear_bounds(s)).first->second;
  }

  const PredSummary& external_summary(const CallPattern& pat) {
    PredSummary s;
    s.key = pat.key();
    s.pred = pat.pred;
    s.modes = pat.modes;
    s.in_types = pat.in_types;
    s.out_types = pat.out_types;
    s.sol_lo = ex_int(0);
    s.sol_hi = ex_inf();
    for (auto& rd : resources_)
      s.res[rd.name] = {ex_const(rd.default_lower), ex_inf()};
    for (auto& ot : pat.out_types) {
      if (ot.empty() || (ot != "num" && !g_.count(ot))) {
        s.out_schemas.push_back(Schema{});
        continue;
      }
      Schema sh = shape_of(ot);
      std::vector<Schema*> slots;
      schema_slots(sh, slots);
      for (auto* sl : slots) {
        sl->lower = sl->k == Schema::K::Base ? ex_const(Rat::neg_inf())
                                             : ex_int(0);
        sl->upper = ex_inf();
      }
      s.out_schemas.push_back(sh);
    }
    s.fallback = true;
    s.diagnostics.push_back("no definition for " + pat.pred +
                            "; assuming unknown external behavior");
    diagnostics.push_back(s.diagnostics.back());
    return summaries_.emplace(s.key, std::move(s)).first->second;
  }

  // --- per-SCC analysis ----------------------------------------------------

  struct ClauseInfo {
    Guard guard_lo, guard_hi;
    ExprP sol_lo, sol_hi;
    std::map<std::string, std::pair<ExprP, ExprP>> res;
    // upper-direction abort pieces: guard + per-resource accrued cost
    std::vector<std::pair<Guard, std::map<std::string, ExprP>>> aborts;
    std::vector<Schema> outs;  // per output arg; empty symbol = unknown
    // accrued cost at an exclusive-group test, for cross-branch merging
    bool in_group = false;
    std::map<std::string, std::pair<ExprP, ExprP>> group_snap;
    bool broken = false;
    std::string broken_why;
  };

  struct PatternState {
    CallPattern pat;
    std::string key;
    std::vector<Schema> input_schemas;
    std::vector<std::string> params_lo, params_hi;
    std::set<std::string> input_vars;
    EntryAssertion entry;
    std::vector<ClauseShape> shapes;
    std::vector<std::vector<std::string>> same_scc_callees;  // per clause
    std::vector<bool> base_nf, base_det;                     // per clause
    std::vector<int> group_of;                               // per clause
    std::vector<int> hgroup_of;  // head-exclusive groups, per clause
    NfDet nfdet;
    std::vector<ClauseInfo> infos;  // after merging, one per piece source
    std::vector<Schema> out_shapes;
    bool broken = false;
    std::vector<std::string> diags;
  };

  struct Solved {
    std::vector<std::string> params;
    ExprP expr;
    bool fallback = false;
  };

  // state for the SCC currently being analyzed
  std::map<std::string, PatternState> states_;
  std::vector<std::string> order_;
  std::vector<std::string> queue_;
  int cur_scc_ = -1;
  std::map<std::string, Solved> solved_;
  std::map<std::string, std::vector<RecEq>> pieces_;  // "@key!qty!dir"

  void run_scc(const CallPattern& p0) {
    auto saved_states = std::move(states_);
    auto saved_order = std::move(order_);
    auto saved_queue = std::move(queue_);
    auto saved_solved = std::move(solved_);
    auto saved_pieces = std::move(pieces_);
    int saved_scc = cur_scc_;
    states_.clear();
    order_.clear();
    queue_.clear();
    solved_.clear();
    pieces_.clear();
    cur_scc_ = scc_id_.at(p0.pred);

    register_pattern(p0);
    // pass 1: discover patterns, collect shapes and callee structure
    for (size_t qi = 0; qi < queue_.size(); ++qi) {
      std::string key = queue_[qi];
      PatternState& st = states_.at(key);
      auto& clauses = *prog_.clauses_of(st.pat.pred);
      st.shapes.resize(clauses.size());
      st.same_scc_callees.resize(clauses.size());
      st.base_nf.assign(clauses.size(), true);
      st.base_det.assign(clauses.size(), true);
      for (size_t ci = 0; ci < clauses.size(); ++ci) {
        try {
          traverse_clause(st, clauses[ci], ci, /*pass=*/1);
        } catch (const std::exception& ex) {
          st.broken = true;
          st.diags.push_back(std::string("clause analysis failed: ") + ex.what());
        }
      }
    }

    compute_nfdet();
    compute_groups();

    // pass 2: definitive traversal producing pieces
    for (auto& key : order_) {
      PatternState& st = states_.at(key);
      if (st.broken) continue;
      auto& clauses = *prog_.clauses_of(st.pat.pred);
      st.infos.clear();
      for (size_t ci = 0; ci < clauses.size(); ++ci) {
        ClauseInfo info;
        try {
          info = traverse_clause(st, clauses[ci], ci, /*pass=*/2);
        } catch (const std::exception& ex) {
          info.broken = true;
          info.broken_why = ex.what();
        }
        if (info.broken) {
          st.broken = true;
          st.diags.push_back("clause analysis failed: " + info.broken_why);
        }
        st.infos.push_back(std::move(info));
      }
      merge_groups(st);
    }

    build_pieces();
    solve_all();
    assemble_summaries();

    states_ = std::move(saved_states);
    order_ = std::move(saved_order);
    queue_ = std::move(saved_queue);
    solved_ = std::move(saved_solved);
    pieces_ = std::move(saved_pieces);
    cur_scc_ = saved_scc;
  }

  std::string register_pattern(const CallPattern& pat) {
    std::string key = pat.key();
    if (states_.count(key)) {
      // list floors are not part of the key: keep only floors that hold at
      // every call site of this pattern
      auto& have = states_.at(key).pat.list_ranges;
      for (size_t i = 0; i < have.size(); ++i) {
        if (!have[i]) continue;
        if (i >= pat.list_ranges.size() || !pat.list_ranges[i]) {
          have[i].reset();
        } else {
          have[i]->first = std::min(have[i]->first, pat.list_ranges[i]->first);
          have[i]->second =
              std::max(have[i]->second, pat.list_ranges[i]->second);
        }
      }
      return key;
    }
    if ((int)states_.size() >= opts_.max_patterns_per_scc) {
      diagnostics.push_back("call-pattern budget exceeded in the component of " +
                            pat.pred + "; results fall back to trivial bounds");
      return key;  // caller will not find pieces -> fallback
    }
    PatternState st;
    st.pat = pat;
    st.key = key;
    in_progress_.insert(key);
    // canonical input schemas across input args, shared variable supply
    VarSupply supply;
    for (auto& ty : pat.in_types)
      st.input_schemas.push_back(derive_sized_schema(g_, ty, supply));
    for (auto& sc : st.input_schemas) {
      std::vector<const Schema*> slots;
      schema_slots_const(sc, slots);
      for (auto* s : slots) {
        st.params_lo.push_back(s->lower->name);
        st.params_hi.push_back(s->upper->name);
        st.input_vars.insert(s->lower->name);
        st.input_vars.insert(s->upper->name);
      }
    }
    st.entry.pred = pat.pred;
    size_t ii = 0, oi = 0;
    for (auto m : pat.modes) {
      EntryArgSpec a;
      a.mode = m;
      a.type_name = m == ArgMode::Input ? pat.in_types[ii++]
                                        : (oi < pat.out_types.size()
                                               ? pat.out_types[oi++]
                                               : "");
      st.entry.args.push_back(a);
    }
    for (auto& ot : pat.out_types)
      st.out_shapes.push_back(!ot.empty() && (ot == "num" || g_.count(ot))
                                  ? shape_of(ot)
                                  : Schema{});
    order_.push_back(key);
    queue_.push_back(key);
    states_.emplace(key, std::move(st));
    return key;
  }

  // --- nf / det ------------------------------------------------------------

  void compute_nfdet() {
    for (auto& [key, st] : states_) {
      st.nfdet.not_fails = !st.broken;
      st.nfdet.is_det = !st.broken;
    }
    for (int round = 0; round < (int)states_.size() + 2; ++round) {
      bool changed = false;
      for (auto& [key, st] : states_) {
        if (st.broken) continue;
        for (size_t ci = 0; ci < st.shapes.size(); ++ci) {
          bool nf = st.base_nf[ci], det = st.base_det[ci];
          for (auto& ck : st.same_scc_callees[ci]) {
            auto it = states_.find(ck);
            if (it == states_.end()) {
              nf = det = false;
              continue;
            }
            nf = nf && it->second.nfdet.not_fails;
            det = det && it->second.nfdet.is_det;
          }
          st.shapes[ci].body_all_nf = nf;
          st.shapes[ci].body_all_det = det;
        }
        std::vector<std::pair<long long, long long>> ranges;
        for (size_t i = 0; i < st.pat.in_types.size(); ++i) {
          if (i < st.pat.in_ranges.size() && st.pat.in_ranges[i])
            ranges.push_back(*st.pat.in_ranges[i]);
          else if (i < st.pat.list_ranges.size() && st.pat.list_ranges[i])
            ranges.push_back(*st.pat.list_ranges[i]);
          else
            ranges.push_back({0, 12});
        }
        NfDet nd = infer_nf_det(st.pat.pred, prog_, st.shapes, ranges);
        if (nd.not_fails != st.nfdet.not_fails ||
            nd.is_det != st.nfdet.is_det) {
          // only shrink: the iteration starts optimistic
          st.nfdet.not_fails = st.nfdet.not_fails && nd.not_fails;
          st.nfdet.is_det = st.nfdet.is_det && nd.is_det;
          st.nfdet.prov = nd.prov;
          changed = true;
        } else {
          st.nfdet.prov = nd.prov;
        }
      }
      if (!changed) break;
    }
  }

  // exclusive complementary-test groups, mirroring the nf/det grouping
  void compute_groups() {
    for (auto& [key, st] : states_) {
      st.group_of.assign(st.shapes.size(), -1);
      std::map<std::string, std::vector<size_t>> groups;
      for (size_t i = 0; i < st.shapes.size(); ++i) {
        if (st.shapes[i].first_test.empty() || st.shapes[i].has_unpaired_test)
          continue;
        auto [op, operands] = split_test(st.shapes[i].first_test);
        std::string k;
        for (auto& p : st.shapes[i].input_pats) k += p + ";";
        k += "|" + operands;
        groups[k].push_back(i);
      }
      int gid = 0;
      for (auto& [k, members] : groups) {
        std::set<std::string> ops;
        for (auto m : members)
          ops.insert(split_test(st.shapes[m].first_test).first);
        if (members.size() > 1 && ops_cover(ops))
          for (auto m : members) st.group_of[m] = gid;
        ++gid;
      }
      // head-exclusive groups: clauses whose input patterns agree everywhere
      // except one position carrying pairwise-distinct numeric constants that
      // cover the call pattern's known range for that argument.  At most one
      // such clause can match a concrete call, so their contributions combine
      // by min/max instead of accumulating.
      st.hgroup_of.assign(st.shapes.size(), -1);
      size_t nin = st.shapes.empty() ? 0 : st.shapes[0].input_pats.size();
      int hgid = 0;
      for (size_t p = 0; p < nin; ++p) {
        std::map<std::string, std::vector<size_t>> hg;
        for (size_t i = 0; i < st.shapes.size(); ++i) {
          if (st.group_of[i] >= 0 || st.hgroup_of[i] >= 0) continue;
          auto& pats = st.shapes[i].input_pats;
          if (pats.size() != nin || pats[p].rfind("num:", 0) != 0) continue;
          std::string k;
          for (size_t j = 0; j < nin; ++j) k += (j == p ? "#" : pats[j]) + ";";
          hg[k].push_back(i);
        }
        if (p >= st.pat.in_ranges.size() || !st.pat.in_ranges[p]) continue;
        auto [rlo, rhi] = *st.pat.in_ranges[p];
        for (auto& [k, ms] : hg) {
          if (ms.size() < 2) continue;
          std::set<long long> consts;
          bool ok = true;
          for (auto i : ms) {
            long long v = std::stoll(st.shapes[i].input_pats[p].substr(4));
            ok = ok && consts.insert(v).second;
          }
          for (long long v = rlo; ok && v <= rhi; ++v) ok = ok && consts.count(v);
          if (!ok) continue;
          for (auto i : ms) st.hgroup_of[i] = hgid;
          ++hgid;
        }
      }
    }
  }

  // --- clause traversal ----------------------------------------------------

  ClauseInfo traverse_clause(PatternState& st, const Clause& c, size_t ci,
                             int pass) {
    ClauseInfo info;
    if (c.head.args.size() != st.pat.modes.size())
      throw DomainError("arity mismatch for " + st.pat.pred);
    ResAbstractElement e =
        call_to_entry(c, st.entry, g_, st.input_schemas, resources_, tag_++);

    std::map<std::string, std::string> canon_map;
    for (size_t i = 0; i < c.head.args.size(); ++i)
      canon_positions(c.head.args[i], "$" + std::to_string(i), canon_map);

    // head input variable -> input arg index (for numeric guards)
    std::map<std::string, int> head_var_arg;
    {
      int ii = 0;
      for (size_t i = 0; i < c.head.args.size(); ++i) {
        if (st.pat.modes[i] != ArgMode::Input) continue;
        if (c.head.args[i].is_var())
          head_var_arg.emplace(c.head.args[i].name, ii);
        ++ii;
      }
    }
    if (pass == 1) {
      ClauseShape& sh = st.shapes[ci];
      sh = ClauseShape{};
      int ii = 0;
      for (size_t i = 0; i < c.head.args.size(); ++i) {
        if (st.pat.modes[i] != ArgMode::Input) continue;
        sh.input_pats.push_back(
            input_pattern_of(c.head.args[i], st.input_schemas[ii], g_));
        ++ii;
      }
    }

    // expected shapes for head output variables
    std::map<std::string, const Schema*> expect;
    {
      int oi = 0;
      for (size_t i = 0; i < c.head.args.size(); ++i) {
        if (st.pat.modes[i] == ArgMode::Input) continue;
        if (!st.out_shapes[oi].symbol.empty())
          expected_shapes(c.head.args[i], st.out_shapes[oi], g_, expect);
        ++oi;
      }
    }

    bool grouped = pass == 2 && st.group_of[ci] >= 0;
    bool pred_nf = pass == 1 || st.nfdet.not_fails;
    bool unexpr_seen = false;

    auto guard_hi_now = [&]() {
      Guard gd;
      for (auto& cst : e.sizes.d)
        if (!cst.var.empty() && cst.var[0] == 'b') gd.push_back(cst);
      return gd;
    };
    auto res_now = [&]() {
      PrimeResult pr = exit_to_prime(e, st.input_vars);
      return pr.res;
    };

    for (auto& lit : c.body) {
      std::string fk = lit.functor_key();

      if (fk == "is/2") {
        if (!lit.args[0].is_var() || e.sizes.t.count(lit.args[0].name))
          throw DomainError("is/2 with a bound left-hand side");
        IntervalExpr iv = abstract_arith(lit.args[1], e.sizes);
        Schema s;
        s.k = Schema::K::Base;
        s.symbol = "num";
        s.lower = iv.lo ? iv.lo : ex_const(Rat::neg_inf());
        s.upper = iv.hi ? iv.hi : ex_inf();
        e.sizes.t.emplace(lit.args[0].name,
                          std::make_pair(s, VarClass::Clausal));
        continue;
      }

      if (is_comparison(lit.name) && lit.args.size() == 2) {
        // single-variable-vs-constant tests become guards
        auto op0 = comparison_op(lit.name);
        const Term* vside = nullptr;
        std::optional<Rat> k;
        GuardAtom::Op op = GuardAtom::Op::Eq;
        if (op0) {
          if (lit.args[0].is_var() && lit.args[1].is_num()) {
            vside = &lit.args[0];
            k = Rat(lit.args[1].num);
            op = *op0;
          } else if (lit.args[1].is_var() && lit.args[0].is_num()) {
            vside = &lit.args[1];
            k = Rat(lit.args[0].num);
            op = flip_op(*op0);
          }
        }
        std::optional<Constraint> cl, cu;
        if (vside && k) {
          auto vt = e.sizes.t.find(vside->name);
          if (vt != e.sizes.t.end() && vt->second.first.k == Schema::K::Base) {
            if (vt->second.first.lower)
              cl = constrain_expr(vt->second.first.lower, op, *k);
            if (vt->second.first.upper)
              cu = constrain_expr(vt->second.first.upper, op, *k);
          }
        }
        if (cl && cu) {
          if (pass == 1) {
            auto hv = head_var_arg.find(vside->name);
            if (hv != head_var_arg.end())
              st.shapes[ci].num_guards[hv->second].push_back({op, *k});
          }
          if (pass == 2) {
            Guard snap = guard_hi_now();
            auto rs = res_now();
            for (auto& neg : negate_constraint(*cu)) {
              Guard ag = snap;
              ag.push_back(neg);
              std::map<std::string, ExprP> vals;
              for (auto& [name, p] : rs) vals[name] = p.second;
              info.aborts.push_back({ag, std::move(vals)});
            }
          }
          e.sizes.d.push_back(*cu);
          if (pred_nf && !e.failed)
            e.sizes.d.push_back(*cl);
          else if (pass == 2)
            e.failed = true;
          continue;
        }
        // value-level test: usable only via complementary grouping
        std::string canon =
            lit.name + "|" + term_to_string(rename_vars(lit.args[0], canon_map)) +
            "," + term_to_string(rename_vars(lit.args[1], canon_map));
        bool first = !unexpr_seen;
        unexpr_seen = true;
        if (pass == 1) {
          if (first)
            st.shapes[ci].first_test = canon;
          else
            st.shapes[ci].has_unpaired_test = true;
          continue;
        }
        if (first && grouped) {
          info.in_group = true;
          info.group_snap = res_now();
        } else {
          Guard snap = guard_hi_now();
          auto rs = res_now();
          std::map<std::string, ExprP> vals;
          for (auto& [name, p] : rs) vals[name] = p.second;
          info.aborts.push_back({snap, std::move(vals)});
          e.failed = true;
        }
        continue;
      }

      if (is_builtin(fk))
        throw DomainError("unsupported builtin " + fk);

      // user call: classify argument modes
      std::vector<ArgMode> modes;
      std::vector<Schema> in_schemas;
      std::vector<std::string> in_types;
      std::vector<std::optional<std::pair<long long, long long>>> in_ranges;
      std::vector<std::optional<std::pair<long long, long long>>> list_ranges;
      std::vector<std::string> out_vars;
      for (auto& a : lit.args) {
        std::set<std::string> vs;
        term_vars(a, vs);
        bool bound = true;
        for (auto& v : vs)
          if (!e.sizes.t.count(v)) bound = false;
        if (bound) {
          modes.push_back(ArgMode::Input);
          Schema sc;
          if (a.is_var()) {
            sc = e.sizes.t.at(a.name).first;
          } else {
            std::string sym = term_symbol(a, e.sizes, g_);
            if (sym.empty())
              throw DomainError("cannot type argument " + term_to_string(a));
            sc = term_schema(a, shape_of(sym), e.sizes, g_);
          }
          if (sc.symbol.empty())
            throw DomainError("untyped argument " + term_to_string(a));
          in_types.push_back(sc.symbol);
          // constant numeric range, for the callee's nf sampling
          std::optional<std::pair<long long, long long>> rng;
          std::optional<std::pair<long long, long long>> lrng;
          if (sc.k == Schema::K::Base && sc.lower && sc.upper) {
            ExprP lo = simplify(sc.lower), hi = simplify(sc.upper);
            if (lo->k == Expr::K::Const && hi->k == Expr::K::Const &&
                lo->c.is_finite() && hi->c.is_finite() && lo->c.sign() >= 0 &&
                hi->c >= lo->c && (hi->c - lo->c) <= Rat(16))
              rng = {lo->c.floor().num(), hi->c.ceil().num()};
          } else if (sc.k != Schema::K::Base) {
            // lists: a provably positive length floor (e.g. a call on
            // [Y|Ys]) narrows the callee's nf sampling to nonempty lists
            std::optional<long long> lo;
            bool closed = false;
            if (!a.is_var()) {
              std::string pat = input_pattern_of(a, sc, g_);
              if (pat.rfind("list:ge:", 0) == 0) lo = std::stoll(pat.substr(8));
              if (pat.rfind("list:eq:", 0) == 0) {
                lo = std::stoll(pat.substr(8));
                closed = true;
              }
            } else if (sc.lower) {
              if (auto fl = detail::monotone_floor(simplify(sc.lower)))
                if (fl->sign() > 0) lo = fl->floor().num();
            }
            if (lo && *lo > 0)
              lrng = {*lo, closed ? *lo : std::max<long long>(12, *lo)};
          }
          in_ranges.push_back(rng);
          list_ranges.push_back(lrng);
          in_schemas.push_back(std::move(sc));
        } else if (a.is_var()) {
          modes.push_back(ArgMode::Output);
          out_vars.push_back(a.name);
        } else {
          throw DomainError("partially instantiated argument " +
                            term_to_string(a));
        }
      }

      // flattened input bound expressions, per direction
      std::vector<ExprP> args_lo, args_hi;
      for (auto& sc : in_schemas) {
        std::vector<const Schema*> slots;
        schema_slots_const(sc, slots);
        for (auto* s : slots) {
          args_lo.push_back(s->lower ? s->lower : ex_const(Rat::neg_inf()));
          args_hi.push_back(s->upper ? s->upper : ex_inf());
        }
      }

      CalleeSummary cs;
      std::vector<Schema> out_schemas_for_vars(out_vars.size());

      if (same_scc(st.pat.pred, fk)) {
        CallPattern q;
        q.pred = fk;
        q.modes = modes;
        q.in_types = in_types;
        q.in_ranges = in_ranges;
        q.list_ranges = list_ranges;
        for (auto& v : out_vars) {
          std::string ty;
          if (fk == st.pat.pred && modes == st.pat.modes &&
              in_types == st.pat.in_types) {
            ty = st.pat.out_types[q.out_types.size()];
          } else {
            auto ex = expect.find(v);
            if (ex != expect.end()) ty = ex->second->symbol;
          }
          q.out_types.push_back(ty);
        }
        infer_out_types(q);
        std::string qkey = register_pattern(q);
        if (!states_.count(qkey))
          throw DomainError("call-pattern budget exceeded");
        if (pass == 1) st.same_scc_callees[ci].push_back(qkey);
        const PatternState& qs = states_.at(qkey);
        bool q_nf = pass == 1 || qs.nfdet.not_fails;
        bool q_det = pass != 1 && qs.nfdet.is_det;
        cs.sol_lo = q_nf && q_det
                        ? ex_int(1)
                        : ex_call("@" + qkey + "!sol!L", args_lo);
        cs.sol_hi = q_det ? ex_int(1)
                          : ex_call("@" + qkey + "!sol!U", args_hi);
        for (auto& rd : resources_)
          cs.res[rd.name] = {
              ex_call("@" + qkey + "!res:" + rd.name + "!L", args_lo),
              ex_call("@" + qkey + "!res:" + rd.name + "!U", args_hi)};
        cs.may_fail = !q_nf;
        for (size_t oi = 0; oi < out_vars.size(); ++oi) {
          const std::string& ty = q.out_types[oi];
          if (ty.empty() || (ty != "num" && !g_.count(ty))) {
            st.diags.push_back("untyped output of " + fk +
                               "; no size information propagated");
            continue;
          }
          Schema sh = shape_of(ty);
          std::vector<Schema*> slots;
          schema_slots(sh, slots);
          for (size_t k2 = 0; k2 < slots.size(); ++k2) {
            std::string qt =
                "out:" + std::to_string(oi) + ":" + std::to_string(k2);
            slots[k2]->lower = ex_call("@" + qkey + "!" + qt + "!L", args_lo);
            slots[k2]->upper = ex_call("@" + qkey + "!" + qt + "!U", args_hi);
          }
          out_schemas_for_vars[oi] = std::move(sh);
        }
      } else {
        CallPattern q;
        q.pred = fk;
        q.modes = modes;
        q.in_types = in_types;
        q.in_ranges = in_ranges;
        q.list_ranges = list_ranges;
        for (auto& v : out_vars) {
          auto ex = expect.find(v);
          q.out_types.push_back(ex != expect.end() ? ex->second->symbol
                                                   : std::string());
        }
        infer_out_types(q);
        const PredSummary& S = analyze(q);
        // substitution: callee canonical input vars -> actual bound exprs
        std::map<std::string, ExprP> env;
        {
          std::vector<const Schema*> slots;
          for (auto& sc : S.input_schemas) schema_slots_const(sc, slots);
          if (slots.size() != args_lo.size())
            throw DomainError("argument shape mismatch calling " + fk);
          for (size_t i = 0; i < slots.size(); ++i) {
            env[slots[i]->lower->name] = args_lo[i];
            env[slots[i]->upper->name] = args_hi[i];
          }
        }
        auto inst = [&](const ExprP& x, const ExprP& dflt) {
          return x ? simplify(subst_vars(x, env)) : dflt;
        };
        cs.sol_lo = inst(S.sol_lo, ex_int(0));
        cs.sol_hi = inst(S.sol_hi, ex_inf());
        for (auto& rd : resources_) {
          auto rit = S.res.find(rd.name);
          cs.res[rd.name] = {
              rit != S.res.end() ? inst(rit->second.first, ex_int(0))
                                 : ex_int(0),
              rit != S.res.end() ? inst(rit->second.second, ex_inf())
                                 : ex_inf()};
        }
        cs.may_fail = !S.nfdet.not_fails;
        for (size_t oi = 0; oi < out_vars.size(); ++oi) {
          if (oi < S.out_schemas.size() && !S.out_schemas[oi].symbol.empty())
            out_schemas_for_vars[oi] = schema_subst(S.out_schemas[oi], env);
        }
        if (pass == 1) {
          size_t ci2 = ci;
          st.base_nf[ci2] = st.base_nf[ci2] && S.nfdet.not_fails;
          st.base_det[ci2] = st.base_det[ci2] && S.nfdet.is_det;
        }
      }

      for (size_t oi = 0; oi < out_vars.size(); ++oi)
        if (!out_schemas_for_vars[oi].symbol.empty() ||
            out_schemas_for_vars[oi].lower)
          e.sizes.t.emplace(out_vars[oi], std::make_pair(
                                              out_schemas_for_vars[oi],
                                              VarClass::Output));

      e = extend(e, cs, resources_, fk);
    }

    // head output schemas
    {
      int oi = 0;
      for (size_t i = 0; i < c.head.args.size(); ++i) {
        if (st.pat.modes[i] == ArgMode::Input) continue;
        if (st.out_shapes[oi].symbol.empty()) {
          info.outs.push_back(Schema{});
        } else {
          info.outs.push_back(
              term_schema(c.head.args[i], st.out_shapes[oi], e.sizes, g_));
        }
        ++oi;
      }
    }

    PrimeResult pr = exit_to_prime(e, st.input_vars);
    info.sol_lo = pr.sol_lo;
    info.sol_hi = pr.sol_hi;
    info.res = pr.res;
    for (auto& cst : e.sizes.d)
      (!cst.var.empty() && cst.var[0] == 'a' ? info.guard_lo : info.guard_hi)
          .push_back(cst);
    return info;
  }

  // cross-branch merge of complementary-test clauses: exactly one branch
  // succeeds; the others abort after their accrued cost
  void merge_groups(PatternState& st) {
    std::map<int, std::vector<size_t>> members;
    for (size_t i = 0; i < st.group_of.size() && i < st.infos.size(); ++i)
      if (st.group_of[i] >= 0 && st.infos[i].in_group)
        members[st.group_of[i]].push_back(i);
    std::vector<ClauseInfo> merged_out;
    std::set<size_t> absorbed;
    for (auto& [gid, ms] : members) {
      if (ms.size() < 2) continue;
      ClauseInfo m;
      m.guard_lo = st.infos[ms[0]].guard_lo;
      m.guard_hi = st.infos[ms[0]].guard_hi;
      for (auto& rd : resources_) {
        std::vector<ExprP> his, los;
        for (auto i : ms) {
          ExprP hi = st.infos[i].res.at(rd.name).second;
          ExprP lo = st.infos[i].res.at(rd.name).first;
          for (auto j : ms) {
            if (j == i) continue;
            hi = ex_add(hi, st.infos[j].group_snap.at(rd.name).second);
            lo = ex_add(lo, st.infos[j].group_snap.at(rd.name).first);
          }
          his.push_back(simplify(hi));
          los.push_back(simplify(lo));
        }
        m.res[rd.name] = {simplify(ex_min(los)), simplify(ex_max(his))};
      }
      {
        std::vector<ExprP> shis, slos;
        for (auto i : ms) {
          shis.push_back(st.infos[i].sol_hi);
          slos.push_back(st.infos[i].sol_lo);
        }
        m.sol_hi = simplify(ex_max(shis));
        m.sol_lo = simplify(ex_min(slos));
      }
      // outputs: positionwise min/max over the branches that populate them
      m.outs = st.infos[ms[0]].outs;
      for (size_t k = 1; k < ms.size(); ++k) {
        for (size_t o = 0; o < m.outs.size(); ++o) {
          const Schema& other = st.infos[ms[k]].outs[o];
          if (m.outs[o].symbol.empty() || other.symbol.empty()) continue;
          schema_merge_minmax(m.outs[o], other);
        }
      }
      for (auto i : ms) {
        for (auto& ab : st.infos[i].aborts) m.aborts.push_back(ab);
        absorbed.insert(i);
      }
      merged_out.push_back(std::move(m));
    }
    // head-exclusive groups: min/max across branches, guards intersected
    std::map<int, std::vector<size_t>> hmembers;
    for (size_t i = 0; i < st.hgroup_of.size() && i < st.infos.size(); ++i)
      if (st.hgroup_of[i] >= 0 && !absorbed.count(i))
        hmembers[st.hgroup_of[i]].push_back(i);
    for (auto& [gid, ms] : hmembers) {
      if (ms.size() < 2) continue;
      ClauseInfo m;
      auto intersect = [&](auto get) {
        Guard g = get(st.infos[ms[0]]);
        for (size_t k = 1; k < ms.size(); ++k) {
          const Guard& o = get(st.infos[ms[k]]);
          Guard kept;
          for (auto& a : g)
            for (auto& b : o)
              if (a.var == b.var && a.op == b.op && a.k == b.k) {
                kept.push_back(a);
                break;
              }
          g = std::move(kept);
        }
        return g;
      };
      m.guard_lo = intersect([](const ClauseInfo& c) -> const Guard& {
        return c.guard_lo;
      });
      m.guard_hi = intersect([](const ClauseInfo& c) -> const Guard& {
        return c.guard_hi;
      });
      for (auto& rd : resources_) {
        std::vector<ExprP> his, los;
        for (auto i : ms) {
          his.push_back(st.infos[i].res.at(rd.name).second);
          los.push_back(st.infos[i].res.at(rd.name).first);
        }
        m.res[rd.name] = {simplify(ex_min(los)), simplify(ex_max(his))};
      }
      {
        std::vector<ExprP> shis, slos;
        for (auto i : ms) {
          shis.push_back(st.infos[i].sol_hi);
          slos.push_back(st.infos[i].sol_lo);
        }
        m.sol_hi = simplify(ex_max(shis));
        m.sol_lo = simplify(ex_min(slos));
      }
      m.outs = st.infos[ms[0]].outs;
      for (size_t k = 1; k < ms.size(); ++k)
        for (size_t o = 0; o < m.outs.size(); ++o) {
          const Schema& other = st.infos[ms[k]].outs[o];
          if (m.outs[o].symbol.empty() || other.symbol.empty()) continue;
          schema_merge_minmax(m.outs[o], other);
        }
      for (auto i : ms) {
        for (auto& ab : st.infos[i].aborts) m.aborts.push_back(ab);
        absorbed.insert(i);
      }
      merged_out.push_back(std::move(m));
    }
    if (absorbed.empty()) return;
    std::vector<ClauseInfo> rest;
    for (size_t i = 0; i < st.infos.size(); ++i)
      if (!absorbed.count(i)) rest.push_back(std::move(st.infos[i]));
    for (auto& m : merged_out) rest.push_back(std::move(m));
    st.infos = std::move(rest);
  }

  static void schema_merge_minmax(Schema& into, const Schema& from) {
    // same as schema_merge: min below, max above, null neutral
    schema_merge(into, from);
  }

  // --- piece assembly and solving -----------------------------------------

  std::vector<std::string> quantities(const PatternState& st) const {
    std::vector<std::string> qs;
    for (size_t o = 0; o < st.out_shapes.size(); ++o) {
      if (st.out_shapes[o].symbol.empty()) continue;
      std::vector<const Schema*> slots;
      schema_slots_const(st.out_shapes[o], slots);
      for (size_t k = 0; k < slots.size(); ++k)
        qs.push_back("out:" + std::to_string(o) + ":" + std::to_string(k));
    }
    qs.push_back("sol");
    for (auto& rd : resources_) qs.push_back("res:" + rd.name);
    return qs;
  }

  void build_pieces() {
    for (auto& key : order_) {
      PatternState& st = states_.at(key);
      if (st.broken) continue;
      for (auto& qty : quantities(st)) {
        for (int d = 0; d < 2; ++d) {
          bool upper = d == 1;
          std::string pname = "@" + key + "!" + qty + "!" + (upper ? "U" : "L");
          std::vector<RecEq>& eqs = pieces_[pname];
          for (auto& info : st.infos) {
            ExprP val;
            if (qty == "sol") {
              val = upper ? info.sol_hi : info.sol_lo;
            } else if (qty.rfind("res:", 0) == 0) {
              auto& p = info.res.at(qty.substr(4));
              val = upper ? p.second : p.first;
            } else {
              size_t c1 = qty.find(':'), c2 = qty.find(':', c1 + 1);
              size_t o = std::stoul(qty.substr(c1 + 1, c2 - c1 - 1));
              size_t k = std::stoul(qty.substr(c2 + 1));
              if (o >= info.outs.size() || info.outs[o].symbol.empty())
                continue;  // unknown output type: no information
              std::vector<const Schema*> slots;
              schema_slots_const(info.outs[o], slots);
              if (k >= slots.size()) continue;
              val = upper ? slots[k]->upper : slots[k]->lower;
              if (!val) continue;  // vacuous position in this clause
            }
            eqs.push_back({upper ? info.guard_hi : info.guard_lo, val});
          }
          if (upper && qty.rfind("res:", 0) == 0) {
            std::string rn = qty.substr(4);
            for (auto& info : st.infos)
              for (auto& [gd, vals] : info.aborts) {
                auto vit = vals.find(rn);
                if (vit != vals.end()) eqs.push_back({gd, vit->second});
              }
          }
        }
      }
    }
  }

  // translate a callee-parameter guard through the call arguments; an
  // untranslatable atom is dropped (widening applicability is sound for
  // both the upper sum and the lower min)
  static Guard translate_guard(const Guard& gd,
                               const std::vector<std::string>& params,
                               const std::vector<ExprP>& args) {
    Guard out;
    for (auto& atom : gd) {
      ExprP arg;
      for (size_t i = 0; i < params.size(); ++i)
        if (params[i] == atom.var) arg = args[i];
      if (!arg) continue;
      if (auto c = constrain_expr(simplify(arg), atom.op, atom.k))
        out.push_back(*c);
    }
    return out;
  }

  struct CallSite {
    std::string name;
    std::vector<ExprP> args;
  };

  static bool find_foreign_call(const ExprP& e, const std::string& self,
                                const std::map<std::string, Solved>& solved,
                                CallSite& out) {
    if (e->k == Expr::K::Call && !e->name.empty() && e->name[0] == '@' &&
        e->name != self && !solved.count(e->name)) {
      out.name = e->name;
      out.args = e->args;
      return true;
    }
    for (auto& a : e->args)
      if (find_foreign_call(a, self, solved, out)) return true;
    return false;
  }

  // replace exactly one occurrence of the named call
  static ExprP replace_one(const ExprP& e, const std::string& name,
                           const ExprP& repl, bool& done) {
    if (done) return e;
    if (e->k == Expr::K::Call && e->name == name) {
      done = true;
      return repl;
    }
    if (e->args.empty()) return e;
    auto n = std::make_shared<Expr>(*e);
    for (auto& a : n->args) a = replace_one(a, name, repl, done);
    return n;
  }

  ExprP subst_solved(const ExprP& e) {
    return subst_calls(e, [&](const std::string& name,
                              const std::vector<ExprP>& args)
                               -> std::optional<ExprP> {
      auto it = solved_.find(name);
      if (it == solved_.end()) return std::nullopt;
      std::map<std::string, ExprP> env;
      for (size_t i = 0; i < it->second.params.size() && i < args.size(); ++i)
        env[it->second.params[i]] = args[i];
      return simplify(subst_vars(it->second.expr, env));
    });
  }

  // inline partner pieces until only self-recursion remains
  bool expand_system(const std::string& selfname, const PatternState& st,
                     std::vector<RecEq>& eqs, bool upper) {
    for (int round = 0; round < opts_.max_inline_rounds; ++round) {
      for (auto& eq : eqs) eq.rhs = subst_solved(eq.rhs);
      bool any = false;
      std::vector<RecEq> next;
      for (auto& eq : eqs) {
        CallSite cs;
        if (!find_foreign_call(eq.rhs, selfname, solved_, cs)) {
          next.push_back(eq);
          continue;
        }
        any = true;
        auto pit = pieces_.find(cs.name);
        if (pit == pieces_.end()) return false;
        // partner parameter names from its pattern state
        size_t bang1 = cs.name.find('!');
        std::string pkey = cs.name.substr(1, bang1 - 1);
        auto sit = states_.find(pkey);
        if (sit == states_.end()) return false;
        const std::vector<std::string>& pparams =
            upper ? sit->second.params_hi : sit->second.params_lo;
        for (auto& piece : pit->second) {
          Guard extra = translate_guard(piece.guard, pparams, cs.args);
          std::map<std::string, ExprP> env;
          for (size_t i = 0; i < pparams.size() && i < cs.args.size(); ++i)
            env[pparams[i]] = cs.args[i];
          ExprP repl = subst_vars(piece.rhs, env);
          bool done = false;
          RecEq ne;
          ne.guard = eq.guard;
          for (auto& a : extra) ne.guard.push_back(a);
          ne.rhs = replace_one(eq.rhs, cs.name, repl, done);
          next.push_back(std::move(ne));
          if (next.size() > opts_.max_inline_equations) return false;
        }
      }
      eqs = std::move(next);
      if (!any) return true;
    }
    // still foreign calls after the round budget
    for (auto& eq : eqs) {
      CallSite cs;
      if (find_foreign_call(eq.rhs, selfname, solved_, cs)) return false;
    }
    return true;
  }

  void solve_all() {
    // outputs first (they feed solutions and resources), then solutions,
    // then resources
    auto phase = [&](int which) {
      for (auto& key : order_) {
        PatternState& st = states_.at(key);
        for (auto& qty : quantities(st)) {
          bool is_out = qty.rfind("out:", 0) == 0;
          bool is_sol = qty == "sol";
          int w = is_out ? 0 : is_sol ? 1 : 2;
          if (w == which) solve_quantity(st, qty);
        }
      }
    };
    phase(0);
    phase(1);
    phase(2);
  }

  void solve_quantity(PatternState& st, const std::string& qty) {
    for (int d = 0; d < 2; ++d) {
      bool upper = d == 1;
      std::string pname =
          "@" + st.key + "!" + qty + "!" + (upper ? "U" : "L");
      if (solved_.count(pname)) continue;
      Solved sv;
      sv.params = upper ? st.params_hi : st.params_lo;
      auto pit = pieces_.find(pname);
      if (st.broken || pit == pieces_.end()) {
        if (qty.rfind("out:", 0) == 0 && !st.broken && pit == pieces_.end()) {
          sv.expr = nullptr;  // vacuous everywhere: no bound at this position
        } else {
          sv.expr = trivial_bound(st, qty, upper);
          sv.fallback = true;
          if (st.broken)
            st.diags.push_back("falling back to trivial bounds for " + qty);
        }
        solved_.emplace(pname, std::move(sv));
        continue;
      }
      std::vector<RecEq> eqs = pit->second;
      if (eqs.empty()) {
        sv.expr = nullptr;
        solved_.emplace(pname, std::move(sv));
        continue;
      }
      bool ok = expand_system(pname, st, eqs, upper);
      if (ok) sanitize(eqs, sv.params, upper);
      if (std::getenv("SC_DEBUG_PIECES")) {
        fprintf(stderr, "== %s (expand %s)\n", pname.c_str(), ok ? "ok" : "failed");
        for (auto& eq : eqs)
          fprintf(stderr, "   [%s] %s\n", guard_to_string(eq.guard).c_str(),
                  to_string(eq.rhs).c_str());
      }
      RecurrenceSystem sys;
      sys.unknown = pname;
      sys.params = sv.params;
      sys.equations = eqs;
      if (qty.rfind("out:", 0) == 0)
        sys.merge = RecurrenceSystem::Merge::Extremal;
      if (!ok) {
        sv.expr = trivial_bound(st, qty, upper);
        sv.fallback = true;
        st.diags.push_back("recursive structure of " + qty +
                           " too entangled to inline; using trivial bounds");
      } else {
        SolveResult sr = solve(sys, upper ? Bound::Upper : Bound::Lower);
        sv.expr = sr.expr;
        sv.fallback = sr.fallback;
        for (auto& dmsg : sr.diagnostics) st.diags.push_back(dmsg);
        if (sv.expr && contains_call(sv.expr)) {
          sv.expr = trivial_bound(st, qty, upper);
          sv.fallback = true;
        }
      }
      solved_.emplace(pname, std::move(sv));
    }
  }

  ExprP trivial_bound(const PatternState&, const std::string&, bool upper) {
    return upper ? ex_inf() : ex_int(0);
  }

  void sanitize(std::vector<RecEq>& eqs, const std::vector<std::string>& params,
                bool upper) {
    std::set<std::string> ok(params.begin(), params.end());
    for (auto& eq : eqs) {
      std::set<std::string> vs;
      free_vars(eq.rhs, vs);
      bool stray = false;
      for (auto& v : vs)
        if (!ok.count(v)) stray = true;
      if (stray) eq.rhs = upper ? ex_inf() : ex_int(0);
      Guard kept;
      for (auto& a : eq.guard)
        if (ok.count(a.var)) kept.push_back(a);
      eq.guard = std::move(kept);
    }
  }

  void assemble_summaries() {
    for (auto& key : order_) {
      PatternState& st = states_.at(key);
      PredSummary s;
      s.key = key;
      s.pred = st.pat.pred;
      s.modes = st.pat.modes;
      s.in_types = st.pat.in_types;
      s.out_types = st.pat.out_types;
      s.input_schemas = st.input_schemas;
      s.nfdet = st.nfdet;
      auto look = [&](const std::string& qty, bool upper) -> const Solved* {
        auto it = solved_.find("@" + key + "!" + qty + "!" +
                               (upper ? "U" : "L"));
        return it == solved_.end() ? nullptr : &it->second;
      };
      for (size_t o = 0; o < st.out_shapes.size(); ++o) {
        if (st.out_shapes[o].symbol.empty()) {
          s.out_schemas.push_back(Schema{});
          continue;
        }
        Schema sh = st.out_shapes[o];
        std::vector<Schema*> slots;
        schema_slots(sh, slots);
        for (size_t k = 0; k < slots.size(); ++k) {
          std::string qty =
              "out:" + std::to_string(o) + ":" + std::to_string(k);
          const Solved* lo = look(qty, false);
          const Solved* hi = look(qty, true);
          slots[k]->lower = lo ? lo->expr : nullptr;
          slots[k]->upper = hi ? hi->expr : nullptr;
          if (!slots[k]->lower && slots[k]->upper) slots[k]->lower = ex_int(0);
          if (slots[k]->lower && !slots[k]->upper) slots[k]->upper = ex_inf();
          if ((lo && lo->fallback) || (hi && hi->fallback)) s.fallback = true;
        }
        s.out_schemas.push_back(std::move(sh));
      }
      {
        const Solved* lo = look("sol", false);
        const Solved* hi = look("sol", true);
        s.sol_lo = lo && lo->expr ? lo->expr : ex_int(0);
        s.sol_hi = hi && hi->expr ? hi->expr : ex_inf();
        if ((lo && lo->fallback) || (hi && hi->fallback)) s.fallback = true;
        if (st.nfdet.is_det) s.sol_hi = ex_int(1);
        if (st.nfdet.not_fails)
          s.sol_lo = st.nfdet.is_det ? ex_int(1)
                                     : simplify(ex_max({s.sol_lo, ex_int(1)}));
        else
          s.sol_lo = ex_int(0);
      }
      for (auto& rd : resources_) {
        const Solved* lo = look("res:" + rd.name, false);
        const Solved* hi = look("res:" + rd.name, true);
        s.res[rd.name] = {lo && lo->expr ? lo->expr : ex_int(0),
                          hi && hi->expr ? hi->expr : ex_inf()};
        if ((lo && lo->fallback) || (hi && hi->fallback)) s.fallback = true;
      }
      s.diagnostics = st.diags;
      for (auto& dmsg : st.diags) diagnostics.push_back(st.pat.pred + ": " + dmsg);
      in_progress_.erase(key);
      summaries_[key] = std::move(s);
    }
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------

inline AnalysisResult analyze_program(const Program& prog,
                                      std::vector<ResourceDef> extra_resources = {},
                                      AnalysisOptions opts = {}) {
  std::vector<ResourceDef> resources;
  resources.push_back(steps_resource());
  std::set<std::string> seen{"steps"};
  for (auto& rd : prog.resources)
    if (seen.insert(rd.name).second) resources.push_back(rd);
  for (auto& rd : extra_resources)
    if (seen.insert(rd.name).second) resources.push_back(rd);

  detail::Analyzer az(prog, resources, opts);
  AnalysisResult out;
  for (auto& entry : prog.entries) {
    CallPattern p;
    p.pred = entry.pred;
    for (auto& a : entry.args) {
      p.modes.push_back(a.mode);
      if (a.mode == ArgMode::Input) {
        p.in_types.push_back(a.type_name);
        p.in_ranges.push_back(std::nullopt);
      } else {
        p.out_types.push_back(a.type_name);
      }
    }
    az.analyze(p);
    out.entry_keys.push_back(p.key());
  }
  out.grammar = az.grammar();
  out.summaries = az.summaries();
  out.diagnostics = az.diagnostics;
  return out;
}

inline std::string summary_to_string(const PredSummary& s) {
  std::string out = s.pred + "  [" + s.key + "]\n";
  out += "  inputs:";
  for (auto& sc : s.input_schemas) out += " " + schema_to_string(sc, false);
  out += "\n  outputs:";
  for (auto& sc : s.out_schemas)
    out += " " + (s.out_schemas.empty() || sc.symbol.empty()
                      ? std::string("?")
                      : schema_to_string(sc, false));
  out += "\n  solutions: (" + (s.sol_lo ? to_string(s.sol_lo) : "0") + "," +
         (s.sol_hi ? to_string(s.sol_hi) : "inf") + ")\n";
  for (auto& [name, p] : s.res)
    out += "  " + name + ": (" + to_string(p.first) + "," +
           to_string(p.second) + ")\n";
  out += std::string("  nf: ") + (s.nfdet.not_fails ? "not_fails" : "fails") +
         ", det: " + (s.nfdet.is_det ? "is_det" : "non_det") + "\n";
  if (s.fallback) out += "  (some bounds fell back to trivial values)\n";
  return out;
}

}  // namespace sizedcost
