#pragma once

#include "sizedcost/sizedom.hpp"

namespace sizedcost {

struct NfDet {
  enum class Prov { Trusted, Heuristic, Bottom };
  bool not_fails = false;
  bool is_det = false;
  Prov prov = Prov::Bottom;
};

// Summary of a body literal's callee used by extend: closed-form (or
// placeholder-call) expressions over the caller's bound variables.
struct CalleeSummary {
  ExprP sol_lo, sol_hi;
  std::map<std::string, std::pair<ExprP, ExprP>> res;  // resource -> (lo, hi)
  bool may_fail = false;
};

struct ResAbstractElement {
  std::pair<std::string, std::string> sol_vars;  // current (sL, sU) names
  std::map<std::string, std::pair<std::string, std::string>> res_vars;
  bool failed = false;
  SizedElement sizes;  // t and d live here; r is shared below
  std::vector<Relation> r;
  NfDet nfdet;
  int instance_tag = 0;
  int var_counter = 0;

  // instance tag in the name keeps variables of independently built
  // elements apart when their relation sets are unioned
  std::string fresh(const std::string& stem) {
    return stem + "#" + std::to_string(instance_tag) + "_" +
           std::to_string(var_counter++);
  }
};

// ---------------------------------------------------------------------------
// bottom: everything unknown — zero to infinity solutions, default
// resource bounds, assumed failing.

inline ResAbstractElement bottom(const std::vector<ResourceDef>& resources,
                                 int instance_tag = 0) {
  ResAbstractElement e;
  e.instance_tag = instance_tag;
  e.failed = true;
  e.sol_vars = {e.fresh("sL"), e.fresh("sU")};
  e.r.push_back({e.sol_vars.first, e.sol_vars.second, ex_int(0), ex_inf()});
  for (auto& rd : resources) {
    auto lo = e.fresh("rL_" + rd.name);
    auto hi = e.fresh("rU_" + rd.name);
    e.res_vars[rd.name] = {lo, hi};
    e.r.push_back({lo, hi, ex_const(rd.default_lower), ex_const(rd.default_upper)});
  }
  return e;
}

// ---------------------------------------------------------------------------
// leq: relation-set inclusion modulo a bound-variable renaming, found by
// backtracking over candidate matches (the decidable surrogate).

namespace detail {

inline std::string rel_key(const Relation& rel,
                           const std::map<std::string, std::string>& ren) {
  auto rn = [&](const std::string& v) {
    auto it = ren.find(v);
    return it == ren.end() ? v : it->second;
  };
  std::map<std::string, ExprP> env;
  for (auto& [from, to] : ren) env[from] = ex_var(to);
  std::string s = rn(rel.lo_var) + "|" + rn(rel.hi_var) + "|";
  s += rel.lo ? expr_key(simplify(subst_vars(rel.lo, env))) : std::string("_");
  s += "|";
  s += rel.hi ? expr_key(simplify(subst_vars(rel.hi, env))) : std::string("_");
  return s;
}

inline void relation_vars(const std::vector<Relation>& rs,
                          std::set<std::string>& out) {
  for (auto& rel : rs) {
    out.insert(rel.lo_var);
    out.insert(rel.hi_var);
    if (rel.lo) free_vars(rel.lo, out);
    if (rel.hi) free_vars(rel.hi, out);
  }
}

inline std::string var_stem(const std::string& v) {
  auto hash = v.find('#');
  return hash == std::string::npos ? v : v.substr(0, hash);
}

// Tries to map the flexible variables (injectively, within their stem
// class) so that every residual relation of a appears in b.
inline bool leq_with_renaming(const std::vector<Relation>& residual,
                              const std::vector<Relation>& b,
                              const std::set<std::string>& flexible,
                              const std::set<std::string>& bkeys) {
  std::vector<std::string> flex(flexible.begin(), flexible.end());
  if (flex.size() > 8) return false;  // matcher is meant for small elements
  // candidate targets: b's defined-position variables of the same stem
  std::map<std::string, std::vector<std::string>> cands;
  for (auto& v : flex) {
    std::set<std::string> seen;
    for (auto& rel : b)
      for (auto& t : {rel.lo_var, rel.hi_var})
        if (var_stem(t) == var_stem(v) && seen.insert(t).second)
          cands[v].push_back(t);
    cands[v].push_back(v);  // identity stays allowed
  }
  std::map<std::string, std::string> ren;
  std::function<bool(size_t)> go = [&](size_t i) -> bool {
    if (i == flex.size()) {
      for (auto& rel : residual)
        if (!bkeys.count(rel_key(rel, ren))) return false;
      return true;
    }
    for (auto& t : cands[flex[i]]) {
      bool used = false;
      for (auto& [k, v] : ren)
        if (v == t) used = true;
      if (used) continue;
      ren[flex[i]] = t;
      if (go(i + 1)) return true;
      ren.erase(flex[i]);
    }
    return false;
  };
  return go(0);
}

}  // namespace detail

inline bool leq(const ResAbstractElement& a, const ResAbstractElement& b) {
  // failed ordering: false <= true (failure admits more behaviors)
  if (a.failed && !b.failed) return false;
  // identity renaming first; only relations that fail under it may need
  // their own bound variables renamed, which keeps the search small
  std::set<std::string> bkeys;
  for (auto& rel : b.r) bkeys.insert(detail::rel_key(rel, {}));
  std::vector<Relation> residual;
  for (auto& rel : a.r)
    if (!bkeys.count(detail::rel_key(rel, {}))) residual.push_back(rel);
  if (residual.empty()) return true;
  // rename only the defined positions of the residual relations: right-hand
  // sides reference older variables, which already match under identity
  std::set<std::string> flex;
  for (auto& rel : residual)
    for (auto& v : {rel.lo_var, rel.hi_var})
      if (v.rfind("sL", 0) == 0 || v.rfind("sU", 0) == 0 ||
          v.rfind("rL", 0) == 0 || v.rfind("rU", 0) == 0)
        flex.insert(v);
  return detail::leq_with_renaming(residual, b.r, flex, bkeys);
}

// ---------------------------------------------------------------------------
// join: syntactic union of relations after renaming b's current bound
// variables onto a's; failed and nf/det joined in their lattices.

inline ResAbstractElement join(const ResAbstractElement& a,
                               const ResAbstractElement& b) {
  ResAbstractElement out = a;
  std::map<std::string, ExprP> ren;
  ren[b.sol_vars.first] = ex_var(a.sol_vars.first);
  ren[b.sol_vars.second] = ex_var(a.sol_vars.second);
  for (auto& [name, p] : b.res_vars) {
    auto it = a.res_vars.find(name);
    if (it != a.res_vars.end()) {
      ren[p.first] = ex_var(it->second.first);
      ren[p.second] = ex_var(it->second.second);
    }
  }
  auto rn = [&](const std::string& v) {
    auto it = ren.find(v);
    if (it == ren.end()) return v;
    return it->second->name;
  };
  std::set<std::string> have;
  for (auto& rel : out.r) have.insert(detail::rel_key(rel, {}));
  for (auto& rel : b.r) {
    Relation nr = rel;
    nr.lo_var = rn(nr.lo_var);
    nr.hi_var = rn(nr.hi_var);
    if (nr.lo) nr.lo = subst_vars(nr.lo, ren);
    if (nr.hi) nr.hi = subst_vars(nr.hi, ren);
    if (have.insert(detail::rel_key(nr, {})).second) out.r.push_back(nr);
  }
  out.failed = a.failed || b.failed;
  out.nfdet.not_fails = a.nfdet.not_fails && b.nfdet.not_fails;
  out.nfdet.is_det = a.nfdet.is_det && b.nfdet.is_det;
  for (auto& c : b.sizes.d) out.sizes.d.push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// call_to_entry: clause-entry element — one solution, head cost charged.

inline ResAbstractElement call_to_entry(const Clause& c, const EntryAssertion& entry,
                                        const Grammar& g,
                                        const std::vector<Schema>& input_schemas,
                                        const std::vector<ResourceDef>& resources,
                                        int instance_tag) {
  ResAbstractElement e;
  e.instance_tag = instance_tag;
  e.failed = false;
  e.sizes = init_clause_element(c, entry, g, input_schemas);
  e.sol_vars = {e.fresh("sL"), e.fresh("sU")};
  e.r.push_back({e.sol_vars.first, e.sol_vars.second, ex_int(1), ex_int(1)});
  std::string pred = c.head.functor_key();
  for (auto& rd : resources) {
    Rat beta = rd.head_cost(pred);
    auto lo = e.fresh("rL_" + rd.name);
    auto hi = e.fresh("rU_" + rd.name);
    e.res_vars[rd.name] = {lo, hi};
    e.r.push_back({lo, hi, ex_const(beta), ex_const(beta)});
  }
  return e;
}

// ---------------------------------------------------------------------------
// extend: account for one body literal via its callee summary.

inline ResAbstractElement extend(const ResAbstractElement& e,
                                 const CalleeSummary& cs,
                                 const std::vector<ResourceDef>& resources,
                                 const std::string& literal_pred) {
  ResAbstractElement out = e;
  ExprP sLp = ex_var(e.sol_vars.first);
  ExprP sUp = ex_var(e.sol_vars.second);

  // resources first: they use the pre-literal solution counts
  for (auto& rd : resources) {
    auto& [lov, hiv] = out.res_vars.at(rd.name);
    Rat delta = rd.literal_cost(literal_pred);
    auto res_it = cs.res.find(rd.name);
    ExprP r_lo_cal = res_it != cs.res.end() ? res_it->second.first : ex_int(0);
    ExprP r_hi_cal = res_it != cs.res.end() ? res_it->second.second : ex_int(0);
    std::string nlo = out.fresh("rL_" + rd.name);
    std::string nhi = out.fresh("rU_" + rd.name);
    ExprP hi = ex_add(ex_var(hiv),
                      ex_mul(sUp, ex_add(ex_const(delta), r_hi_cal)));
    // the literal's own lower contribution is charged even when it may
    // fail; freezing starts at the next literal
    ExprP lo = e.failed
                   ? ex_var(lov)
                   : ex_add(ex_var(lov),
                            ex_mul(sLp, ex_add(ex_const(delta), r_lo_cal)));
    out.r.push_back({nlo, nhi, simplify(lo), simplify(hi)});
    out.res_vars[rd.name] = {nlo, nhi};
  }

  // solutions
  std::string nsl = out.fresh("sL");
  std::string nsu = out.fresh("sU");
  ExprP s_hi = ex_mul(sUp, cs.sol_hi ? cs.sol_hi : ex_int(1));
  ExprP s_lo = e.failed ? ex_int(0)
                        : ex_mul(sLp, cs.sol_lo ? cs.sol_lo : ex_int(1));
  out.r.push_back({nsl, nsu, simplify(s_lo), simplify(s_hi)});
  out.sol_vars = {nsl, nsu};

  if (cs.may_fail) out.failed = true;
  return out;
}

// ---------------------------------------------------------------------------
// exit_to_prime: express the final solution/resource variables over the
// head-input bound variables (plus recursive placeholders).

struct PrimeResult {
  ExprP sol_lo, sol_hi;
  std::map<std::string, std::pair<ExprP, ExprP>> res;
  bool failed = false;
};

inline PrimeResult exit_to_prime(const ResAbstractElement& e,
                                 const std::set<std::string>& input_vars) {
  std::map<std::string, ExprP> defs;
  for (auto& rel : e.r) {
    if (rel.lo && !input_vars.count(rel.lo_var)) defs[rel.lo_var] = rel.lo;
    if (rel.hi && !input_vars.count(rel.hi_var)) defs[rel.hi_var] = rel.hi;
  }
  auto resolve = [&](ExprP x) {
    for (int i = 0; i < 128; ++i) {
      std::set<std::string> vs;
      free_vars(x, vs);
      bool any = false;
      for (auto& v : vs)
        if (defs.count(v)) any = true;
      if (!any) return simplify(x);
      x = subst_vars(x, defs);
    }
    throw DomainError("cyclic dependency while normalizing clause relations");
  };
  PrimeResult pr;
  pr.failed = e.failed;
  pr.sol_lo = resolve(ex_var(e.sol_vars.first));
  pr.sol_hi = resolve(ex_var(e.sol_vars.second));
  for (auto& [name, p] : e.res_vars)
    pr.res[name] = {resolve(ex_var(p.first)), resolve(ex_var(p.second))};
  if (pr.failed) pr.sol_lo = ex_int(0);
  return pr;
}

// The clause's contribution to the predicate-level solution system.
inline Relation cardinality_clause(const ResAbstractElement& e,
                                   const std::set<std::string>& input_vars) {
  PrimeResult pr = exit_to_prime(e, input_vars);
  return Relation{e.sol_vars.first, e.sol_vars.second, pr.sol_lo, pr.sol_hi};
}

// ---------------------------------------------------------------------------
// nf / det inference.

struct ClauseShape {
  // per input argument: "var", "num:<c>", "list:eq:<k>" (closed list of
  // length k), or "list:ge:<k>" (open list with k leading elements)
  std::vector<std::string> input_pats;
  // numeric guard constraints per input arg index (value-level)
  std::map<int, std::vector<std::pair<GuardAtom::Op, Rat>>> num_guards;
  // canonicalized first body test, e.g. "=<|E|P" — used for the
  // complementary-group upgrade; empty when none
  std::string first_test;
  bool has_unpaired_test = false;  // test not usable as a guard
  bool body_all_nf = true;
  bool body_all_det = true;
};

namespace detail {

inline bool num_guards_hold(const ClauseShape& c, int arg, long long v) {
  auto it = c.num_guards.find(arg);
  if (it == c.num_guards.end()) return true;
  for (auto& [op, k] : it->second) {
    Rat r(v);
    switch (op) {
      case GuardAtom::Op::Eq: if (!(r == k)) return false; break;
      case GuardAtom::Op::Ge: if (!(r >= k)) return false; break;
      case GuardAtom::Op::Gt: if (!(r > k)) return false; break;
      case GuardAtom::Op::Le: if (!(r <= k)) return false; break;
      case GuardAtom::Op::Lt: if (!(r < k)) return false; break;
    }
  }
  return true;
}

// does the clause match an input assignment? list args get a length,
// num args a value
inline bool clause_matches(const ClauseShape& c,
                           const std::vector<long long>& vals) {
  for (size_t i = 0; i < c.input_pats.size(); ++i) {
    const std::string& p = c.input_pats[i];
    long long v = vals[i];
    if (p == "var") {
      if (!num_guards_hold(c, (int)i, v)) return false;
    } else if (p.rfind("list:eq:", 0) == 0) {
      if (v != std::stoll(p.substr(8))) return false;
    } else if (p.rfind("list:ge:", 0) == 0) {
      if (v < std::stoll(p.substr(8))) return false;
    } else if (p.rfind("num:", 0) == 0) {
      if (v != std::stoll(p.substr(4))) return false;
    }
  }
  return true;
}

inline std::pair<std::string, std::string> split_test(const std::string& s) {
  auto bar = s.find('|');
  return {s.substr(0, bar), s.substr(bar + 1)};
}

// op sets whose disjunction covers all value orderings; members are
// pairwise exclusive
inline bool ops_cover(const std::set<std::string>& ops) {
  auto has = [&](const char* o) { return ops.count(o) > 0; };
  if (has("=<") && has(">")) return true;
  if (has("<") && has(">=")) return true;
  if (has("=:=") && has("=\\=")) return true;
  if (has("<") && has(">") && has("=:=")) return true;
  return false;
}

}  // namespace detail

inline NfDet infer_nf_det(
    const std::string& pred, const Program& prog,
    const std::vector<ClauseShape>& shapes,
    const std::vector<std::pair<long long, long long>>& arg_ranges = {}) {
  NfDet nd;
  auto tnf = prog.trust_nf.find(pred);
  auto tdet = prog.trust_det.find(pred);
  if (tnf != prog.trust_nf.end() || tdet != prog.trust_det.end()) {
    nd.prov = NfDet::Prov::Trusted;
    nd.not_fails = tnf != prog.trust_nf.end() && tnf->second;
    nd.is_det = tdet != prog.trust_det.end() && tdet->second;
    if (tnf == prog.trust_nf.end() || tdet == prog.trust_det.end()) {
      Program p2;  // heuristic for the half not trusted
      NfDet inferred = infer_nf_det(pred, p2, shapes, arg_ranges);
      if (tnf == prog.trust_nf.end()) nd.not_fails = inferred.not_fails;
      if (tdet == prog.trust_det.end()) nd.is_det = inferred.is_det;
    }
    return nd;
  }
  nd.prov = NfDet::Prov::Heuristic;
  if (shapes.empty()) return nd;  // unknown external: fails, non_det

  size_t nargs = shapes[0].input_pats.size();

  // group clauses by (input patterns, test operands); a group whose test
  // operators jointly cover all orderings counts as guard-complete, and
  // its members as pairwise exclusive
  std::vector<bool> test_ok(shapes.size(), false);
  std::vector<int> group_of(shapes.size(), -1);
  {
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < shapes.size(); ++i) {
      if (shapes[i].first_test.empty()) {
        test_ok[i] = !shapes[i].has_unpaired_test;
        continue;
      }
      if (shapes[i].has_unpaired_test) continue;
      auto [op, operands] = detail::split_test(shapes[i].first_test);
      std::string key;
      for (auto& p : shapes[i].input_pats) key += p + ";";
      key += "|" + operands;
      groups[key].push_back(i);
    }
    int gid = 0;
    for (auto& [key, members] : groups) {
      std::set<std::string> ops;
      for (auto m : members)
        ops.insert(detail::split_test(shapes[m].first_test).first);
      if (detail::ops_cover(ops)) {
        for (auto m : members) {
          test_ok[m] = true;
          group_of[m] = gid;
        }
      }
      ++gid;
    }
  }

  // per-argument sample values, narrowed by the caller-provided ranges
  auto samples_for = [&](size_t i) {
    long long lo = 0, hi = 12;
    if (i < arg_ranges.size()) {
      lo = arg_ranges[i].first;
      hi = arg_ranges[i].second;
    }
    std::vector<long long> s;
    for (long long v : {lo, lo + 1, lo + 2, lo + 3, lo + 5, hi, hi - 1})
      if (v >= lo && v <= hi &&
          (s.empty() || std::find(s.begin(), s.end(), v) == s.end()))
        s.push_back(v);
    return s;
  };
  std::vector<std::vector<long long>> sample(nargs);
  for (size_t i = 0; i < nargs; ++i) sample[i] = samples_for(i);

  // coverage: every sampled input assignment matched by some clause whose
  // tests are guard-complete
  bool covered = true;
  std::vector<long long> vals(nargs, 0);
  std::function<void(size_t)> walk = [&](size_t i) {
    if (!covered) return;
    if (i == nargs) {
      bool hit = false;
      for (size_t c = 0; c < shapes.size(); ++c) {
        if (!test_ok[c]) continue;
        if (detail::clause_matches(shapes[c], vals)) {
          hit = true;
          break;
        }
      }
      if (!hit) covered = false;
      return;
    }
    for (auto v : sample[i]) {
      vals[i] = v;
      walk(i + 1);
    }
  };
  walk(0);

  bool bodies_nf = true, bodies_det = true;
  for (auto& s : shapes) {
    bodies_nf = bodies_nf && s.body_all_nf;
    bodies_det = bodies_det && s.body_all_det;
  }
  nd.not_fails = covered && bodies_nf;

  // determinacy: pairwise exclusive clauses
  bool exclusive = true;
  for (size_t i = 0; i < shapes.size() && exclusive; ++i) {
    for (size_t j = i + 1; j < shapes.size() && exclusive; ++j) {
      if (group_of[i] >= 0 && group_of[i] == group_of[j])
        continue;  // exclusive by covering tests
      // exclusive if no sampled assignment matches both
      bool overlap = false;
      std::vector<long long> v2(nargs, 0);
      std::function<void(size_t)> w2 = [&](size_t a) {
        if (overlap) return;
        if (a == nargs) {
          if (detail::clause_matches(shapes[i], v2) &&
              detail::clause_matches(shapes[j], v2))
            overlap = true;
          return;
        }
        for (auto v : sample[a]) {
          v2[a] = v;
          w2(a + 1);
        }
      };
      w2(0);
      if (overlap) exclusive = false;
    }
  }
  nd.is_det = exclusive && bodies_det;
  return nd;
}

}  // namespace sizedcost
