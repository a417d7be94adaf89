// End-to-end acceptance harness: one pass/fail line per criterion.
// Exit status is zero iff every criterion passes.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "sizedcost/check.hpp"
#include "sizedcost/parser.hpp"
#include "sizedcost/recsolve.hpp"

using namespace sizedcost;

#ifndef BENCH_DIR
#define BENCH_DIR "benchmarks"
#endif

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Program load_bench(const std::string& name) {
  std::ifstream in(std::string(BENCH_DIR) + "/" + name + ".pl");
  if (!in.good()) throw std::runtime_error("cannot open benchmark " + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

struct Expect {
  const char* bench;
  const char* lo;
  const char* hi;
};

const Expect kOrders[] = {
    {"append", "a1", "b1"},
    {"appendAll2", "a1*a2*a3", "b1*b2*b3"},
    {"coupled", "a1", "b1"},
    {"dyade", "a1*a3", "b1*b3"},
    {"erathos", "a1", "b1*b1"},
    {"fib", "phi^a1", "phi^b1"},
    {"hanoi", "1", "2^b1"},
    {"isort", "a1*a1", "b1*b1"},
    {"isortlist", "a1*a1", "b1*b1*b2"},
    {"listfact", "a1*a2", "b1*b2"},
    {"listnum", "a1", "b1"},
    {"minsort", "a1*a1", "b1*b1"},
    {"nub", "a1", "b1*b1*b2"},
    {"partition", "a1", "b1"},
    {"zip3", "min(a1,a3,a5)", "min(b1,b3,b5)"},
};

const PredSummary& entry_summary(const AnalysisResult& r) {
  return r.summaries.at(r.entry_keys.at(0));
}

std::pair<std::string, std::string> steps_orders(const PredSummary& s) {
  auto& p = s.res.at("steps");
  return {order_string(complexity_order(p.first)),
          order_string(complexity_order(p.second))};
}

// Criterion 1: inferred step-count complexity orders match the published
// table on all fifteen benchmarks, within the time budget.
bool criterion1(std::string& detail) {
  auto t0 = std::chrono::steady_clock::now();
  int bad = 0;
  for (auto& e : kOrders) {
    auto res = analyze_program(load_bench(e.bench));
    auto [lo, hi] = steps_orders(entry_summary(res));
    if (lo != e.lo || hi != e.hi) {
      ++bad;
      detail += std::string(" [") + e.bench + ": got (" + lo + "," + hi +
                ") want (" + e.lo + "," + e.hi + ")]";
    }
  }
  double dt = seconds_since(t0);
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%.2fs)", dt);
  detail += buf;
  return bad == 0 && dt < 5.0;
}

// Criterion 2: append gets exact unit solution bounds, the exact step
// upper bound, and the exact output size schema.
bool criterion2(std::string& detail) {
  auto res = analyze_program(load_bench("append"));
  auto& s = entry_summary(res);
  bool ok = true;
  auto expect = [&](bool c, const std::string& msg) {
    if (!c) {
      ok = false;
      detail += " [" + msg + "]";
    }
  };
  expect(to_string(s.sol_lo) == "1" && to_string(s.sol_hi) == "1",
         "solutions != (1,1)");
  expect(to_string(s.res.at("steps").second) == "b1+1", "steps upper != b1+1");
  expect(s.out_schemas.size() == 1 &&
             schema_to_string(s.out_schemas[0], false) ==
                 "ln^(a1+a3,b1+b3)(n^(min(a2,a4),max(b2,b4)))",
         "output schema mismatch");
  return ok;
}

// Criterion 3: listfact step orders, unit solutions, non-failure and
// determinism.
bool criterion3(std::string& detail) {
  auto res = analyze_program(load_bench("listfact"));
  auto& s = entry_summary(res);
  auto [lo, hi] = steps_orders(s);
  bool ok = lo == "a1*a2" && hi == "b1*b2" && to_string(s.sol_lo) == "1" &&
            to_string(s.sol_hi) == "1" && s.nfdet.not_fails && s.nfdet.is_det;
  if (!ok)
    detail += " [got (" + lo + "," + hi + "), sol (" + to_string(s.sol_lo) +
              "," + to_string(s.sol_hi) + "), " +
              (s.nfdet.not_fails ? "not_fails" : "fails") + "/" +
              (s.nfdet.is_det ? "is_det" : "non_det") + "]";
  return ok;
}

// Criterion 4: every completed concrete trace of at least 50 random ground
// goals per benchmark sits between the inferred bounds, within the time
// budget.  Purely numeric inputs go up to 12, structured ones up to 8.
bool criterion4(std::string& detail) {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (auto& e : kOrders) {
    std::string name = e.bench;
    Program prog = load_bench(name);
    AnalysisResult res = analyze_program(prog);
    for (size_t i = 0; i < prog.entries.size(); ++i) {
      SweepOptions opt;
      opt.goals = 50;
      opt.max_size = (name == "fib" || name == "hanoi") ? 12 : 8;
      opt.seed = 20260826 + (unsigned)i;
      SweepStats st = sweep_entry(prog, res, i, opt);
      if (!st.failures.empty()) {
        ok = false;
        detail += " [" + name + ": " +
                  std::to_string(st.failures.size()) + " violation(s), e.g. " +
                  st.failures[0] + "]";
      }
    }
  }
  double dt = seconds_since(t0);
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%.2fs)", dt);
  detail += buf;
  return ok && dt < 60.0;
}

// Criterion 5: closed forms pass the grid verification gate, wrong forms
// are rejected, and an out-of-catalog recurrence falls back to (0, inf)
// with a diagnostic.
bool criterion5(std::string& detail) {
  auto eq0 = [](const std::string& v) {
    return Guard{{v, GuardAtom::Op::Eq, Rat(0)}};
  };
  auto gt0 = [](const std::string& v) {
    return Guard{{v, GuardAtom::Op::Gt, Rat(0)}};
  };
  bool ok = true;
  auto expect = [&](bool c, const std::string& msg) {
    if (!c) {
      ok = false;
      detail += " [" + msg + "]";
    }
  };

  // in catalog: f(0)=1, f(n)=1+f(n-1)  ->  n+1, and the gate accepts it
  RecurrenceSystem lin{
      "f", {"n"},
      {{eq0("n"), ex_int(1)},
       {gt0("n"), ex_add(ex_int(1), ex_call("f", {ex_sub(ex_var("n"),
                                                         ex_int(1))}))}}};
  SolveResult up = solve(lin, Bound::Upper);
  SolveResult lo = solve(lin, Bound::Lower);
  expect(!up.fallback && to_string(up.expr) == "n+1", "linear upper not n+1");
  expect(!lo.fallback && to_string(lo.expr) == "n+1", "linear lower not n+1");
  expect(verify_closed_form(lin, Bound::Upper, up.expr),
         "gate rejects the true upper form");
  expect(!verify_closed_form(lin, Bound::Upper, ex_var("n")),
         "gate accepts an undershooting upper form");
  expect(!verify_closed_form(lin, Bound::Lower, ex_add(ex_var("n"), ex_int(2))),
         "gate accepts an overshooting lower form");

  // out of catalog: halving argument  ->  trivial bounds plus a diagnostic
  RecurrenceSystem half{
      "f", {"n"},
      {{eq0("n"), ex_int(1)},
       {gt0("n"),
        ex_add(ex_var("n"),
               ex_mul(ex_int(2), ex_call("f", {ex_mul(ex_const(Rat(1, 2)),
                                               ex_var("n"))})))}}};
  SolveResult hup = solve(half, Bound::Upper);
  SolveResult hlo = solve(half, Bound::Lower);
  expect(hup.fallback && to_string(hup.expr) == "inf",
         "out-of-catalog upper is not inf");
  expect(hlo.fallback && to_string(hlo.expr) == "0",
         "out-of-catalog lower is not 0");
  expect(!hup.diagnostics.empty(), "no diagnostic on fallback");
  return ok;
}

// ---- criterion 6 helpers: random small domain elements over n, m ----

ExprP rand_expr(std::mt19937& rng) {
  switch (rng() % 6) {
    case 0: return ex_int(0);
    case 1: return ex_int(1);
    case 2: return ex_int(2);
    case 3: return ex_var("n");
    case 4: return ex_add(ex_var("n"), ex_int(1));
    default: return ex_var("m");
  }
}

CalleeSummary rand_summary(std::mt19937& rng) {
  CalleeSummary cs;
  cs.sol_lo = rng() % 2 ? ex_int(1) : ex_int(0);
  cs.sol_hi = rand_expr(rng);
  cs.res["steps"] = {rand_expr(rng), rand_expr(rng)};
  cs.may_fail = rng() % 3 == 0;
  return cs;
}

ResAbstractElement rand_elem(std::mt19937& rng, int tag,
                             const std::vector<ResourceDef>& rs) {
  ResAbstractElement e;
  e.instance_tag = tag;
  e.failed = false;
  e.sol_vars = {e.fresh("sL"), e.fresh("sU")};
  e.r.push_back({e.sol_vars.first, e.sol_vars.second, ex_int(1), ex_int(1)});
  auto lo = e.fresh("rL_steps");
  auto hi = e.fresh("rU_steps");
  e.res_vars["steps"] = {lo, hi};
  e.r.push_back({lo, hi, ex_int(1), ex_int(1)});
  int k = rng() % 4;
  for (int i = 0; i < k; ++i) e = extend(e, rand_summary(rng), rs, "p/1");
  return e;
}

// Criterion 6: abstract-domain laws hold on random small elements.
bool criterion6(std::string& detail) {
  std::vector<ResourceDef> rs{steps_resource()};
  std::mt19937 rng(20260826);
  bool ok = true;
  auto expect = [&](bool c, const std::string& msg) {
    if (!c && ok) {
      ok = false;
      detail += " [" + msg + "]";
    }
  };
  for (int iter = 0; iter < 150; ++iter) {
    ResAbstractElement a = rand_elem(rng, 1, rs);
    ResAbstractElement b = rand_elem(rng, 2, rs);
    expect(leq(a, a) && leq(b, b), "leq not reflexive");
    ResAbstractElement ab = join(a, b);
    expect(leq(a, ab) && leq(b, ab), "join not an upper bound");
    ResAbstractElement aa = join(a, a);
    expect(leq(aa, a) && leq(a, aa), "join not idempotent");
    ResAbstractElement ba = join(b, a);
    expect(leq(ab, ba) && leq(ba, ab), "join not commutative up to renaming");
    expect(ab.failed == (a.failed || b.failed), "failed flag not monotone");
    if (a.failed)
      expect(extend(a, rand_summary(rng), rs, "q/1").failed,
             "extend drops the failed flag");
    // extend with a neutral callee changes nothing observable
    CalleeSummary neutral;
    neutral.sol_lo = neutral.sol_hi = ex_int(1);
    neutral.res["steps"] = {ex_int(0), ex_int(0)};
    neutral.may_fail = false;
    ResAbstractElement an = extend(a, neutral, rs, "q/1");
    std::set<std::string> inputs{"n", "m"};
    PrimeResult p1 = exit_to_prime(a, inputs);
    PrimeResult p2 = exit_to_prime(an, inputs);
    expect(to_string(p1.sol_lo) == to_string(p2.sol_lo) &&
               to_string(p1.sol_hi) == to_string(p2.sol_hi) &&
               to_string(p1.res.at("steps").first) ==
                   to_string(p2.res.at("steps").first) &&
               to_string(p1.res.at("steps").second) ==
                   to_string(p2.res.at("steps").second) &&
               p1.failed == p2.failed,
           "extend identity violated");
  }
  // normalize_relations is idempotent on a chain of definitions
  SizedElement e;
  e.r.push_back({"x_lo", "x_hi", ex_var("y_lo"),
                 ex_add(ex_var("y_hi"), ex_int(1))});
  e.r.push_back({"y_lo", "y_hi", ex_var("z"), ex_add(ex_var("z"), ex_int(1))});
  SizedElement n1 = normalize_relations(e, {"x_lo", "x_hi"});
  SizedElement n2 = normalize_relations(n1, {"x_lo", "x_hi"});
  expect(n1.r.size() == 1 && n2.r.size() == 1 &&
             to_string(n1.r[0].lo) == to_string(n2.r[0].lo) &&
             to_string(n1.r[0].hi) == to_string(n2.r[0].hi),
         "normalize_relations not idempotent");
  return ok;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    bool (*fn)(std::string&);
  };
  const Entry entries[] = {
      {"1 benchmark step-count orders match the reference table", criterion1},
      {"2 append: exact solutions, step upper bound, output schema", criterion2},
      {"3 listfact: orders, unit solutions, not_fails, is_det", criterion3},
      {"4 oracle sandwich on random ground goals", criterion4},
      {"5 solver verification gate and out-of-catalog fallback", criterion5},
      {"6 abstract-domain laws on random elements", criterion6},
  };
  int failures = 0;
  for (auto& e : entries) {
    std::string detail;
    bool ok = false;
    try {
      ok = e.fn(detail);
    } catch (const std::exception& ex) {
      detail += std::string(" [exception: ") + ex.what() + "]";
    }
    if (!ok) ++failures;
    std::printf("criterion %s: %s%s\n", e.name, ok ? "PASS" : "FAIL",
                detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
