#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sizedcost/recsolve.hpp"

using namespace sizedcost;

static Guard eq0(const std::string& v) {
  return Guard{{v, GuardAtom::Op::Eq, Rat(0)}};
}
static Guard gt0(const std::string& v) {
  return Guard{{v, GuardAtom::Op::Gt, Rat(0)}};
}
static ExprP self(std::vector<ExprP> args) { return ex_call("f", std::move(args)); }

TEST_CASE("linear: f(0)=1, f(n)=1+f(n-1)") {
  RecurrenceSystem sys{"f", {"n"},
                       {{eq0("n"), ex_int(1)},
                        {gt0("n"), ex_add(ex_int(1),
                                          self({ex_sub(ex_var("n"), ex_int(1))}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  CHECK(to_string(up.expr) == "n+1");
  SolveResult lo = solve(sys, Bound::Lower);
  REQUIRE_FALSE(lo.fallback);
  CHECK(to_string(lo.expr) == "n+1");
  CHECK(verify_closed_form(sys, Bound::Upper, up.expr));
  CHECK(verify_closed_form(sys, Bound::Lower, lo.expr));
}

TEST_CASE("telescoping a linear increment gives a quadratic") {
  // f(0)=0, f(n) = f(n-1) + n  ->  n(n+1)/2
  RecurrenceSystem sys{"f", {"n"},
                       {{eq0("n"), ex_int(0)},
                        {gt0("n"), ex_add(ex_var("n"),
                                          self({ex_sub(ex_var("n"), ex_int(1))}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  std::map<std::string, Rat> env{{"n", Rat(10)}};
  CHECK(evaluate(up.expr, env, RoundDir::Up) == Rat(55));
  CHECK(order_string(up.expr) == "n*n");
}

TEST_CASE("symbolic static parameter rides through telescoping") {
  // f(0)=1, f(n) = f(n-1) + c  ->  cn + 1 (c a static parameter)
  RecurrenceSystem sys{"f", {"n", "c"},
                       {{eq0("n"), ex_int(1)},
                        {gt0("n"),
                         ex_add(ex_var("c"),
                                self({ex_sub(ex_var("n"), ex_int(1)), ex_var("c")}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  CHECK(to_string(up.expr) == "c*n+1");
  CHECK(order_string(up.expr) == "c*n");
}

TEST_CASE("geometric: hanoi-shaped recurrence") {
  // f(1)=1, f(n)=2f(n-1)+1 for n>1  ->  2^n - 1
  RecurrenceSystem sys{
      "f", {"n"},
      {{Guard{{"n", GuardAtom::Op::Eq, Rat(1)}}, ex_int(1)},
       {Guard{{"n", GuardAtom::Op::Gt, Rat(1)}},
        ex_add(ex_int(1),
               ex_mul(ex_int(2), self({ex_sub(ex_var("n"), ex_int(1))})))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  std::map<std::string, Rat> env{{"n", Rat(10)}};
  CHECK(evaluate(up.expr, env, RoundDir::Up) == Rat(1023));
  CHECK(order_string(up.expr) == "2^n");
}

TEST_CASE("second order: fib-shaped recurrence solves with phi") {
  // f(0)=f(1)=1, f(n)=f(n-1)+f(n-2)+1
  RecurrenceSystem sys{
      "f", {"n"},
      {{eq0("n"), ex_int(1)},
       {Guard{{"n", GuardAtom::Op::Eq, Rat(1)}}, ex_int(1)},
       {Guard{{"n", GuardAtom::Op::Gt, Rat(1)}},
        ex_add({self({ex_sub(ex_var("n"), ex_int(1))}),
                self({ex_sub(ex_var("n"), ex_int(2))}), ex_int(1)})}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  CHECK(order_string(up.expr) == "phi^n");
  SolveResult lo = solve(sys, Bound::Lower);
  REQUIRE_FALSE(lo.fallback);
  CHECK(order_string(lo.expr) == "phi^n");
  // sandwich at n = 10: true value is 2*fib(11) - 1 = 177
  std::map<std::string, Rat> env{{"n", Rat(10)}};
  CHECK(evaluate(up.expr, env, RoundDir::Up) >= Rat(177));
  CHECK(evaluate(lo.expr, env, RoundDir::Down) <= Rat(177));
  CHECK(evaluate(lo.expr, env, RoundDir::Down) > Rat(0));
}

TEST_CASE("factorial coefficient: f(n) = n f(n-1)") {
  RecurrenceSystem sys{"f", {"n"},
                       {{eq0("n"), ex_int(1)},
                        {gt0("n"), ex_mul(ex_var("n"),
                                          self({ex_sub(ex_var("n"), ex_int(1))}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  CHECK(to_string(up.expr) == "fact(n)");
  std::map<std::string, Rat> env{{"n", Rat(6)}};
  CHECK(evaluate(up.expr, env, RoundDir::Up) == Rat(720));
}

TEST_CASE("multi-parameter uniform decrement reduces to min") {
  // zip3-shaped: f(0,0,0)=1, f = 1 + f(n1-1,n2-1,n3-1)
  Guard all0;
  for (auto v : {"n1", "n2", "n3"})
    all0.push_back({v, GuardAtom::Op::Eq, Rat(0)});
  Guard allpos;
  for (auto v : {"n1", "n2", "n3"})
    allpos.push_back({v, GuardAtom::Op::Gt, Rat(0)});
  RecurrenceSystem sys{
      "f", {"n1", "n2", "n3"},
      {{all0, ex_int(1)},
       {allpos, ex_add(ex_int(1), self({ex_sub(ex_var("n1"), ex_int(1)),
                                        ex_sub(ex_var("n2"), ex_int(1)),
                                        ex_sub(ex_var("n3"), ex_int(1))}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  CHECK(order_string(up.expr) == "min(n1,n2,n3)");
  SolveResult lo = solve(sys, Bound::Lower);
  REQUIRE_FALSE(lo.fallback);
  CHECK(order_string(lo.expr) == "min(n1,n2,n3)");
  std::map<std::string, Rat> env{{"n1", Rat(2)}, {"n2", Rat(5)}, {"n3", Rat(4)}};
  CHECK(evaluate(up.expr, env, RoundDir::Up) >= Rat(2));   // truth at (2,5,4) is 2
  CHECK(evaluate(lo.expr, env, RoundDir::Down) <= Rat(2));
}

TEST_CASE("constant-argument calls fold to iterated values") {
  // f(0)=2, f(n) = 3 + f(0) for n>0  ->  constant 5 on the recursive piece
  RecurrenceSystem sys{"f", {"n"},
                       {{eq0("n"), ex_int(2)},
                        {gt0("n"), ex_add(ex_int(3), self({ex_int(0)}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  std::map<std::string, Rat> env{{"n", Rat(7)}};
  CHECK(evaluate(up.expr, env, RoundDir::Up) >= Rat(5));
  CHECK(order_string(up.expr) == "1");
}

TEST_CASE("max-branch recurrences solve via the recursive branch") {
  // f(0)=1, f(n) = 1 + max(3, f(n-1))
  RecurrenceSystem sys{
      "f", {"n"},
      {{eq0("n"), ex_int(1)},
       {gt0("n"), ex_add(ex_int(1),
                         ex_max({ex_int(3),
                                 self({ex_sub(ex_var("n"), ex_int(1))})}))}}};
  SolveResult up = solve(sys, Bound::Upper);
  REQUIRE_FALSE(up.fallback);
  CHECK(order_string(up.expr) == "n");
  CHECK(verify_closed_form(sys, Bound::Upper, up.expr));
}

TEST_CASE("out-of-catalog recurrence falls back with a diagnostic") {
  // f(n) = 2 f(n//2) + n: the halving argument is outside the catalog
  RecurrenceSystem sys{
      "f", {"n"},
      {{eq0("n"), ex_int(1)},
       {gt0("n"),
        ex_add(ex_var("n"),
               ex_mul(ex_int(2),
                      self({ex_mul(ex_const(Rat(1, 2)), ex_var("n"))})))}}};
  SolveResult up = solve(sys, Bound::Upper);
  CHECK(up.fallback);
  CHECK(to_string(up.expr) == "inf");
  REQUIRE_FALSE(up.diagnostics.empty());
  CHECK(up.diagnostics[0].find("catalog") != std::string::npos);
  CHECK(verify_closed_form(sys, Bound::Upper, up.expr));  // inf is vacuous
  SolveResult lo = solve(sys, Bound::Lower);
  // the trivial lower bound 0 always verifies
  CHECK(verify_closed_form(sys, Bound::Lower, lo.expr));
}

TEST_CASE("verification gate rejects wrong closed forms") {
  RecurrenceSystem sys{"f", {"n"},
                       {{eq0("n"), ex_int(1)},
                        {gt0("n"), ex_add(ex_int(1),
                                          self({ex_sub(ex_var("n"), ex_int(1))}))}}};
  CHECK_FALSE(verify_closed_form(sys, Bound::Upper, ex_var("n")));  // n < n+1
  CHECK_FALSE(verify_closed_form(sys, Bound::Lower,
                                 ex_add(ex_var("n"), ex_int(2))));
}

TEST_CASE("uncovered lower boundary stays sound") {
  // base only at n=1; at n=0 nothing applies, so the truth is 0 there
  RecurrenceSystem sys{
      "f", {"n"},
      {{Guard{{"n", GuardAtom::Op::Eq, Rat(1)}}, ex_int(1)},
       {Guard{{"n", GuardAtom::Op::Gt, Rat(1)}},
        ex_add(ex_int(1), self({ex_sub(ex_var("n"), ex_int(1))}))}}};
  SolveResult lo = solve(sys, Bound::Lower);
  CHECK(verify_closed_form(sys, Bound::Lower, lo.expr));
  std::map<std::string, Rat> env{{"n", Rat(0)}};
  CHECK(evaluate(lo.expr, env, RoundDir::Down) <= Rat(0));
}
