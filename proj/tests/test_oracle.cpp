#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "sizedcost/oracle.hpp"
#include "sizedcost/parser.hpp"

using namespace sizedcost;

static const char* kAppend =
    "append([],Y,Y).\n"
    "append([X|Xs],Y,[X|Zs]) :- append(Xs,Y,Zs).\n";

static const char* kFact =
    "fact(0,1).\n"
    "fact(N,M) :- N>0, N1 is N-1, fact(N1,M1), M is N*M1.\n";

static Term num_list(const std::vector<long long>& xs) {
  std::vector<Term> ts;
  for (auto x : xs) ts.push_back(mk_num(x));
  return mk_list(ts);
}

TEST_CASE("append counts one step per head unification") {
  Program p = parse_program(kAppend);
  Term goal =
      mk_comp("append", {num_list({1, 2, 3}), num_list({4}), mk_var("Z")});
  ExecTrace tr = run_goal(p, goal);
  CHECK(tr.steps == 4);
  CHECK(tr.solutions == 1);
  REQUIRE(tr.solution_goals.size() == 1);
  const Term& z = tr.solution_goals[0].args[2];
  CHECK(term_to_string(z) == "[1,2,3,4]");

  Grammar g = parse_program(
                  ":- type(listnum, []).\n"
                  ":- type(listnum, '.'(num, listnum)).\ndummy(x).\n")
                  .type_rules;
  ConcreteSize cs = measure_term(g, "listnum", z);
  CHECK(concrete_to_string(cs) == "ln^(4,4)(n^(1,4))");
}

TEST_CASE("append of empty lists takes one step") {
  Program p = parse_program(kAppend);
  ExecTrace tr = run_goal(p, mk_comp("append", {mk_nil(), mk_nil(), mk_var("Z")}));
  CHECK(tr.steps == 1);
  CHECK(tr.solutions == 1);
}

TEST_CASE("factorial trace: builtins cost no steps") {
  Program p = parse_program(kFact);
  ExecTrace tr = run_goal(p, mk_comp("fact", {mk_num(3), mk_var("M")}));
  // 4 productive unifications plus the backtracking attempt of the
  // recursive clause head against fact(0,_) whose guard then fails
  CHECK(tr.steps == 5);
  CHECK(tr.solutions == 1);
  CHECK(tr.solution_goals[0].args[1].num == 6);
}

TEST_CASE("backtracking counts all successful head unifications") {
  Program p = parse_program("mem(X,[X|_]).\nmem(X,[_|T]) :- mem(X,T).\n");
  ExecTrace tr = run_goal(p, mk_comp("mem", {mk_var("X"), num_list({1, 2, 2})}));
  CHECK(tr.solutions == 3);
  // 3 head matches on clause 1 + 3 on clause 2 (the last recursion hits [])
  CHECK(tr.steps == 6);
}

TEST_CASE("failing goal yields zero solutions but counted steps") {
  Program p = parse_program(kFact);
  ExecTrace tr = run_goal(p, mk_comp("fact", {mk_num(-1), mk_var("M")}));
  CHECK(tr.solutions == 0);
  // base head fails to unify; recursive head unifies before its guard fails
  CHECK(tr.steps == 1);
}

TEST_CASE("traces are deterministic") {
  Program p = parse_program(kAppend);
  Term goal = mk_comp("append", {num_list({5, 6}), num_list({7}), mk_var("Z")});
  std::string a = trace_to_string(run_goal(p, goal));
  std::string b = trace_to_string(run_goal(p, goal));
  CHECK(a == b);
}

TEST_CASE("runaway programs hit the caps") {
  Program p = parse_program("loop(X) :- loop(X).\n");
  Limits lim;
  lim.max_depth = 100;
  ExecTrace tr = run_goal(p, mk_comp("loop", {mk_num(1)}), lim);
  CHECK(tr.cap_hit);
}

TEST_CASE("undefined predicates raise an error") {
  Program p = parse_program("p(X) :- q(X).\n");
  CHECK_THROWS_AS(run_goal(p, mk_comp("p", {mk_num(1)})), OracleError);
}

TEST_CASE("solution sets match hand enumeration on small inputs") {
  Program p = parse_program(kAppend);
  // append(X,Y,[1,2]) enumerates all splits
  ExecTrace tr =
      run_goal(p, mk_comp("append", {mk_var("X"), mk_var("Y"), num_list({1, 2})}));
  CHECK(tr.solutions == 3);
  std::set<std::string> got;
  for (auto& s : tr.solution_goals) got.insert(term_to_string(s));
  std::set<std::string> want = {"append([],[1,2],[1,2])", "append([1],[2],[1,2])",
                                "append([1,2],[],[1,2])"};
  CHECK(got == want);
}

TEST_CASE("bound check verdicts") {
  Grammar g = parse_program(
                  ":- type(listnum, []).\n"
                  ":- type(listnum, '.'(num, listnum)).\ndummy(x).\n")
                  .type_rules;
  VarSupply sup;
  Schema in_schema = derive_sized_schema(g, "listnum", sup);  // a1,b1,a2,b2
  ConcreteSize in = measure_term(g, in_schema, num_list({1, 2, 3}));
  std::map<std::string, Rat> env_lo, env_hi;
  extend_env_from_measurement(in_schema, in, env_lo, env_hi);
  CHECK(env_lo.at("a1") == Rat(3));
  CHECK(env_hi.at("b1") == Rat(3));

  Verdict v;
  ExprP lower = ex_add(ex_var("a1"), ex_int(1));
  ExprP upper = ex_add(ex_var("b1"), ex_int(1));
  check_value("steps", Rat(4), lower, upper, env_lo, env_hi, v);
  CHECK(v.ok);
  check_value("steps", Rat(10), lower, upper, env_lo, env_hi, v);
  CHECK_FALSE(v.ok);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].find("10 > upper 4") != std::string::npos);

  // vacuous fallback bounds always pass
  Verdict v2;
  check_value("steps", Rat(999), ex_int(0), ex_inf(), env_lo, env_hi, v2);
  CHECK(v2.ok);
}

TEST_CASE("unpopulated input positions use safe extremes") {
  Grammar g = parse_program(
                  ":- type(listnum, []).\n"
                  ":- type(listnum, '.'(num, listnum)).\ndummy(x).\n")
                  .type_rules;
  VarSupply sup;
  Schema in_schema = derive_sized_schema(g, "listnum", sup);
  ConcreteSize in = measure_term(g, in_schema, mk_nil());
  std::map<std::string, Rat> env_lo, env_hi;
  extend_env_from_measurement(in_schema, in, env_lo, env_hi);
  CHECK(env_lo.at("a2") == Rat(0));
  CHECK(env_hi.at("b2") == Rat::inf());
}

TEST_CASE("output schema check walks the tree positionally") {
  Grammar g = parse_program(
                  ":- type(listnum, []).\n"
                  ":- type(listnum, '.'(num, listnum)).\ndummy(x).\n")
                  .type_rules;
  VarSupply sup;
  Schema out = derive_sized_schema(g, "listnum", sup);
  // closed forms: length in [a1+1, b1+2], elements in [a2, b2]
  out.lower = ex_add(ex_var("a1"), ex_int(1));
  out.upper = ex_add(ex_var("b1"), ex_int(2));
  out.args[0].lower = ex_var("a2");
  out.args[0].upper = ex_var("b2");
  std::map<std::string, Rat> env_lo{{"a1", Rat(2)}, {"a2", Rat(1)}};
  std::map<std::string, Rat> env_hi{{"b1", Rat(2)}, {"b2", Rat(5)}};
  ConcreteSize ok = measure_term(g, out, num_list({1, 3, 5}));
  Verdict v;
  check_output_schema("out", out, ok, env_lo, env_hi, v);
  CHECK(v.ok);
  ConcreteSize bad = measure_term(g, out, num_list({1, 3, 9}));
  Verdict v2;
  check_output_schema("out", out, bad, env_lo, env_hi, v2);
  CHECK_FALSE(v2.ok);
}
