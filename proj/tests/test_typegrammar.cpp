#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sizedcost/parser.hpp"
#include "sizedcost/typegrammar.hpp"

using namespace sizedcost;

static Grammar list_grammar() {
  Program p = parse_program(
      ":- type(listnum, []).\n"
      ":- type(listnum, '.'(num, listnum)).\n"
      "dummy(x).\n");
  return p.type_rules;
}

static Grammar lln_grammar() {
  Program p = parse_program(
      ":- type(listnum, []).\n"
      ":- type(listnum, '.'(num, listnum)).\n"
      ":- type(lln, []).\n"
      ":- type(lln, '.'(listnum, lln)).\n"
      "dummy(x).\n");
  return p.type_rules;
}

static Term num_list(const std::vector<long long>& xs) {
  std::vector<Term> ts;
  for (auto x : xs) ts.push_back(mk_num(x));
  return mk_list(ts);
}

TEST_CASE("recursive symbol detection") {
  Grammar g = list_grammar();
  CHECK(is_recursive_symbol(g, "listnum"));
  Program p = parse_program(":- type(pair, t(num, num)).\ndummy(x).\n");
  CHECK_FALSE(is_recursive_symbol(p.type_rules, "pair"));
  Program m = parse_program(
      ":- type(a, f(b)).\n:- type(b, g(a)).\ndummy(x).\n");
  CHECK(is_recursive_symbol(m.type_rules, "a"));
  CHECK(is_recursive_symbol(m.type_rules, "b"));
  CHECK_THROWS_AS(is_recursive_symbol(g, "tree"), TypeError);
}

TEST_CASE("derive sized schema for listnum") {
  Grammar g = list_grammar();
  VarSupply s;
  Schema sc = derive_sized_schema(g, "listnum", s);
  CHECK(schema_to_string(sc) == "ln^(a1,b1)(n<.,1>^(a2,b2))");
  std::vector<std::pair<std::string, std::string>> vars;
  schema_bound_vars(sc, vars);
  REQUIRE(vars.size() == 2);
  CHECK(vars[0].first == "a1");
  CHECK(vars[1].second == "b2");
}

TEST_CASE("bare num gets a single bound pair") {
  Grammar g;
  VarSupply s;
  Schema sc = derive_sized_schema(g, "num", s);
  CHECK(schema_to_string(sc) == "n^(a1,b1)");
}

TEST_CASE("nested list types get one pair per level") {
  Program p = parse_program(
      ":- type(listnum, []).\n"
      ":- type(listnum, '.'(num, listnum)).\n"
      ":- type(lln, []).\n"
      ":- type(lln, '.'(listnum, lln)).\n"
      ":- type(llln, []).\n"
      ":- type(llln, '.'(lln, llln)).\n"
      "dummy(x).\n");
  VarSupply s;
  Schema sc = derive_sized_schema(p.type_rules, "llln", s);
  std::vector<std::pair<std::string, std::string>> vars;
  schema_bound_vars(sc, vars);
  CHECK(vars.size() == 4);  // three list levels plus the num leaf
}

TEST_CASE("schemas from different supplies agree up to renaming") {
  Grammar g = lln_grammar();
  VarSupply s1;
  VarSupply s2{"x", "y", 10};
  Schema a = derive_sized_schema(g, "lln", s1);
  Schema b = derive_sized_schema(g, "lln", s2);
  CHECK(schema_to_string(a) != schema_to_string(b));
  // same structure: strip variable names
  std::function<std::string(const Schema&)> shape = [&](const Schema& s) {
    std::string out = s.symbol + (s.has_bounds() ? "^" : "");
    for (auto& c : s.args) out += "(" + shape(c) + ")";
    return out;
  };
  CHECK(shape(a) == shape(b));
}

TEST_CASE("non-deterministic grammars are rejected") {
  Program p = parse_program(
      ":- type(t, f(num)).\n:- type(t, f(t)).\ndummy(x).\n");
  VarSupply s;
  CHECK_THROWS_AS(derive_sized_schema(p.type_rules, "t", s), TypeError);
}

TEST_CASE("measure empty list") {
  Grammar g = list_grammar();
  ConcreteSize c = measure_term(g, "listnum", mk_nil());
  CHECK(concrete_to_string(c) == "ln^(0,0)(n^nob)");
}

TEST_CASE("measure flat list counts cells and element extremes") {
  Grammar g = list_grammar();
  ConcreteSize c = measure_term(g, "listnum", num_list({1, 2}));
  CHECK(concrete_to_string(c) == "ln^(2,2)(n^(1,2))");
}

TEST_CASE("measure nested lists aggregates per level") {
  Grammar g = lln_grammar();
  Term t = mk_list({num_list({3}), num_list({4, 5})});
  ConcreteSize c = measure_term(g, "lln", t);
  CHECK(concrete_to_string(c) == "lln^(2,2)(ln^(1,2)(n^(3,5)))");
}

TEST_CASE("measure rejects ill-typed terms") {
  Grammar g = list_grammar();
  CHECK_THROWS_AS(measure_term(g, "listnum", mk_atom("foo")), TypeError);
  CHECK_THROWS_AS(measure_term(g, "listnum", mk_list({mk_atom("x")})), TypeError);
}

TEST_CASE("outer count equals independent length on random lists") {
  Grammar g = list_grammar();
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> len(0, 12), val(-5, 9);
  for (int i = 0; i < 200; ++i) {
    int n = len(rng);
    std::vector<long long> xs;
    for (int j = 0; j < n; ++j) xs.push_back(val(rng));
    ConcreteSize c = measure_term(g, "listnum", num_list(xs));
    CHECK(c.populated);
    CHECK(c.lo == Rat(n));
    CHECK(c.hi == Rat(n));
    if (n > 0) {
      long long mn = *std::min_element(xs.begin(), xs.end());
      long long mx = *std::max_element(xs.begin(), xs.end());
      CHECK(c.args[0].lo == Rat(mn));
      CHECK(c.args[0].hi == Rat(mx));
    } else {
      CHECK_FALSE(c.args[0].populated);
    }
  }
}

TEST_CASE("measurement has lower equal upper at recursive positions") {
  Grammar g = lln_grammar();
  Term t = mk_list({num_list({1}), num_list({2, 3}), num_list({})});
  ConcreteSize c = measure_term(g, "lln", t);
  CHECK(c.lo == c.hi);
  std::vector<std::optional<std::pair<Rat, Rat>>> flat;
  concrete_bounds(c, flat);
  REQUIRE(flat.size() == 3);
  CHECK(flat[0]->first == Rat(3));
  CHECK(flat[1]->first == Rat(0));  // min inner length
  CHECK(flat[1]->second == Rat(2));
  CHECK(flat[2]->first == Rat(1));
  CHECK(flat[2]->second == Rat(3));
}

TEST_CASE("non-recursive symbols measure through without bounds") {
  Program p = parse_program(":- type(pair, t(num, num)).\ndummy(x).\n");
  ConcreteSize c =
      measure_term(p.type_rules, "pair", mk_comp("t", {mk_num(7), mk_num(2)}));
  CHECK(concrete_to_string(c) == "pair(n^(7,7),n^(2,2))");
}
