#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sizedcost/parser.hpp"

using namespace sizedcost;

static const char* kAppend = R"PL(
:- entry(append/3, [in(list), in(list), out(list)]).
:- type(list, []).
:- type(list, '.'(num, list)).

append([],Y,Y).
append([X|Xs],Y,[X|Zs]) :- append(Xs,Y,Zs).
)PL";

TEST_CASE("append program parses into two clauses with directives") {
  Program p = parse_program(kAppend);
  REQUIRE(p.predicates.count("append/3"));
  CHECK(p.predicates.at("append/3").size() == 2);
  REQUIRE(p.entries.size() == 1);
  CHECK(p.entries[0].pred == "append/3");
  REQUIRE(p.entries[0].args.size() == 3);
  CHECK(p.entries[0].args[0].mode == ArgMode::Input);
  CHECK(p.entries[0].args[2].mode == ArgMode::Output);
  CHECK(p.entries[0].args[0].type_name == "list");
  REQUIRE(p.type_rules.count("list"));
  CHECK(p.type_rules.at("list").size() == 2);
  CHECK(validate_program(p).empty());
}

TEST_CASE("clause variables are renamed apart between clauses") {
  Program p = parse_program("p(X) :- q(X).\nr(X) :- s(X).\n");
  const Term& v1 = p.predicates.at("p/1")[0].head.args[0];
  const Term& v2 = p.predicates.at("r/1")[0].head.args[0];
  CHECK(v1.name != v2.name);
  // within a clause the occurrences stay shared
  CHECK(p.predicates.at("p/1")[0].body[0].args[0].name == v1.name);
}

TEST_CASE("anonymous variables are all distinct") {
  Program p = parse_program("p(_,_).\n");
  const Clause& c = p.predicates.at("p/2")[0];
  CHECK(c.head.args[0].name != c.head.args[1].name);
}

TEST_CASE("arithmetic bodies parse with standard precedence") {
  Program p = parse_program("f(N,M) :- M is N*2+1.\n");
  const Term& g = p.predicates.at("f/2")[0].body[0];
  REQUIRE(g.functor_key() == "is/2");
  const Term& rhs = g.args[1];
  REQUIRE(rhs.functor_key() == "+/2");
  CHECK(rhs.args[0].functor_key() == "*/2");
  CHECK(rhs.args[1].num == 1);
}

TEST_CASE("list sugar and tails desugar to cons cells") {
  Program p = parse_program("p([1,2|T]).\n");
  const Term& a = p.predicates.at("p/1")[0].head.args[0];
  REQUIRE(a.is_cons());
  CHECK(a.args[0].num == 1);
  REQUIRE(a.args[1].is_cons());
  CHECK(a.args[1].args[0].num == 2);
  CHECK(a.args[1].args[1].is_var());
}

TEST_CASE("empty input yields empty program") {
  Program p = parse_program("");
  CHECK(p.predicates.empty());
  CHECK(p.entries.empty());
}

TEST_CASE("syntax errors report positions") {
  CHECK_THROWS_AS(parse_program("p(X) :- q(X"), ParseError);
  CHECK_THROWS_AS(parse_program("p(X) q(X).\n"), ParseError);
  try {
    parse_program("p(X) :-\n  q(X");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("unsupported constructs are rejected") {
  CHECK_THROWS_WITH_AS(parse_program("p(X) :- !, q(X).\n"), doctest::Contains("cut"),
                       ParseError);
  CHECK_THROWS_AS(parse_program("p(X) :- q(X) ; r(X).\n"), ParseError);
  CHECK_THROWS_AS(parse_program("p(X) :- \\+ q(X).\n"), ParseError);
}

TEST_CASE("resource definitions parse bit-exactly") {
  const char* src = R"PL(
:- resource(bytes).
:- head_cost(bytes, append/3, 8).
:- head_cost(bytes, _, 1/2).
:- literal_cost(bytes, is/2, 2).
:- aggregation(bytes, sum, min).
:- default(bytes, 0, inf).
)PL";
  std::vector<ResourceDef> rs = parse_resource_defs(src);
  REQUIRE(rs.size() == 1);
  const ResourceDef& r = rs[0];
  CHECK(r.name == "bytes");
  CHECK(r.head_cost("append/3") == Rat(8));
  CHECK(r.head_cost("other/1") == Rat(1, 2));
  CHECK(r.literal_cost("is/2") == Rat(2));
  CHECK(r.literal_cost("</2") == Rat(0));
  CHECK(r.upper_agg == Agg::Sum);
  CHECK(r.lower_agg == Agg::Min);
  CHECK(r.default_lower == Rat(0));
  CHECK(r.default_upper == Rat::inf());
}

TEST_CASE("inverted resource defaults are rejected") {
  CHECK_THROWS_AS(parse_resource_defs(":- resource(bytes).\n"
                                      ":- default(bytes, 5, 3).\n"),
                  ParseError);
}

TEST_CASE("costs for undeclared resources are rejected") {
  CHECK_THROWS_AS(parse_resource_defs(":- head_cost(bytes, _, 1).\n"), ParseError);
}

TEST_CASE("trust directives populate the program tables") {
  Program p = parse_program(
      ":- trust_nf(q/1, not_fails).\n"
      ":- trust_det(q/1, is_det).\n"
      "p(X) :- q(X).\n");
  REQUIRE(p.trust_nf.count("q/1"));
  CHECK(p.trust_nf.at("q/1"));
  REQUIRE(p.trust_det.count("q/1"));
  CHECK(p.trust_det.at("q/1"));
  // trusted callee counts as defined
  CHECK(validate_program(p).empty());
}

TEST_CASE("validate reports undefined predicates and types") {
  Program p = parse_program("p(X) :- q(X).\n");
  std::vector<std::string> d = validate_program(p);
  REQUIRE(d.size() == 1);
  CHECK(d[0].find("q/1") != std::string::npos);

  Program p2 = parse_program(
      ":- entry(p/1, [in(tree)]).\n"
      "p(x).\n");
  std::vector<std::string> d2 = validate_program(p2);
  REQUIRE(d2.size() == 1);
  CHECK(d2[0].find("tree") != std::string::npos);
}

TEST_CASE("entry arity mismatch is a parse error") {
  CHECK_THROWS_AS(parse_program(":- entry(p/2, [in(list)]).\np(X,Y).\n"),
                  ParseError);
}

TEST_CASE("comments and quoted atoms") {
  Program p = parse_program(
      "% a comment\n"
      "p('.').  % trailing comment\n");
  CHECK(p.predicates.at("p/1")[0].head.args[0].is_atom("."));
}

TEST_CASE("round trip: parse of pretty-printed program is identical") {
  Program p = parse_program(kAppend);
  std::string printed = program_to_string(p);
  Program p2 = parse_program(printed);
  REQUIRE(p2.predicates.count("append/3"));
  const auto& cs1 = p.predicates.at("append/3");
  const auto& cs2 = p2.predicates.at("append/3");
  REQUIRE(cs1.size() == cs2.size());
  // compare modulo the renaming by printing again
  CHECK(program_to_string(p2) == printed);
}

TEST_CASE("negative numeric literals") {
  Program p = parse_program("p(-3).\n");
  CHECK(p.predicates.at("p/1")[0].head.args[0].num == -3);
}
