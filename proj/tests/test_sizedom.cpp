#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sizedcost/parser.hpp"
#include "sizedcost/sizedom.hpp"

using namespace sizedcost;

static Grammar list_grammar() {
  Program p = parse_program(
      ":- type(listnum, []).\n"
      ":- type(listnum, '.'(num, listnum)).\n"
      "dummy(x).\n");
  return p.type_rules;
}

static Schema fresh_list_schema(const Grammar& g) {
  VarSupply s;
  return derive_sized_schema(g, "listnum", s);
}

TEST_CASE("decomposing [E|R] peels one application and keeps element bounds") {
  Grammar g = list_grammar();
  Schema sc = fresh_list_schema(g);  // ln^(a1,b1)(n<.,1>^(a2,b2))
  SizedElement e;
  Term pat = mk_cons(mk_var("E"), mk_var("R"));
  add_head_decomposition(e, g, pat, sc, VarClass::Relevant);

  REQUIRE(e.d.size() == 2);
  CHECK(e.d[0].var == "a1");
  CHECK(e.d[0].op == GuardAtom::Op::Gt);
  CHECK(e.d[0].k == Rat(0));
  CHECK(e.d[1].var == "b1");

  REQUIRE(e.t.count("R"));
  const Schema& rs = e.t.at("R").first;
  CHECK(schema_to_string(rs) == "ln^(a1-1,b1-1)(n<.,1>^(a2,b2))");
  REQUIRE(e.t.count("E"));
  CHECK(schema_to_string(e.t.at("E").first) == "n<.,1>^(a2,b2)");
}

TEST_CASE("decomposing [] pins the length to zero") {
  Grammar g = list_grammar();
  SizedElement e;
  add_head_decomposition(e, g, mk_nil(), fresh_list_schema(g), VarClass::Relevant);
  REQUIRE(e.d.size() == 2);
  CHECK(e.d[0].var == "a1");
  CHECK(e.d[0].op == GuardAtom::Op::Eq);
  CHECK(e.d[0].k == Rat(0));
  CHECK(e.d[1].var == "b1");
  CHECK(e.t.empty());
}

TEST_CASE("decomposing [A,B|R] peels two applications") {
  Grammar g = list_grammar();
  SizedElement e;
  Term pat = mk_cons(mk_var("A"), mk_cons(mk_var("B"), mk_var("R")));
  add_head_decomposition(e, g, pat, fresh_list_schema(g), VarClass::Relevant);
  // constraints a1>0, b1>0 then a1-1>0 i.e. a1>1 after shifting
  REQUIRE(e.d.size() == 4);
  CHECK(e.d[2].var == "a1");
  CHECK(e.d[2].op == GuardAtom::Op::Gt);
  CHECK(e.d[2].k == Rat(1));
  CHECK(schema_to_string(e.t.at("R").first) ==
        "ln^(a1-2,b1-2)(n<.,1>^(a2,b2))");
  CHECK(schema_to_string(e.t.at("A").first) == "n<.,1>^(a2,b2)");
  CHECK(schema_to_string(e.t.at("B").first) == "n<.,1>^(a2,b2)");
}

TEST_CASE("numeric head constant induces equality constraints") {
  Grammar g;
  VarSupply s;
  Schema n = derive_sized_schema(g, "num", s);  // n^(a1,b1)
  SizedElement e;
  add_head_decomposition(e, g, mk_num(0), n, VarClass::Relevant);
  REQUIRE(e.d.size() == 2);
  CHECK(e.d[0].var == "a1");
  CHECK(e.d[0].op == GuardAtom::Op::Eq);
  CHECK(e.d[0].k == Rat(0));
  CHECK(e.d[1].var == "b1");
  CHECK(e.d[1].k == Rat(0));
}

TEST_CASE("constrain_expr shifts var+c against the comparand") {
  // a1 - 1 > 0  =>  a1 > 1
  auto c = constrain_expr(ex_sub(ex_var("a1"), ex_int(1)), GuardAtom::Op::Gt,
                          Rat(0));
  REQUIRE(c);
  CHECK(c->var == "a1");
  CHECK(c->k == Rat(1));
  // products are not single-variable constraints
  CHECK_FALSE(constrain_expr(ex_mul(ex_var("a"), ex_var("b")),
                             GuardAtom::Op::Eq, Rat(0)));
}

TEST_CASE("expand_lessgtr yields one lower and one upper inequality") {
  Relation rel{"x_lo", "x_hi", ex_int(3), ex_var("n")};
  auto ineqs = expand_lessgtr(rel);
  REQUIRE(ineqs.size() == 2);
  CHECK(ineqs[0].var == "x_lo");
  CHECK(ineqs[0].is_lower);
  CHECK(ineqs[1].var == "x_hi");
  CHECK_FALSE(ineqs[1].is_lower);
  Relation half{"y_lo", "y_hi", nullptr, ex_int(7)};
  CHECK(expand_lessgtr(half).size() == 1);
}

TEST_CASE("normalize_relations substitutes chains and is idempotent") {
  SizedElement e;
  // x <> (y, y+1); y <> (z, z+1); roots {x_lo, x_hi}
  e.r.push_back({"x_lo", "x_hi", ex_var("y_lo"),
                 ex_add(ex_var("y_hi"), ex_int(1))});
  e.r.push_back({"y_lo", "y_hi", ex_var("z"),
                 ex_add(ex_var("z"), ex_int(1))});
  SizedElement n1 = normalize_relations(e, {"x_lo", "x_hi"});
  REQUIRE(n1.r.size() == 1);
  CHECK(to_string(n1.r[0].lo) == "z");
  CHECK(to_string(n1.r[0].hi) == "z+2");
  SizedElement n2 = normalize_relations(n1, {"x_lo", "x_hi"});
  REQUIRE(n2.r.size() == 1);
  CHECK(to_string(n2.r[0].lo) == to_string(n1.r[0].lo));
  CHECK(to_string(n2.r[0].hi) == to_string(n1.r[0].hi));
}

TEST_CASE("normalization rejects cyclic definitions") {
  SizedElement e;
  // the root depends on u and v, which are defined in terms of each other
  e.r.push_back({"x_lo", "x_hi", ex_var("u_lo"), ex_var("u_hi")});
  e.r.push_back({"u_lo", "u_hi", ex_add(ex_var("v_lo"), ex_int(1)),
                 ex_var("v_hi")});
  e.r.push_back({"v_lo", "v_hi", ex_var("u_lo"), ex_var("u_hi")});
  CHECK_THROWS_AS(normalize_relations(e, {"x_lo", "x_hi"}), DomainError);
}

TEST_CASE("init_clause_element decomposes only input positions") {
  Program p = parse_program(
      ":- type(listnum, []).\n"
      ":- type(listnum, '.'(num, listnum)).\n"
      ":- entry(append/3, [in(listnum), in(listnum), out(listnum)]).\n"
      "append([], Y, Y).\n"
      "append([E|Xs], Y, [E|Zs]) :- append(Xs, Y, Zs).\n");
  VarSupply s;
  Schema s1 = derive_sized_schema(p.type_rules, "listnum", s);
  Schema s2 = derive_sized_schema(p.type_rules, "listnum", s);
  const EntryAssertion& entry = p.entries[0];
  const auto& clauses = *p.clauses_of("append/3");

  SizedElement e1 = init_clause_element(clauses[0], entry, p.type_rules, {s1, s2});
  // first clause: X = [] pins (a1,b1) = 0; Y is a bare input variable
  REQUIRE(e1.d.size() == 2);
  CHECK(e1.d[0].var == "a1");
  CHECK(e1.d[0].op == GuardAtom::Op::Eq);
  REQUIRE(e1.t.size() == 1);  // only Y; the output stays unbound for now

  SizedElement e2 = init_clause_element(clauses[1], entry, p.type_rules, {s1, s2});
  CHECK(e2.d.size() == 2);  // a1 > 0, b1 > 0
  CHECK(e2.t.count("E_c1"));
  CHECK(e2.t.count("Xs_c1"));
  CHECK(e2.t.count("Y_c1"));
  CHECK(schema_to_string(e2.t.at("Xs_c1").first) ==
        "ln^(a1-1,b1-1)(n<.,1>^(a2,b2))");
}

TEST_CASE("interval arithmetic for is/2 right-hand sides") {
  Grammar g = list_grammar();
  SizedElement e;
  VarSupply s;
  Schema n1 = derive_sized_schema(g, "num", s);  // (a1,b1)
  Schema n2 = derive_sized_schema(g, "num", s);  // (a2,b2)
  e.t.emplace("X", std::make_pair(n1, VarClass::Relevant));
  e.t.emplace("Y", std::make_pair(n2, VarClass::Relevant));

  IntervalExpr add = abstract_arith(mk_comp("+", {mk_var("X"), mk_var("Y")}), e);
  CHECK(to_string(add.lo) == "a1+a2");
  CHECK(to_string(add.hi) == "b1+b2");

  IntervalExpr sub = abstract_arith(mk_comp("-", {mk_var("X"), mk_num(1)}), e);
  CHECK(to_string(sub.lo) == "a1-1");
  CHECK(to_string(sub.hi) == "b1-1");

  IntervalExpr mul = abstract_arith(mk_comp("*", {mk_var("X"), mk_var("Y")}), e);
  // products keep the envelope: min/max over the four corner products
  std::map<std::string, Rat> env{{"a1", Rat(2)}, {"b1", Rat(3)},
                                 {"a2", Rat(4)}, {"b2", Rat(5)}};
  CHECK(evaluate(mul.lo, env, RoundDir::Down) <= Rat(8));
  CHECK(evaluate(mul.hi, env, RoundDir::Up) >= Rat(15));

  IntervalExpr dv = abstract_arith(mk_comp("//", {mk_var("X"), mk_num(2)}), e);
  CHECK(to_string(dv.lo) == "0");
  CHECK(to_string(dv.hi) == "b1");

  // unknown variables produce an unbounded interval
  IntervalExpr unk = abstract_arith(mk_var("Z"), e);
  CHECK(unk.lo == nullptr);
  CHECK(unk.hi == nullptr);
}

TEST_CASE("schema_subst and schema_decrement rewrite bounds") {
  Grammar g = list_grammar();
  Schema sc = fresh_list_schema(g);
  std::map<std::string, ExprP> env{{"a1", ex_int(4)}, {"b1", ex_int(6)}};
  Schema sub = schema_subst(sc, env);
  CHECK(schema_to_string(sub) == "ln^(4,6)(n<.,1>^(a2,b2))");
  Schema dec = schema_decrement(sub, 1);
  CHECK(schema_to_string(dec) == "ln^(3,5)(n<.,1>^(a2,b2))");
}
