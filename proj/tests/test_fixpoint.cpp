#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "sizedcost/fixpoint.hpp"
#include "sizedcost/parser.hpp"

using namespace sizedcost;

#ifndef BENCH_DIR
#define BENCH_DIR "benchmarks"
#endif

static Program load_bench(const std::string& name) {
  std::ifstream in(std::string(BENCH_DIR) + "/" + name + ".pl");
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

static const PredSummary& entry_summary(const AnalysisResult& r) {
  REQUIRE(!r.entry_keys.empty());
  return r.summaries.at(r.entry_keys[0]);
}

static std::pair<std::string, std::string> steps_orders(const PredSummary& s) {
  auto& p = s.res.at("steps");
  return {order_string(complexity_order(p.first)),
          order_string(complexity_order(p.second))};
}

TEST_CASE("append: exact bounds") {
  auto res = analyze_program(load_bench("append"));
  auto& s = entry_summary(res);

  CHECK(s.nfdet.not_fails);
  CHECK(s.nfdet.is_det);
  CHECK(to_string(s.sol_lo) == "1");
  CHECK(to_string(s.sol_hi) == "1");

  auto& steps = s.res.at("steps");
  CHECK(to_string(steps.second) == "b1+1");
  auto [lo, hi] = steps_orders(s);
  CHECK(lo == "a1");
  CHECK(hi == "b1");

  REQUIRE(s.out_schemas.size() == 1);
  CHECK(schema_to_string(s.out_schemas[0], false) ==
        "ln^(a1+a3,b1+b3)(n^(min(a2,a4),max(b2,b4)))");
}

TEST_CASE("listfact: orders and determinism") {
  auto res = analyze_program(load_bench("listfact"));
  auto& s = entry_summary(res);

  CHECK(s.nfdet.not_fails);
  CHECK(s.nfdet.is_det);
  CHECK(to_string(s.sol_lo) == "1");
  CHECK(to_string(s.sol_hi) == "1");

  auto [lo, hi] = steps_orders(s);
  CHECK(lo == "a1*a2");
  CHECK(hi == "b1*b2");
}

struct OrderExpect {
  const char* bench;
  const char* lo;
  const char* hi;
};

TEST_CASE("steps complexity orders across the benchmark suite") {
  const OrderExpect expected[] = {
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
  for (auto& e : expected) {
    CAPTURE(std::string(e.bench));
    auto res = analyze_program(load_bench(e.bench));
    auto& s = entry_summary(res);
    auto [lo, hi] = steps_orders(s);
    CHECK(lo == e.lo);
    CHECK(hi == e.hi);
  }
}
