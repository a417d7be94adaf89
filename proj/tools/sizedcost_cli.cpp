#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sizedcost/check.hpp"
#include "sizedcost/fixpoint.hpp"
#include "sizedcost/parser.hpp"

using namespace sizedcost;
using json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

enum class BoundsSel { Lower, Upper, Both };

std::string pair_str(const ExprP& lo, const ExprP& hi, BoundsSel sel) {
  std::string l = lo ? to_string(lo) : "0";
  std::string h = hi ? to_string(hi) : "inf";
  if (sel == BoundsSel::Lower) h = "-";
  if (sel == BoundsSel::Upper) l = "-";
  return "(" + l + "," + h + ")";
}

std::string render_text(const Program& prog, const AnalysisResult& res,
                        BoundsSel sel) {
  std::string out = "sizedcost report v" + std::to_string(kSchemaVersion) + "\n";
  std::set<std::string> seen;
  for (auto& key : res.entry_keys) {
    if (!seen.insert(key).second) continue;
    const PredSummary& s = res.summaries.at(key);
    out += "\n" + s.pred + "  [" + s.key + "]\n";
    out += "  inputs:";
    for (auto& sc : s.input_schemas) out += " " + schema_to_string(sc, false);
    out += "\n  outputs:";
    for (auto& sc : s.out_schemas)
      out += " " + (sc.symbol.empty() ? std::string("?")
                                      : schema_to_string(sc, false));
    out += "\n  solutions: " + pair_str(s.sol_lo, s.sol_hi, sel) + "\n";
    for (auto& [name, p] : s.res)
      out += "  " + name + ": " + pair_str(p.first, p.second, sel) + "\n";
    out += std::string("  nf: ") +
           (s.nfdet.not_fails ? "not_fails" : "fails") +
           ", det: " + (s.nfdet.is_det ? "is_det" : "non_det") + "\n";
    if (s.fallback) out += "  fallback: trivial bounds substituted\n";
    for (auto& d : s.diagnostics) out += "  note: " + d + "\n";
  }
  (void)prog;
  return out;
}

json render_json(const AnalysisResult& res, BoundsSel sel) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["predicates"] = json::array();
  std::set<std::string> seen;
  for (auto& key : res.entry_keys) {
    if (!seen.insert(key).second) continue;
    const PredSummary& s = res.summaries.at(key);
    json p;
    p["pattern"] = s.key;
    p["predicate"] = s.pred;
    json ins = json::array();
    for (auto& sc : s.input_schemas) ins.push_back(schema_to_string(sc, false));
    p["inputs"] = ins;
    json outs = json::array();
    for (auto& sc : s.out_schemas)
      outs.push_back(sc.symbol.empty() ? std::string("?")
                                       : schema_to_string(sc, false));
    p["outputs"] = outs;
    auto bound_pair = [&](const ExprP& lo, const ExprP& hi) {
      json b;
      if (sel != BoundsSel::Upper) b["lower"] = lo ? to_string(lo) : "0";
      if (sel != BoundsSel::Lower) b["upper"] = hi ? to_string(hi) : "inf";
      return b;
    };
    p["solutions"] = bound_pair(s.sol_lo, s.sol_hi);
    json rs;
    for (auto& [name, pr] : s.res) rs[name] = bound_pair(pr.first, pr.second);
    p["resources"] = rs;
    p["not_fails"] = s.nfdet.not_fails;
    p["is_det"] = s.nfdet.is_det;
    p["fallback"] = s.fallback;
    p["diagnostics"] = s.diagnostics;
    doc["predicates"].push_back(p);
  }
  doc["diagnostics"] = res.diagnostics;
  return doc;
}

int cmd_analyze(const std::string& file, const std::string& resources_file,
                const std::string& format, const std::string& bounds) {
  BoundsSel sel = bounds == "lower"   ? BoundsSel::Lower
                  : bounds == "upper" ? BoundsSel::Upper
                                      : BoundsSel::Both;
  Program prog;
  std::vector<ResourceDef> extra;
  try {
    prog = parse_program(slurp(file));
    if (!resources_file.empty())
      extra = parse_resource_defs(slurp(resources_file));
  } catch (const ParseError& e) {
    std::cerr << file << ":" << e.line << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  AnalysisResult res;
  try {
    res = analyze_program(prog, std::move(extra));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (format == "json")
    std::cout << render_json(res, sel).dump(2) << "\n";
  else
    std::cout << render_text(prog, res, sel);

  for (auto& key : res.entry_keys)
    if (res.summaries.at(key).fallback) return 2;
  return 0;
}

int cmd_check(const std::string& file, int max_size, int goals, unsigned seed) {
  Program prog;
  AnalysisResult res;
  try {
    prog = parse_program(slurp(file));
    res = analyze_program(prog);
  } catch (const ParseError& e) {
    std::cerr << file << ":" << e.line << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  bool all_ok = true;
  for (size_t i = 0; i < prog.entries.size(); ++i) {
    SweepOptions opt;
    opt.max_size = max_size;
    opt.goals = goals;
    opt.seed = seed + (unsigned)i;
    SweepStats st = sweep_entry(prog, res, i, opt);
    std::cout << prog.entries[i].pred << ": " << st.checked << "/"
              << st.attempted << " goals verified";
    if (st.skipped) std::cout << ", " << st.skipped << " skipped (caps)";
    if (st.errored) std::cout << ", " << st.errored << " skipped (runtime errors)";
    if (!st.failures.empty())
      std::cout << ", " << st.failures.size() << " FAILED";
    std::cout << "\n";
    for (auto& f : st.failures) std::cout << "  failed goal: " << f << "\n";
    if (!st.ok()) all_ok = false;
  }
  return all_ok ? 0 : 1;
}

int cmd_bench(const std::string& dir) {
  std::string table;
  try {
    table = slurp(dir + "/expected_orders.txt");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  bool all_ok = true;
  std::istringstream lines(table);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream ls(line);
    std::string name, want_lo, want_hi;
    if (!(ls >> name) || name[0] == '#') continue;
    if (!(ls >> want_lo >> want_hi)) {
      std::cerr << "malformed table line: " << line << "\n";
      return 1;
    }
    std::string got_lo, got_hi;
    try {
      Program prog = parse_program(slurp(dir + "/" + name + ".pl"));
      AnalysisResult res = analyze_program(prog);
      const PredSummary& s = res.summaries.at(res.entry_keys.at(0));
      auto& p = s.res.at("steps");
      got_lo = order_string(complexity_order(p.first));
      got_hi = order_string(complexity_order(p.second));
    } catch (const std::exception& e) {
      std::cout << name << ": ERROR " << e.what() << "\n";
      all_ok = false;
      continue;
    }
    if (got_lo == want_lo && got_hi == want_hi) {
      std::cout << name << ": ok (" << got_lo << ", " << got_hi << ")\n";
    } else {
      std::cout << name << ": MISMATCH got (" << got_lo << ", " << got_hi
                << ") want (" << want_lo << ", " << want_hi << ")\n";
      all_ok = false;
    }
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sizedcost: size, cardinality, and cost analysis for logic programs"};
  app.require_subcommand(1);

  std::string file, resources_file, format = "text", bounds = "both";
  auto* analyze = app.add_subcommand("analyze", "analyze a program file");
  analyze->add_option("file", file, "program file")->required();
  analyze->add_option("--resources", resources_file,
                      "extra resource definitions file");
  analyze->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "json"}));
  analyze->add_option("--bounds", bounds, "which bounds to report")
      ->check(CLI::IsMember({"lower", "upper", "both"}));

  std::string check_file;
  int max_size = 8, goals = 50;
  unsigned seed = 1;
  auto* check = app.add_subcommand(
      "check", "validate inferred bounds on random ground goals");
  check->add_option("file", check_file, "program file")->required();
  check->add_option("--max-size", max_size, "maximum input term size");
  check->add_option("--goals", goals, "goals per entry point");
  check->add_option("--seed", seed, "random seed");

  std::string bench_dir = "benchmarks";
  auto* bench = app.add_subcommand(
      "bench", "compare benchmark complexity orders against the golden table");
  bench->add_option("--dir", bench_dir, "benchmark directory");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(analyze))
    return cmd_analyze(file, resources_file, format, bounds);
  if (app.got_subcommand(check))
    return cmd_check(check_file, max_size, goals, seed);
  return cmd_bench(bench_dir);
}
