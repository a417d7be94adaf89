#pragma once

#include <random>

#include "sizedcost/fixpoint.hpp"
#include "sizedcost/oracle.hpp"

namespace sizedcost {

// ---------------------------------------------------------------------------
// Random ground goal generation and end-to-end bound checking: run each
// generated goal through the concrete interpreter and verify that the
// observed step count, solution count, and output sizes sit between the
// inferred lower and upper closed forms.

// Builds a random ground term of the given type symbol.  Recursive symbols
// get a uniformly chosen spine length in [0, max_size]; numeric leaves get
// a uniform value in [0, max_size].
inline Term random_ground_term(const Grammar& g, const std::string& sym,
                               int max_size, std::mt19937& rng) {
  std::uniform_int_distribution<int> num_dist(0, max_size);
  if (sym == "num" && !g.count("num")) return mk_num(num_dist(rng));
  auto it = g.find(sym);
  if (it == g.end()) throw TypeError("undefined type symbol: " + sym);

  std::vector<const Term*> rec_alts, base_alts;
  for (auto& rhs : it->second) {
    bool rec = false;
    for (auto& a : rhs.args)
      if (a.is_atom(sym)) rec = true;
    (rec ? rec_alts : base_alts).push_back(&rhs);
  }
  if (base_alts.empty())
    throw TypeError("type symbol " + sym + " has no terminal alternative");

  std::function<Term(int)> build = [&](int remaining) -> Term {
    const Term* rhs;
    if (remaining > 0 && !rec_alts.empty()) {
      std::uniform_int_distribution<size_t> pick(0, rec_alts.size() - 1);
      rhs = rec_alts[pick(rng)];
    } else {
      std::uniform_int_distribution<size_t> pick(0, base_alts.size() - 1);
      rhs = base_alts[pick(rng)];
    }
    if (rhs->is_atom()) return mk_atom(rhs->name);
    std::vector<Term> args;
    for (auto& a : rhs->args) {
      if (a.is_atom(sym))
        args.push_back(build(remaining - 1));
      else
        args.push_back(random_ground_term(g, a.name, max_size, rng));
    }
    return mk_comp(rhs->name, std::move(args));
  };

  if (rec_alts.empty()) return build(0);
  std::uniform_int_distribution<int> len(0, max_size);
  return build(len(rng));
}

struct SweepOptions {
  int max_size = 8;
  int goals = 50;
  unsigned seed = 1;
  Limits limits;
};

struct SweepStats {
  int attempted = 0;
  int checked = 0;  // goals whose trace completed and was verified
  int skipped = 0;  // goals that hit an interpreter cap
  int errored = 0;  // goals aborted by a runtime error (e.g. zero divisor)
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

// Checks one analyzed entry point: generates random ground input terms per
// the entry assertion, runs the goal concretely, and verifies step count,
// solution count, and per-solution output sizes against the summary.
// Goals whose trace hits a cap are skipped (and counted).
inline SweepStats sweep_entry(const Program& prog, const AnalysisResult& res,
                              size_t entry_idx, const SweepOptions& opt) {
  SweepStats st;
  const EntryAssertion& entry = prog.entries.at(entry_idx);
  const PredSummary& s = res.summaries.at(res.entry_keys.at(entry_idx));
  std::string name = entry.pred.substr(0, entry.pred.find('/'));
  std::mt19937 rng(opt.seed);

  for (int k = 0; k < opt.goals; ++k) {
    ++st.attempted;
    std::vector<Term> args;
    std::vector<Term> inputs;
    size_t out_n = 0;
    for (auto& a : entry.args) {
      if (a.mode == ArgMode::Input) {
        Term t = random_ground_term(res.grammar, a.type_name, opt.max_size, rng);
        inputs.push_back(t);
        args.push_back(std::move(t));
      } else {
        args.push_back(mk_var("Out" + std::to_string(++out_n)));
      }
    }
    Term goal = mk_comp(name, std::move(args));
    ExecTrace tr;
    try {
      tr = run_goal(prog, goal, opt.limits);
    } catch (const OracleError&) {
      ++st.errored;  // no completed trace to compare against
      continue;
    }
    if (tr.cap_hit) {
      ++st.skipped;
      continue;
    }

    std::map<std::string, Rat> env_lo, env_hi;
    for (size_t i = 0; i < inputs.size(); ++i) {
      ConcreteSize m = measure_term(res.grammar, s.input_schemas.at(i), inputs[i]);
      extend_env_from_measurement(s.input_schemas.at(i), m, env_lo, env_hi);
    }

    Verdict v;
    auto sit = s.res.find("steps");
    if (sit != s.res.end())
      check_value("steps", Rat(tr.steps), sit->second.first, sit->second.second,
                  env_lo, env_hi, v);
    check_value("solutions", Rat(tr.solutions), s.sol_lo, s.sol_hi,
                env_lo, env_hi, v);

    for (auto& sg : tr.solution_goals) {
      size_t oi = 0;
      for (size_t i = 0; i < entry.args.size(); ++i) {
        if (entry.args[i].mode == ArgMode::Input) continue;
        size_t j = oi++;
        if (j >= s.out_schemas.size() || s.out_schemas[j].symbol.empty())
          continue;
        try {
          ConcreteSize m = measure_term(res.grammar, s.out_schemas[j], sg.args[i]);
          check_output_schema("out" + std::to_string(j + 1), s.out_schemas[j],
                              m, env_lo, env_hi, v);
        } catch (const TypeError&) {
          // non-ground or ill-typed output instance: nothing measurable
        }
      }
    }

    if (!v.ok) {
      std::string msg = term_to_string(goal);
      for (auto& viol : v.violations) msg += "\n    " + viol;
      st.failures.push_back(std::move(msg));
    } else {
      ++st.checked;
    }
  }
  return st;
}

}  // namespace sizedcost
