// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cfo/catalog/catalog.hpp"
#include "cfo/cli/report.hpp"
#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/interp/interpreter.hpp"
#include "cfo/metrics/metrics.hpp"
#include "cfo/opaque/opaque.hpp"
#include "cfo/transforms/transforms.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "reference_table.hpp"

using namespace cfo;
using transforms::PassId;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Invocation {
  int code = 0;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "cfo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::vector<harness::CorpusProgram>& corpus() {
  static const auto c = harness::load_corpus(CFO_CORPUS_DIR);
  return c;
}

const harness::CorpusProgram& corpus_program(const std::string& name) {
  for (const auto& c : corpus())
    if (c.name == name) return c;
  throw std::runtime_error("missing corpus program " + name);
}

bool aligned_traps(const ir::Function& fn) {
  return std::all_of(fn.traps.begin(), fn.traps.end(), [&](const ir::TrapEntry& t) {
    return t.start == 0 && t.end == fn.block(t.block).instrs.size() + 1;
  });
}

ir::Program with_function(ir::Program p, const ir::Function& f) {
  for (auto& g : p.functions)
    if (g.name == f.name) g = f;
  return p;
}

// 1. Catalog fidelity against the classification table in the source text.
Verdict catalog_fidelity() {
  auto start = Clock::now();
  auto text = invoke({"catalog"});
  auto json = invoke({"catalog", "--format", "json"});
  double took = seconds_since(start);
  if (text.code != 0 || json.code != 0) return {false, "cfo catalog failed"};
  auto rows = catalog::parse_table_json(json.out);
  auto expected = reference::classification_table();
  std::size_t text_rows = static_cast<std::size_t>(std::count(text.out.begin(), text.out.end(), '\n')) - 1;
  std::size_t lit = 0, tools_only = 0, mismatched = 0;
  std::set<std::string> levels;
  for (const auto& r : rows) {
    lit += r.in_literature;
    tools_only += r.in_tools && !r.in_literature;
    levels.insert(catalog::to_string(r.level));
  }
  std::string first_bad;
  for (std::size_t i = 0; i < std::min(rows.size(), expected.size()); ++i) {
    const auto& r = rows[i];
    const auto& e = expected[i];
    bool same = r.name == e.name && catalog::to_string(r.level) == e.level && r.in_literature == e.literature &&
                r.in_tools == e.tools && r.dr == e.dr && catalog::to_string(r.paradigm) == e.paradigm;
    if (!same) {
      ++mismatched;
      if (first_bad.empty()) first_bad = e.name;
    }
  }
  bool ok = rows.size() == 43 && expected.size() == 43 && text_rows == 43 && levels.size() == 5 && lit == 36 &&
            tools_only == 7 && mismatched == 0 && took < 1.0;
  std::string d = std::to_string(rows.size()) + " rows, " + std::to_string(levels.size()) + " levels, " +
                  std::to_string(lit) + " literature, " + std::to_string(tools_only) + " tools-only, " +
                  std::to_string(mismatched) + " rows differ from the table";
  if (!first_bad.empty()) d += " (first: " + first_bad + ")";
  return {ok, d + ", " + fmt(took) + " s"};
}

// 2. Every pass on corpus + generated programs, 20 inputs each.
Verdict semantic_sweep() {
  auto start = Clock::now();
  struct Subject {
    std::string name;
    transforms::Subject s;
  };
  std::vector<Subject> programs;
  for (const auto& c : corpus()) programs.push_back({c.name, transforms::Subject{c.ast, c.program}});
  for (std::uint64_t i = 0; i < 100; ++i) {
    harness::GenConfig g;
    g.seed = 5000 + i;
    auto unit = harness::gen_program(g);
    programs.push_back({"gen" + std::to_string(g.seed), transforms::Subject{unit.ast, frontend::lower(unit.ast)}});
  }
  std::size_t runs = 0, applied = 0, skipped = 0, mismatches = 0, errors = 0;
  std::set<PassId> ever_applied;
  std::string first;
  for (std::size_t k = 0; k < programs.size(); ++k) {
    const auto& p = programs[k];
    auto inputs = harness::standard_inputs(20, k);
    for (auto pass : transforms::all_passes()) {
      ++runs;
      transforms::PassConfig cfg;
      cfg.seed = k * 131 + static_cast<std::uint64_t>(pass);
      transforms::TransformResult r;
      try {
        r = transforms::apply_pass(pass, p.s, cfg);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoEligibleSites || e.code() == ErrorCode::UnsupportedTraps) {
          ++skipped;
          continue;
        }
        ++errors;
        if (first.empty()) first = p.name + "/" + transforms::to_string(pass) + ": " + e.what();
        continue;
      }
      ++applied;
      ever_applied.insert(pass);
      auto v = harness::differential_test(p.s.ir, r.program, inputs);
      if (v.status != harness::DiffStatus::Equal) {
        ++mismatches;
        if (first.empty()) first = p.name + "/" + transforms::to_string(pass) + ": " + harness::describe(v);
      }
    }
  }
  double took = seconds_since(start);
  bool ok = mismatches == 0 && errors == 0 && ever_applied.size() == transforms::all_passes().size() && took < 600;
  std::string d = std::to_string(programs.size()) + " programs x " + std::to_string(transforms::all_passes().size()) +
                  " passes: " + std::to_string(applied) + " applied, " + std::to_string(skipped) +
                  " without sites, " + std::to_string(mismatches) + " mismatches, " + std::to_string(errors) +
                  " errors; " + std::to_string(ever_applied.size()) + " passes exercised, " + fmt(took) + " s";
  if (!first.empty()) d += "; first: " + first;
  (void)runs;
  return {ok, d};
}

// 3. Exhaustive 16-bit check of every constant family.
Verdict opaque_soundness() {
  auto start = Clock::now();
  std::size_t checked = 0, failed = 0;
  std::string first;
  for (const auto& fam : opaque::families()) {
    if (fam.truth == opaque::Truth::Contextual) continue;
    opaque::PredicateExpr p;
    p.truth = fam.truth;
    p.family = fam.name;
    p.templ = opaque::canonical(fam.name);
    p.inputs.assign(opaque::arity(p.templ), opaque::kFreshInput);
    auto r = opaque::verify_predicate_exhaustive(p, 16);
    ++checked;
    if (!r.holds) {
      ++failed;
      if (first.empty()) first = fam.name;
    }
  }
  double took = seconds_since(start);
  std::string d = std::to_string(checked) + " families over 16 bits, " + std::to_string(failed) +
                  " with counterexamples, " + fmt(took) + " s";
  if (!first.empty()) d += "; first: " + first;
  return {failed == 0 && checked > 0 && took < 30, d};
}

// 4. Dead-tagged code is never executed.
Verdict dead_code_never_runs() {
  std::size_t applications = 0, planted = 0, executed = 0;
  std::string first;
  for (const auto& c : corpus()) {
    auto inputs = harness::standard_inputs(20, 77);
    std::vector<std::pair<PassId, std::string>> runs;
    for (auto pass : transforms::all_passes())
      if (transforms::is_dead_code_pass(pass)) runs.push_back({pass, ""});
    runs.push_back({PassId::DeadCodeInsertion, "buggy_code"});
    runs.push_back({PassId::DeadCodeInsertion, "dead_switch"});
    for (const auto& [pass, variant] : runs) {
      transforms::PassConfig cfg;
      cfg.seed = 3;
      cfg.site_fraction = 1.0;
      cfg.variant = variant;
      transforms::TransformResult r;
      try {
        r = transforms::apply_pass(pass, transforms::Subject{c.ast, c.program}, cfg);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoEligibleSites || e.code() == ErrorCode::UnsupportedTraps) continue;
        throw;
      }
      ++applications;
      auto cov = harness::dead_code_coverage_check(r.program, inputs);
      planted += cov.dead_instructions;
      for (const auto& s : cov.executed) {
        executed += s.count;
        if (first.empty()) first = c.name + "/" + transforms::to_string(pass) + " in " + s.function;
      }
    }
  }
  std::string d = std::to_string(applications) + " applications, " + std::to_string(planted) +
                  " dead instructions planted, " + std::to_string(executed) + " dead executions";
  if (!first.empty()) d += "; first: " + first;
  return {executed == 0 && planted > 0, d};
}

// 5. Structural proxies of the decompiler-resistant passes, and the
// reducibility detector against interval reduction.
Verdict dr_proxies() {
  std::size_t dr_sites = 0, dr_misses = 0, n_checks = 0, n_changed = 0;
  std::string first;
  for (const auto& c : corpus()) {
    for (auto pass : transforms::all_passes()) {
      transforms::PassConfig cfg;
      cfg.seed = 11;
      cfg.site_fraction = 1.0;
      transforms::TransformResult r;
      try {
        r = transforms::apply_pass(pass, transforms::Subject{c.ast, c.program}, cfg);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoEligibleSites || e.code() == ErrorCode::UnsupportedTraps) continue;
        throw;
      }
      if (!transforms::is_dr_pass(pass)) {
        ++n_checks;
        auto p = harness::dr_proxy(pass, c.program, r.program);
        if (!p.triggered) {
          ++n_changed;
          if (first.empty()) first = c.name + "/" + transforms::to_string(pass) + " changed reducibility";
        }
        continue;
      }
      std::set<std::string> touched;
      for (const auto& s : r.sites) touched.insert(s.function);
      for (const auto& name : touched) {
        const auto* fn = r.program.find(name);
        ++dr_sites;
        bool hit = false;
        if (fn) {
          if (pass == PassId::PartiallyTrappingSwitch) hit = harness::has_unaligned_trap(*fn);
          else if (pass == PassId::TableInterpretation) hit = harness::is_single_dispatch_loop(*fn);
          else hit = !metrics::is_reducible(*fn);
        }
        if (!hit) {
          ++dr_misses;
          if (first.empty()) first = c.name + "/" + transforms::to_string(pass) + " on " + name;
        }
      }
    }
  }
  std::mt19937_64 rng(1234);
  std::size_t disagreements = 0, irreducible = 0;
  for (int i = 0; i < 1000; ++i) {
    auto g = oracle::random_digraph(rng, 15);
    bool t = oracle::t1t2_reducible(g);
    irreducible += !t;
    disagreements += metrics::is_reducible(g) != t;
  }
  std::string d = std::to_string(dr_sites) + " DR function sites, " + std::to_string(dr_misses) + " without proxy; " +
                  std::to_string(n_checks) + " DR=N applications, " + std::to_string(n_changed) +
                  " changed reducibility; detector vs T1/T2 on 1000 CFGs: " + std::to_string(disagreements) +
                  " disagreements (" + std::to_string(irreducible) + " irreducible)";
  if (!first.empty()) d += "; first: " + first;
  return {dr_sites > 0 && dr_misses == 0 && n_changed == 0 && disagreements == 0, d};
}

// 6. n! orderings of three functions.
Verdict method_orderings() {
  auto p = frontend::compile(
      "fn a() -> int { return 1; }\nfn b() -> int { return 2; }\n"
      "fn main(args: int[]) -> int { return a() + b(); }");
  std::set<std::vector<std::string>> orders;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    transforms::PassConfig cfg;
    cfg.seed = seed;
    auto r = transforms::apply_pass(PassId::MethodReordering, p, cfg);
    std::vector<std::string> names;
    for (const auto& f : r.program.functions) names.push_back(f.name);
    orders.insert(names);
  }
  return {orders.size() == 6, std::to_string(orders.size()) + " of 6 orderings over 200 seeds"};
}

std::size_t instr_count(const ir::Program& p) {
  std::size_t n = 0;
  for (const auto& f : p.functions)
    for (const auto& b : f.blocks) n += b.instrs.size();
  return n;
}

std::uint64_t steps_in(const interp::CoverageMap& cov, const std::string& fn) {
  std::uint64_t n = 0;
  for (const auto& [key, count] : cov.counts)
    if (std::get<0>(key) == fn) n += count;
  return n;
}

// 7. Insertion grows code; flattening keeps every instruction once and stays
// reducible; virtualization costs at most 30x steps.
Verdict potency() {
  std::size_t insertions = 0, not_growing = 0, flattened = 0, flatten_bad = 0, virtualized = 0;
  double worst = 0;
  std::string first;
  for (const auto& c : corpus()) {
    for (auto pass : transforms::all_passes()) {
      if (!transforms::is_insertion_pass(pass)) continue;
      transforms::PassConfig cfg;
      cfg.seed = 8;
      try {
        auto r = transforms::apply_pass(pass, transforms::Subject{c.ast, c.program}, cfg);
        ++insertions;
        if (instr_count(r.program) <= instr_count(c.program)) {
          ++not_growing;
          if (first.empty()) first = c.name + "/" + transforms::to_string(pass) + " did not grow";
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoEligibleSites) throw;
      }
    }
    for (const auto& fn : c.program.functions) {
      if (!aligned_traps(fn)) continue;
      auto flat = transforms::flatten_function(fn, 21);
      ++flattened;
      const auto& header = flat.blocks.at(1);
      std::map<ir::BlockId, int> cases;
      for (std::size_t i = 0; i + 1 < header.term.targets.size(); ++i) ++cases[header.term.targets[i]];
      std::set<ir::BlockId> handlers;
      for (const auto& t : fn.traps) handlers.insert(t.handler);
      bool ok = header.term.op == ir::Opcode::Switch && metrics::is_reducible(flat);
      for (const auto& b : fn.blocks) {
        const auto& nb = flat.block(b.id);
        ok = ok && nb.instrs.size() >= b.instrs.size() && std::equal(b.instrs.begin(), b.instrs.end(), nb.instrs.begin());
        if (!handlers.count(b.id)) ok = ok && cases[b.id] == 1;
      }
      if (!ok) {
        ++flatten_bad;
        if (first.empty()) first = c.name + "/" + fn.name + " flattening";
      }
    }
    auto inputs = harness::standard_inputs(20, 4);
    for (const auto& fn : c.program.functions) {
      ir::Function vm;
      try {
        vm = transforms::virtualize_function(fn, 2);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnsupportedFeature) throw;
        continue;
      }
      ++virtualized;
      auto q = with_function(c.program, vm);
      for (const auto& in : inputs) {
        auto [ra, ca] = interp::run_with_coverage(c.program, in);
        auto [rb, cb] = interp::run_with_coverage(q, in);
        auto sa = steps_in(ca, fn.name), sb = steps_in(cb, fn.name);
        if (sa == 0) continue;
        double ratio = static_cast<double>(sb) / static_cast<double>(sa);
        worst = std::max(worst, ratio);
        if (ra.output != rb.output || ra.value != rb.value) {
          worst = 1e9;
          if (first.empty()) first = c.name + "/" + fn.name + " virtualized output differs";
        }
      }
    }
  }
  std::string d = std::to_string(insertions) + " insertion applications, " + std::to_string(not_growing) +
                  " not growing; " + std::to_string(flattened) + " functions flattened, " +
                  std::to_string(flatten_bad) + " malformed; " + std::to_string(virtualized) +
                  " functions virtualized, worst step inflation " + fmt(worst) + "x";
  if (!first.empty()) d += "; first: " + first;
  return {insertions > 0 && not_growing == 0 && flattened > 0 && flatten_bad == 0 && virtualized > 0 && worst <= 30, d};
}

// 8. The two-block array loop: the dispatcher's first value picks the case
// holding the original first block.
Verdict flatten_walkthrough() {
  auto p = frontend::compile(
      "fn main(args: int[]) -> int {\n"
      "  int[] arr = new int[5];\n"
      "  arr[0] = 2; arr[1] = 3; arr[2] = 4; arr[3] = 10; arr[4] = 40;\n"
      "  for (int i = 0; i < len(arr); i = i + 1) { print(arr[i]); }\n"
      "  return 0;\n"
      "}\n");
  const auto& fn = p.functions[0];
  auto flat = transforms::flatten_function(fn, 2);
  const auto& entry = flat.block(flat.entry);
  const auto& header = flat.blocks.at(1);
  bool structural = entry.instrs.size() == 1 && entry.instrs[0].op == ir::Opcode::Const &&
                    entry.term.op == ir::Opcode::Jump && entry.term.targets[0] == header.id &&
                    header.term.op == ir::Opcode::Switch && entry.instrs[0].dst == header.term.args[0];
  ir::BlockId selected = 0;
  if (structural) {
    const auto& keys = header.term.imms;
    auto it = std::find(keys.begin(), keys.end(), entry.instrs[0].imm);
    structural = it != keys.end();
    if (structural) selected = header.term.targets[static_cast<std::size_t>(it - keys.begin())];
    structural = structural && selected == fn.entry;
  }
  auto q = with_function(p, flat);
  std::vector<interp::BlockVisit> trace;
  interp::RunOptions opts;
  opts.trace = &trace;
  auto r = interp::execute(q, interp::Input{false, {}}, opts);
  bool by_trace = trace.size() >= 3 && trace[0].block == flat.entry && trace[1].block == header.id &&
                  trace[2].block == fn.entry;
  bool same = r.output == interp::run(p, interp::Input{false, {}}).output;
  std::string d = std::string("dispatcher starts at key ") + (entry.instrs.empty() ? "?" : std::to_string(entry.instrs[0].imm)) +
                  " -> block " + std::to_string(selected) + " (original entry " + std::to_string(fn.entry) + "); " +
                  "structural " + (structural ? "ok" : "bad") + ", trace " + (by_trace ? "ok" : "bad") + ", output " +
                  (same ? "same" : "differs");
  return {structural && by_trace && same, d};
}

// 9. End to end through the command line.
Verdict end_to_end() {
  auto dir = fs::temp_directory_path() / "cfo_acceptance";
  fs::create_directories(dir);
  std::string src = std::string(CFO_CORPUS_DIR) + "/binary_search.mini";
  auto once = [&](const std::string& tag) {
    auto rep = dir / ("report" + tag + ".json");
    auto art = dir / ("artifact" + tag + ".ir");
    auto r = invoke({"obfuscate", src, "--level", "aggressive", "--seed", "7", "--report", rep.string(), "-o",
                     art.string()});
    return std::tuple{r.code, slurp(rep), slurp(art)};
  };
  auto [c1, r1, a1] = once("1");
  auto [c2, r2, a2] = once("2");
  std::string status = "?";
  try {
    status = harness::to_string(cli::report_from_json(r1).diff.status);
  } catch (const std::exception&) {
  }
  bool ok = c1 == 0 && c2 == 0 && status == "equal" && r1 == r2 && a1 == a2 && !a1.empty();
  return {ok, "exit " + std::to_string(c1) + "/" + std::to_string(c2) + ", diff " + status + ", artifacts " +
                  (a1 == a2 ? "identical" : "differ") + ", reports " + (r1 == r2 ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"catalog fidelity", catalog_fidelity},
      {"semantic preservation sweep", semantic_sweep},
      {"opaque predicate soundness", opaque_soundness},
      {"dead code never executes", dead_code_never_runs},
      {"decompiler-resistance proxies", dr_proxies},
      {"method reordering variants", method_orderings},
      {"potency monotonicity", potency},
      {"flattening shape on the array loop", flatten_walkthrough},
      {"end-to-end obfuscate", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
