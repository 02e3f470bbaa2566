#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"

#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/ir/verify.hpp"
#include "cfo/transforms/transforms.hpp"
#include "support.hpp"

using namespace cfo;
using namespace cfo::harness;
using frontend::NodeKind;

namespace {

bool is_control(NodeKind k) {
  return k == NodeKind::If || k == NodeKind::While || k == NodeKind::For || k == NodeKind::Switch ||
         k == NodeKind::TryCatch;
}

// Deepest chain of nested control statements.
int nesting(const frontend::Node& n) {
  int inner = 0;
  for (const auto& c : n.children) inner = std::max(inner, nesting(c));
  return inner + (is_control(n.kind) ? 1 : 0);
}

std::size_t count_kind(const frontend::Node& n, NodeKind k) {
  std::size_t total = n.kind == k ? 1 : 0;
  for (const auto& c : n.children) total += count_kind(c, k);
  return total;
}

int loop_depth(const frontend::Node& n) {
  int inner = 0;
  for (const auto& c : n.children) inner = std::max(inner, loop_depth(c));
  return inner + (n.kind == NodeKind::While || n.kind == NodeKind::For ? 1 : 0);
}

}  // namespace

TEST_CASE("generator respects a single-feature mask") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.features = {Feature::If};
    auto unit = gen_program(cfg);
    CAPTURE(unit.text);
    CHECK(count_kind(unit.ast, NodeKind::If) >= 1);
    CHECK(count_kind(unit.ast, NodeKind::While) == 0);
    CHECK(count_kind(unit.ast, NodeKind::For) == 0);
    CHECK(count_kind(unit.ast, NodeKind::Switch) == 0);
    CHECK(count_kind(unit.ast, NodeKind::TryCatch) == 0);
    CHECK(unit.ast.children.size() == 1);
  }
}

TEST_CASE("every single-feature mask admits only its own control statements") {
  const std::map<Feature, std::set<NodeKind>> allowed = {
      {Feature::If, {NodeKind::If}},         {Feature::IfElse, {NodeKind::If}},
      {Feature::While, {NodeKind::While}},   {Feature::For, {NodeKind::For}},
      {Feature::Switch, {NodeKind::Switch}}, {Feature::TryCatch, {NodeKind::TryCatch}},
      {Feature::NestedConditionals, {}},     {Feature::Arrays, {}},
      {Feature::MultiFunction, {}},          {Feature::ReadsInput, {NodeKind::If}}};
  // Reading a possibly null input needs guards, and MiniLang has no conditional
  // expression, so input reads come with their own if statements.
  for (auto f : all_features()) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      GenConfig cfg;
      cfg.seed = seed;
      cfg.features = {f};
      auto unit = gen_program(cfg);
      CAPTURE(to_string(f));
      CAPTURE(unit.text);
      for (auto k : {NodeKind::If, NodeKind::While, NodeKind::For, NodeKind::Switch, NodeKind::TryCatch})
        if (!allowed.at(f).count(k)) CHECK(count_kind(unit.ast, k) == 0);
      for (auto k : allowed.at(f)) CHECK(count_kind(unit.ast, k) >= 1);
    }
  }
}

TEST_CASE("generated nesting stays within three levels") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.features = {Feature::While, Feature::TryCatch, Feature::NestedConditionals};
    cfg.max_loop_depth = 9;
    auto unit = gen_program(cfg);
    CAPTURE(unit.text);
    CHECK(nesting(unit.ast) <= 3);
    CHECK(loop_depth(unit.ast) <= 3);
    CHECK(count_kind(unit.ast, NodeKind::For) == 0);
  }
}

TEST_CASE("generation is deterministic and terminates on standard inputs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    auto a = gen_program(cfg);
    auto b = gen_program(cfg);
    CHECK(a.text == b.text);
    auto p = frontend::lower(a.ast);
    CHECK(ir::verify(p).empty());
    for (const auto& in : standard_inputs(8, seed)) {
      auto r = interp::run(p, in);
      CHECK(r.outcome != interp::Outcome::FuelExhausted);
    }
  }
  GenConfig x, y;
  x.seed = 1;
  y.seed = 2;
  CHECK(gen_program(x).text != gen_program(y).text);
}

TEST_CASE("feature names round trip") {
  for (auto f : all_features()) CHECK(parse_feature(to_string(f)) == f);
  CHECK_FALSE(parse_feature("goto"));
}

TEST_CASE("standard inputs start with the degenerate cases") {
  auto in = standard_inputs(20, 3);
  REQUIRE(in.size() == 20);
  CHECK(in[0].null);
  CHECK_FALSE(in[1].null);
  CHECK(in[1].values.empty());
  CHECK(in[2].values.size() == 1);
  CHECK(in[3].values == std::vector<std::int64_t>{std::numeric_limits<std::int64_t>::min(),
                                                  std::numeric_limits<std::int64_t>::max()});
  CHECK(standard_inputs(20, 3) == in);
  CHECK(standard_inputs(20, 4) != in);
}

TEST_CASE("a program equals itself") {
  for (const auto& c : support::corpus()) {
    auto v = differential_test(c.program, c.program, 20, 0);
    CHECK(v.status == DiffStatus::Equal);
    CHECK(v.compared + v.skipped == 20);
    CHECK_FALSE(v.first_divergence);
  }
}

TEST_CASE("a planted constant change is reported with its first divergence") {
  const auto& c = support::corpus_program("straight_line");
  auto bad = c.program;
  auto& instrs = bad.functions[0].blocks[0].instrs;
  auto it = std::find_if(instrs.begin(), instrs.end(), [](const ir::Instruction& in) {
    return in.op == ir::Opcode::Const && in.imm == 7;
  });
  REQUIRE(it != instrs.end());
  it->imm = 8;
  auto v = differential_test(c.program, bad, 20, 0);
  CHECK(v.status == DiffStatus::Mismatch);
  REQUIRE(v.first_divergence);
  CHECK(v.first_divergence->input_index == 0);
  CHECK(v.first_divergence->expected != v.first_divergence->actual);
  CHECK(describe(v).find("mismatch") != std::string::npos);
}

TEST_CASE("a diverging trap kind is a mismatch") {
  auto a = frontend::compile("fn main(args: int[]) -> int { return 10 / len(args); }");
  auto b = frontend::compile("fn main(args: int[]) -> int { return args[len(args)]; }");
  auto v = differential_test(a, b, std::vector<interp::Input>{{false, {}}});
  CHECK(v.status == DiffStatus::Mismatch);
}

TEST_CASE("coverage check flags a reachable dead instruction") {
  auto p = frontend::compile("fn main(args: int[]) -> int { int a = 1; print(a); return a; }");
  auto inputs = standard_inputs(3, 0);
  auto ok = dead_code_coverage_check(p, inputs);
  CHECK(ok.clean);
  CHECK(ok.dead_instructions == 0);
  p.functions[0].blocks[0].instrs[0].tag = ir::Tag::Dead;
  auto bad = dead_code_coverage_check(p, inputs);
  CHECK_FALSE(bad.clean);
  CHECK(bad.dead_instructions == 1);
  REQUIRE(bad.executed.size() == 1);
  CHECK(bad.executed[0].function == "main");
  CHECK(bad.executed[0].index == 0);
  CHECK(bad.executed[0].count == 3);
}

TEST_CASE("dead code variants stay unexecuted across the corpus") {
  auto inputs = standard_inputs(20, 2);
  for (const char* variant : {"", "buggy_code", "dead_switch"}) {
    std::size_t planted = 0;
    for (const auto& c : support::corpus()) {
      transforms::PassConfig cfg;
      cfg.seed = 5;
      cfg.variant = variant;
      auto r = transforms::apply_pass(transforms::PassId::DeadCodeInsertion, c.program, cfg);
      auto cov = dead_code_coverage_check(r.program, inputs);
      CAPTURE(variant);
      CAPTURE(c.name);
      CHECK(cov.clean);
      planted += cov.dead_instructions;
    }
    CHECK(planted > 0);
  }
}

TEST_CASE("the corpus holds sixteen programs in name order") {
  const auto& all = support::corpus();
  CHECK(all.size() == 16);
  CHECK(std::is_sorted(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.name < b.name; }));
  for (const auto& c : all) CHECK(c.program.find("main"));
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus"), Error);
}

TEST_CASE("structural proxies") {
  const auto& c = support::corpus_program("binary_search");
  transforms::PassConfig cfg;
  cfg.site_fraction = 1.0;
  auto irr = transforms::apply_pass(transforms::PassId::ReducibleToIrreducible, c.program, cfg).program;
  auto p = dr_proxy(transforms::PassId::ReducibleToIrreducible, c.program, irr);
  CHECK(p.proxy == "irreducible_cfg");
  CHECK(p.triggered);
  CHECK_FALSE(dr_proxy(transforms::PassId::ReducibleToIrreducible, c.program, c.program).triggered);

  auto dead = transforms::apply_pass(transforms::PassId::DeadCodeInsertion, c.program, cfg).program;
  auto u = dr_proxy(transforms::PassId::DeadCodeInsertion, c.program, dead);
  CHECK(u.proxy == "reducibility_unchanged");
  CHECK(u.triggered);
  CHECK_FALSE(dr_proxy(transforms::PassId::DeadCodeInsertion, c.program, irr).triggered);

  auto vm = transforms::apply_pass(transforms::PassId::TableInterpretation, c.program, cfg).program;
  auto t = dr_proxy(transforms::PassId::TableInterpretation, c.program, vm);
  CHECK(t.proxy == "single_dispatch_loop");
  CHECK(t.triggered);

  const auto& nt = support::corpus_program("nested_try_catch");
  auto pts = transforms::apply_pass(transforms::PassId::PartiallyTrappingSwitch, nt.program, cfg).program;
  auto s = dr_proxy(transforms::PassId::PartiallyTrappingSwitch, nt.program, pts);
  CHECK(s.proxy == "unaligned_trap_range");
  CHECK(s.triggered);
  bool before = false;
  for (const auto& f : nt.program.functions) before |= has_unaligned_trap(f);
  CHECK_FALSE(before);
}

TEST_CASE("single dispatch loop recognizer") {
  const auto& c = support::corpus_program("binary_search");
  CHECK_FALSE(is_single_dispatch_loop(*c.program.find("binarySearch")));
  auto flat = transforms::flatten_function(*c.program.find("binarySearch"), 0);
  CHECK(is_single_dispatch_loop(flat));
}
