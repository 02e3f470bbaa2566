#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"

#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/interp/interpreter.hpp"
#include "cfo/ir/analysis.hpp"
#include "cfo/ir/verify.hpp"
#include "cfo/metrics/metrics.hpp"
#include "cfo/transforms/transforms.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cfo;
using namespace cfo::transforms;

namespace {

// The array-printing loop from the flattening walkthrough, with the array
// literal spelled as stores.
const char* kFlattenSnippet =
    "fn main(args: int[]) -> int {\n"
    "  int[] arr = new int[5];\n"
    "  arr[0] = 2; arr[1] = 3; arr[2] = 4; arr[3] = 10; arr[4] = 40;\n"
    "  for (int i = 0; i < len(arr); i = i + 1) { print(arr[i]); }\n"
    "  return 0;\n"
    "}\n";

PassConfig config(std::uint64_t seed = 0, double fraction = 1.0) {
  PassConfig c;
  c.seed = seed;
  c.site_fraction = fraction;
  return c;
}

std::size_t instr_count(const ir::Program& p) {
  std::size_t n = 0;
  for (const auto& f : p.functions)
    for (const auto& b : f.blocks) n += b.instrs.size();
  return n;
}

std::size_t count_op(const ir::Function& f, ir::Opcode op) {
  std::size_t n = 0;
  for (const auto& b : f.blocks)
    for (const auto& in : b.instrs) n += in.op == op;
  return n;
}

bool diff_equal(const ir::Program& a, const ir::Program& b, std::size_t n = 30, std::uint64_t seed = 1) {
  auto v = harness::differential_test(a, b, n, seed);
  if (v.status != harness::DiffStatus::Equal) MESSAGE(harness::describe(v));
  return v.status == harness::DiffStatus::Equal;
}

ErrorCode code_of(PassId pass, const Subject& s, const PassConfig& cfg) {
  try {
    apply_pass(pass, s, cfg);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

Subject subject_of(const harness::CorpusProgram& c) { return Subject{c.ast, c.program}; }

ir::Program replace_function(ir::Program p, const ir::Function& f) {
  for (auto& g : p.functions)
    if (g.name == f.name) g = f;
  return p;
}

std::vector<interp::BlockVisit> trace_of(const ir::Program& p, const interp::Input& in) {
  std::vector<interp::BlockVisit> t;
  interp::RunOptions opts;
  opts.trace = &t;
  interp::execute(p, in, opts);
  return t;
}

}  // namespace

TEST_CASE("registry lists every pass once with round-tripping names") {
  CHECK(all_passes().size() == 37);
  std::set<std::string> names;
  for (auto p : all_passes()) {
    names.insert(to_string(p));
    CHECK(parse_pass_id(to_string(p)) == p);
  }
  CHECK(names.size() == 37);
  CHECK_FALSE(parse_pass_id("not_a_pass"));
}

TEST_CASE("decompiler-resistant passes are the seven marked rows") {
  std::set<std::string> dr;
  for (auto p : all_passes())
    if (is_dr_pass(p)) dr.insert(to_string(p));
  CHECK(dr == std::set<std::string>{"intersecting_loops", "basic_block_fission", "reducible_to_irreducible",
                                    "table_interpretation", "partially_trapping_switch", "indirect_if",
                                    "goto_augmentation"});
}

TEST_CASE("level presets nest") {
  auto light = level_passes(Intensity::Light);
  auto normal = level_passes(Intensity::Normal);
  auto aggressive = level_passes(Intensity::Aggressive);
  CHECK(std::set<PassId>(light.begin(), light.end()) ==
        std::set<PassId>{PassId::ExtendConditionals, PassId::AddRedundantOperands, PassId::ReorderExpressions});
  CHECK(normal.size() == 8);
  CHECK(aggressive.size() == 12);
  for (auto p : light) CHECK(std::count(normal.begin(), normal.end(), p) == 1);
  for (auto p : normal) CHECK(std::count(aggressive.begin(), aggressive.end(), p) == 1);
  for (auto p : {PassId::ControlFlowFlattening, PassId::GotoAugmentation, PassId::ReducibleToIrreducible,
                 PassId::BasicBlockFission})
    CHECK(std::count(aggressive.begin(), aggressive.end(), p) == 1);
  CHECK(parse_intensity("aggressive") == Intensity::Aggressive);
  CHECK_FALSE(parse_intensity("extreme"));
}

TEST_CASE("composition puts source passes first and decompiler-resistant passes last") {
  auto order = composition_order(
      {PassId::ReducibleToIrreducible, PassId::DeadCodeInsertion, PassId::CodeCloneIV, PassId::ControlFlowFlattening});
  CHECK(order == std::vector<PassId>{PassId::CodeCloneIV, PassId::DeadCodeInsertion, PassId::ControlFlowFlattening,
                                     PassId::ReducibleToIrreducible});
}

TEST_CASE("every pass is deterministic in its seed") {
  for (const auto& c : support::corpus()) {
    for (auto pass : all_passes()) {
      CAPTURE(c.name);
      CAPTURE(to_string(pass));
      auto cfg = config(17, 0.5);
      TransformResult a, b;
      try {
        a = apply_pass(pass, subject_of(c), cfg);
      } catch (const Error&) {
        continue;
      }
      b = apply_pass(pass, subject_of(c), cfg);
      CHECK(a.program == b.program);
      CHECK(a.sites == b.sites);
      CHECK(a.ast == b.ast);
    }
  }
}

TEST_CASE("invalid parameters are rejected") {
  auto s = subject_of(support::corpus_program("for_loops"));
  auto cfg = config();
  cfg.params["unroll_factor"] = 1;
  CHECK(code_of(PassId::LoopUnrolling, s, cfg) == ErrorCode::InvalidParam);
  CHECK(code_of(PassId::DeadCodeInsertion, s, config(0, 1.5)) == ErrorCode::InvalidParam);
  auto v = config();
  v.variant = "nonsense";
  CHECK(code_of(PassId::DeadCodeInsertion, s, v) == ErrorCode::InvalidParam);
  CHECK(code_of(PassId::ControlFlowFlattening, s, v) == ErrorCode::InvalidParam);
}

TEST_CASE("source passes need the source tree") {
  const auto& c = support::corpus_program("for_loops");
  CHECK(code_of(PassId::CodeCloneIV, Subject{std::nullopt, c.program}, config()) == ErrorCode::RequiresSource);
  CHECK(code_of(PassId::ReplaceEquivalentCodes, Subject{std::nullopt, c.program}, config()) ==
        ErrorCode::RequiresSource);
}

TEST_CASE("loop passes find nothing in straight-line code") {
  auto s = subject_of(support::corpus_program("straight_line"));
  for (auto p : {PassId::LoopFission, PassId::LoopBlocking, PassId::LoopUnrolling, PassId::ReorderLoops})
    CHECK(code_of(p, s, config()) == ErrorCode::NoEligibleSites);
}

TEST_CASE("outlining three arithmetic instructions") {
  auto p = frontend::compile(
      "fn f(a: int, b: int) -> int { return (a + b) * (a - b); }\n"
      "fn main(args: int[]) -> int { return f(args[0], args[1]); }");
  const auto& fn = *p.find("f");
  REQUIRE(fn.blocks.size() == 1);
  const auto& b = fn.blocks[0];
  REQUIRE(b.instrs.size() == 3);
  // Upward-exposed inputs of the region, computed here.
  std::set<ir::Reg> defined, inputs;
  for (const auto& in : b.instrs) {
    for (auto a : in.args)
      if (!defined.count(a)) inputs.insert(a);
    if (in.dst) defined.insert(*in.dst);
  }
  CHECK(inputs.size() == 2);
  auto out = outline_region(p, "f", b.id, 0, 3, 0);
  CHECK(ir::verify(out).empty());
  const auto* part = out.find("f_part");
  REQUIRE(part);
  REQUIRE(part->blocks.size() == 1);
  CHECK(part->blocks[0].instrs.size() == 3);
  CHECK(part->blocks[0].term.op == ir::Opcode::Return);
  const auto& site = out.find("f")->blocks[0];
  REQUIRE(site.instrs.size() == 1);
  CHECK(site.instrs[0].op == ir::Opcode::Call);
  CHECK(site.instrs[0].text == "f_part");
  CHECK(site.instrs[0].args.size() == inputs.size());
  CHECK(diff_equal(p, out));

  // Inlining the new call gives the original behaviour back.
  auto back = apply_pass(PassId::InlineMethod, out, config());
  CHECK(diff_equal(p, back.program));
}

TEST_CASE("outline_region error cases") {
  const auto& c = support::corpus_program("binary_search");
  const auto& fn = *c.program.find("binarySearch");
  const ir::BasicBlock* branchy = nullptr;
  for (const auto& b : fn.blocks)
    if (b.term.op == ir::Opcode::Branch && !b.instrs.empty()) branchy = &b;
  REQUIRE(branchy);
  auto code = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  CHECK(code([&] { outline_region(c.program, fn.name, branchy->id, 0, branchy->instrs.size() + 1, 0); }) ==
        ErrorCode::RegionContainsTerminator);
  CHECK(code([&] { outline_region(c.program, fn.name, branchy->id, 1, 1, 0); }) == ErrorCode::EmptyRegion);

  auto t = frontend::compile(
      "fn main(args: int[]) -> int { int v = 1; int w = 2; try { v = 10 / len(args); } catch (e) { v = -1; }"
      " return v + w; }");
  auto& tf = t.functions[0];
  REQUIRE_FALSE(tf.traps.empty());
  // Narrow a trap to the middle of a block so any region straddling it crosses.
  auto& entry = tf.traps[0];
  const auto& covered = tf.block(entry.block);
  REQUIRE(covered.instrs.size() >= 2);
  entry.start = 1;
  entry.end = static_cast<std::uint32_t>(covered.instrs.size());
  CHECK(code([&] { outline_region(t, "main", entry.block, 0, 2, 0); }) == ErrorCode::RegionCrossesTrap);

  // Inside a try, a region that writes and then may fault would lose the
  // write on the way to the handler.
  auto w = frontend::compile(
      "fn main(args: int[]) -> int { int x = 1; try { x = len(args) + 5; print(10 / len(args)); } catch (e) { }"
      " return x; }");
  const auto& wf = w.functions[0];
  bool found = false;
  for (const auto& tr : wf.traps) {
    const auto& ins = wf.block(tr.block).instrs;
    for (std::size_t i = tr.start; i < ins.size() && !found; ++i) {
      if (!ins[i].dst) continue;
      for (std::size_t j = i + 1; j < ins.size() && j < tr.end && !found; ++j)
        if (ir::may_trap(ins[j])) {
          found = true;
          CHECK(code([&] { outline_region(w, "main", tr.block, i, j + 1, 0); }) == ErrorCode::IneligibleSite);
        }
    }
  }
  CHECK(found);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = apply_pass(PassId::OutlineMethod, w, config(seed));
    CHECK(diff_equal(w, r.program));
  }
}

TEST_CASE("interleaving two functions with one signature") {
  const auto& c = support::corpus_program("multi_function");
  auto out = interleave_functions("square", "cube", c.program);
  CHECK(ir::verify(out).empty());
  const auto* merged = out.find("square_cube");
  REQUIRE(merged);
  CHECK(merged->params.size() == 2);
  CHECK(merged->regs[merged->params[0]] == ir::Type::Int);
  CHECK_FALSE(out.find("square"));
  CHECK_FALSE(out.find("cube"));
  std::size_t rewritten = 0;
  for (const auto& f : out.functions)
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs)
        if (in.op == ir::Opcode::Call && in.text == "square_cube") ++rewritten;
  std::size_t before = 0;
  for (const auto& f : c.program.functions)
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs)
        if (in.op == ir::Opcode::Call && (in.text == "square" || in.text == "cube")) ++before;
  CHECK(rewritten == before);
  CHECK(diff_equal(c.program, out));
}

TEST_CASE("interleave_functions error cases") {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  const auto& m = support::corpus_program("multi_function").program;
  CHECK(code([&] { interleave_functions("square", "square", m); }) == ErrorCode::SelfInterleave);
  const auto& b = support::corpus_program("binary_search").program;
  CHECK(code([&] { interleave_functions("binarySearch", "printResult", b); }) == ErrorCode::SignatureMismatch);
}

TEST_CASE("virtualizing an add function") {
  auto p = frontend::compile(
      "fn add(a: int, b: int) -> int { return a + b; }\n"
      "fn main(args: int[]) -> int { return add(args[0], args[1]); }");
  auto vm = virtualize_function(*p.find("add"), 4);
  auto q = replace_function(p, vm);
  REQUIRE(ir::verify(q).empty());
  bool table = false;
  for (const auto& b : vm.blocks)
    for (const auto& in : b.instrs)
      if (in.op == ir::Opcode::ArrayLit && in.imms.size() >= 3) table = true;
  CHECK(table);
  CHECK(harness::is_single_dispatch_loop(vm));
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    auto a = static_cast<std::int64_t>(rng()), b = static_cast<std::int64_t>(rng());
    if (i % 2) {
      a %= 1000;
      b %= 1000;
    }
    auto r = interp::run(q, interp::Input{false, {a, b}});
    REQUIRE(r.outcome == interp::Outcome::Returned);
    CHECK(r.value == static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b)));
  }
}

TEST_CASE("virtualization refuses calls") {
  const auto& p = support::corpus_program("multi_function").program;
  try {
    virtualize_function(*p.find("main"), 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedFeature);
  }
}

TEST_CASE("virtualized loop keeps outputs and stays within a constant step factor") {
  auto p = frontend::compile(
      "fn sum(n: int) -> int { int s = 0; for (int i = 0; i < n; i = i + 1) { s = s + i * i; } return s; }\n"
      "fn main(args: int[]) -> int { if (args == null) { return 0; } if (len(args) == 0) { return 0; }"
      " return sum(args[0] % 200); }");
  auto q = replace_function(p, virtualize_function(*p.find("sum"), 1));
  for (std::int64_t n : {0, 1, 5, 50, 199}) {
    auto a = interp::run(p, interp::Input{false, {n}});
    auto b = interp::run(q, interp::Input{false, {n}});
    CHECK(a.value == b.value);
    CHECK(a.output == b.output);
    CHECK(b.steps <= 30 * a.steps);
  }
}

TEST_CASE("opaque guards around a branch and an operand") {
  auto p = frontend::compile(
      "fn main(args: int[]) -> int { int m = len(args); if (m == 3) { return m + 1; } return 0; }");
  const auto& fn = *p.find("main");
  const auto& b0 = fn.block(fn.entry);
  REQUIRE(b0.term.op == ir::Opcode::Branch);

  auto ext = insert_opaque_guard(fn, GuardSite{b0.id, 0}, opaque::Truth::AlwaysFalse, PayloadKind::ExtendConditional, 3);
  const auto& e0 = ext.block(b0.id);
  ir::Reg cond = e0.term.args[0];
  CHECK(cond != b0.term.args[0]);
  // cond = orig And (Not p)
  const ir::Instruction* conj = nullptr;
  const ir::Instruction* neg = nullptr;
  for (const auto& in : e0.instrs) {
    if (in.dst == cond) conj = &in;
  }
  REQUIRE(conj);
  CHECK(conj->op == ir::Opcode::Binary);
  CHECK(conj->bin == ir::BinOp::And);
  CHECK(conj->args[0] == b0.term.args[0]);
  for (const auto& in : e0.instrs)
    if (in.dst == conj->args[1]) neg = &in;
  REQUIRE(neg);
  CHECK(neg->op == ir::Opcode::Unary);
  CHECK(neg->un == ir::UnOp::Not);
  auto q = replace_function(p, ext);
  CHECK(diff_equal(p, q));

  // m + 1 gains a multiplicative 1 or an additive 0.
  const ir::BasicBlock* ret = nullptr;
  std::size_t idx = 0;
  for (const auto& b : fn.blocks)
    for (std::size_t i = 0; i < b.instrs.size(); ++i)
      if (b.instrs[i].op == ir::Opcode::Binary && b.instrs[i].bin == ir::BinOp::Add && b.term.op == ir::Opcode::Return) {
        ret = &b;
        idx = i;
      }
  REQUIRE(ret);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto red = insert_opaque_guard(fn, GuardSite{ret->id, idx}, opaque::Truth::AlwaysTrue, PayloadKind::RedundantOperand, seed);
    const auto& rb = red.block(ret->id);
    ir::Reg dst = *ret->instrs[idx].dst;
    const ir::Instruction* last = nullptr;
    for (const auto& in : rb.instrs)
      if (in.dst == dst) last = &in;
    REQUIRE(last);
    CHECK(last->op == ir::Opcode::Binary);
    CHECK((last->bin == ir::BinOp::Mul || last->bin == ir::BinOp::Add));
    CHECK(last->tag == ir::Tag::Opaque);
    CHECK(diff_equal(p, replace_function(p, red)));
  }
}

TEST_CASE("flattening keeps every original instruction in exactly one case") {
  for (const auto& c : support::corpus()) {
    for (const auto& fn : c.program.functions) {
      CAPTURE(c.name);
      CAPTURE(fn.name);
      bool aligned = std::all_of(fn.traps.begin(), fn.traps.end(), [&](const ir::TrapEntry& t) {
        return t.start == 0 && t.end == fn.block(t.block).instrs.size() + 1;
      });
      if (!aligned) continue;
      auto flat = flatten_function(fn, 5);
      const auto& header = flat.blocks.at(1);
      REQUIRE(header.term.op == ir::Opcode::Switch);
      ir::Reg d = header.term.args[0];
      std::set<ir::BlockId> handlers;
      for (const auto& t : fn.traps) handlers.insert(t.handler);
      std::map<ir::BlockId, int> as_case;
      for (std::size_t i = 0; i + 1 < header.term.targets.size(); ++i) ++as_case[header.term.targets[i]];
      for (const auto& b : fn.blocks) {
        const auto& nb = flat.block(b.id);
        REQUIRE(nb.instrs.size() >= b.instrs.size());
        CHECK(std::equal(b.instrs.begin(), b.instrs.end(), nb.instrs.begin()));
        if (!handlers.count(b.id)) CHECK(as_case[b.id] == 1);
        bool leaves = b.term.op == ir::Opcode::Return || b.term.op == ir::Opcode::Throw;
        std::size_t writes = 0;
        for (const auto& in : nb.instrs) writes += in.dst == d;
        CHECK(writes == (leaves ? 0u : 1u));
      }
      CHECK(metrics::is_reducible(flat));
      CHECK(oracle::t1t2_reducible(ir::to_digraph(flat, true)));
    }
  }
}

TEST_CASE("a single-block function is still wrapped in the dispatcher") {
  auto p = frontend::compile("fn main(args: int[]) -> int { int a = 2; print(a); return a; }");
  auto flat = flatten_function(p.functions[0], 0);
  CHECK(flat.blocks.size() == 4);
  CHECK(flat.blocks[1].term.op == ir::Opcode::Switch);
  CHECK(diff_equal(p, replace_function(p, flat)));
}

TEST_CASE("flattened array loop starts in the case holding the first block") {
  auto p = frontend::compile(kFlattenSnippet);
  const auto& fn = p.functions[0];
  auto flat = flatten_function(fn, 11);
  const auto& entry = flat.block(flat.entry);
  REQUIRE(entry.instrs.size() == 1);
  const auto& seed = entry.instrs[0];
  CHECK(seed.op == ir::Opcode::Const);
  const auto& header = flat.blocks.at(1);
  CHECK(entry.term.targets.at(0) == header.id);
  CHECK(*seed.dst == header.term.args[0]);
  const auto& keys = header.term.imms;
  auto at = std::find(keys.begin(), keys.end(), seed.imm);
  REQUIRE(at != keys.end());
  CHECK(header.term.targets[static_cast<std::size_t>(at - keys.begin())] == fn.entry);

  auto q = replace_function(p, flat);
  auto t = trace_of(q, interp::Input{false, {}});
  REQUIRE(t.size() >= 3);
  CHECK(t[0].block == flat.entry);
  CHECK(t[1].block == header.id);
  CHECK(t[2].block == fn.entry);
  auto a = interp::run(p, interp::Input{false, {}});
  CHECK(a.output == std::vector<std::string>{"2", "3", "4", "10", "40"});
  CHECK(interp::run(q, interp::Input{false, {}}) .output == a.output);
}

TEST_CASE("flattening refuses partial trap ranges") {
  auto p = frontend::compile(
      "fn main(args: int[]) -> int { int v = 1; try { v = 10 / len(args); } catch (e) { v = -1; } return v; }");
  auto& fn = p.functions[0];
  REQUIRE_FALSE(fn.traps.empty());
  fn.traps[0].end = 1;
  if (fn.block(fn.traps[0].block).instrs.empty()) return;
  try {
    flatten_function(fn, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedTraps);
  }
}

TEST_CASE("make_irreducible on straight-line and loop functions") {
  for (const char* name : {"straight_line", "while_loops"}) {
    const auto& c = support::corpus_program(name);
    auto q = c.program;
    auto& main = *q.find("main");
    main = make_irreducible(main, 2);
    CAPTURE(name);
    CHECK(ir::verify(q).empty());
    CHECK_FALSE(metrics::is_reducible(main));
    CHECK_FALSE(oracle::t1t2_reducible(ir::to_digraph(main, true)));
    CHECK(diff_equal(c.program, q));
  }
}

TEST_CASE("statement reordering only emits topological orders") {
  const auto& c = support::corpus_program("straight_line");
  const auto& block = c.program.functions[0].blocks[0];
  auto g = ir::def_use(block);
  bool moved = false;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto out = apply_pass(PassId::ReorderStatements, c.program, config(seed)).program;
    const auto& nb = out.functions[0].blocks[0];
    REQUIRE(nb.instrs.size() == block.instrs.size());
    REQUIRE(std::is_permutation(block.instrs.begin(), block.instrs.end(), nb.instrs.begin()));
    std::vector<std::size_t> pos(block.instrs.size());
    for (std::size_t i = 0; i < block.instrs.size(); ++i)
      pos[i] = static_cast<std::size_t>(std::find(nb.instrs.begin(), nb.instrs.end(), block.instrs[i]) - nb.instrs.begin());
    for (auto [i, j] : g.edges) CHECK(pos[i] < pos[j]);
    if (nb.instrs != block.instrs) moved = true;
    CHECK(diff_equal(c.program, out, 5));
  }
  CHECK(moved);
}

TEST_CASE("branch inversion leaves the block trace unchanged") {
  const auto& c = support::corpus_program("binary_search");
  auto cfg = config(4);
  cfg.variant = "branch_inversion";
  auto r = apply_pass(PassId::ReorderExpressions, c.program, cfg);
  CHECK_FALSE(r.sites.empty());
  for (const auto& in : harness::standard_inputs(10, 3)) CHECK(trace_of(c.program, in) == trace_of(r.program, in));
}

TEST_CASE("insertion passes add instructions") {
  for (const auto& c : support::corpus())
    for (auto pass : all_passes()) {
      if (!is_insertion_pass(pass)) continue;
      CAPTURE(c.name);
      CAPTURE(to_string(pass));
      try {
        auto r = apply_pass(pass, subject_of(c), config(2));
        CHECK(instr_count(r.program) > instr_count(c.program));
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoEligibleSites);
      }
    }
}

TEST_CASE("guard_to_trap replaces the null check with a trap entry") {
  const auto& c = support::corpus_program("binary_search");
  auto r = apply_pass(PassId::GuardToTrap, c.program, config());
  const auto& before = *c.program.find("main");
  const auto& after = *r.program.find("main");
  CHECK(after.traps.size() > before.traps.size());
  auto compares = [](const ir::Function& f) {
    std::size_t n = 0;
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs)
        n += in.op == ir::Opcode::Binary && (in.bin == ir::BinOp::Eq || in.bin == ir::BinOp::Ne);
    return n;
  };
  CHECK(compares(after) < compares(before));
  std::vector<interp::Input> inputs = harness::standard_inputs(30, 5);
  REQUIRE(inputs[0].null);
  CHECK(harness::differential_test(c.program, r.program, inputs).status == harness::DiffStatus::Equal);
}

TEST_CASE("boolean splitting retires the original registers") {
  const auto& c = support::corpus_program("binary_search");
  auto r = apply_pass(PassId::BooleanSplitter, c.program, config());
  for (const auto& fn : c.program.functions) {
    const auto& nf = *r.program.find(fn.name);
    for (ir::Reg x = 0; x < fn.regs.size(); ++x) {
      if (fn.regs[x] != ir::Type::Bool) continue;
      if (std::count(fn.params.begin(), fn.params.end(), x)) continue;
      for (const auto& b : nf.blocks) {
        for (const auto& in : b.instrs) CHECK(std::count(in.args.begin(), in.args.end(), x) == 0);
        CHECK(std::count(b.term.args.begin(), b.term.args.end(), x) == 0);
      }
    }
  }
  CHECK(diff_equal(c.program, r.program));
}

TEST_CASE("library idioms and API calls go through wrappers") {
  const auto& c = support::corpus_program("straight_line");
  for (auto [pass, prefix] : {std::pair{PassId::RemoveLibraryIdioms, "lib_"}, std::pair{PassId::ApiBufferMethods, "buf_"}}) {
    CAPTURE(prefix);
    auto r = apply_pass(pass, c.program, config());
    std::size_t wrappers = 0;
    for (const auto& f : r.program.functions) wrappers += f.name.rfind(prefix, 0) == 0;
    CHECK(wrappers >= 1);
    const auto& main = *r.program.find("main");
    CHECK(count_op(main, ir::Opcode::Call) > 0);
    CHECK(interp::run(r.program, interp::Input{false, {}}).output ==
          interp::run(c.program, interp::Input{false, {}}).output);
    CHECK(diff_equal(c.program, r.program));
  }
}

TEST_CASE("duplicate sequences are shared, not copied") {
  const auto& c = support::corpus_program("duplicate_code");
  auto r = apply_pass(PassId::DuplicateSequenceReuse, c.program, config());
  CHECK(instr_count(r.program) <= instr_count(c.program));
  CHECK(diff_equal(c.program, r.program));
}

TEST_CASE("source-level passes rewrite the tree and keep behaviour") {
  for (auto pass : {PassId::CodeCloneIV, PassId::ReplaceEquivalentCodes}) {
    for (const auto& c : support::corpus()) {
      CAPTURE(to_string(pass));
      CAPTURE(c.name);
      TransformResult r;
      try {
        r = apply_pass(pass, subject_of(c), config(3));
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoEligibleSites);
        continue;
      }
      REQUIRE(r.ast);
      CHECK(*r.ast != c.ast);
      CHECK(frontend::lower(*r.ast) == r.program);
      CHECK(diff_equal(c.program, r.program, 20));
    }
  }
}

TEST_CASE("method reordering reaches every permutation of three functions") {
  auto p = frontend::compile(
      "fn a() -> int { return 1; }\nfn b() -> int { return 2; }\n"
      "fn main(args: int[]) -> int { return a() + b(); }");
  std::set<std::vector<std::string>> orders;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto r = apply_pass(PassId::MethodReordering, p, config(seed));
    std::vector<std::string> names;
    for (const auto& f : r.program.functions) names.push_back(f.name);
    orders.insert(names);
  }
  CHECK(orders.size() == 6);
}

TEST_CASE("unrolling by three replicates the loop body") {
  auto p = frontend::compile(kFlattenSnippet);
  auto cfg = config();
  cfg.params["unroll_factor"] = 3;
  auto r = apply_pass(PassId::LoopUnrolling, p, cfg);
  auto prints = [](const ir::Function& f) {
    std::size_t n = 0;
    for (const auto& b : f.blocks)
      for (const auto& in : b.instrs) n += in.op == ir::Opcode::Intrinsic && in.intrinsic == ir::IntrinsicFn::Print;
    return n;
  };
  CHECK(prints(p.functions[0]) == 1);
  CHECK(prints(r.program.functions[0]) == 3);
  CHECK(diff_equal(p, r.program));
}

TEST_CASE("dead code on binary search is never executed") {
  const auto& c = support::corpus_program("binary_search");
  auto r = apply_pass(PassId::DeadCodeInsertion, c.program, config(1, 0.0));
  CHECK(instr_count(r.program) > instr_count(c.program));
  auto inputs = harness::standard_inputs(100, 9);
  CHECK(harness::differential_test(c.program, r.program, inputs).status == harness::DiffStatus::Equal);
  auto cov = harness::dead_code_coverage_check(r.program, inputs);
  CHECK(cov.dead_instructions > 0);
  CHECK(cov.clean);
  CHECK(cov.executed.empty());
}

TEST_CASE("decompiler-resistant passes leave their structural mark") {
  for (const auto& c : support::corpus()) {
    for (auto pass : all_passes()) {
      if (!is_dr_pass(pass)) continue;
      TransformResult r;
      try {
        r = apply_pass(pass, subject_of(c), config(6));
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoEligibleSites);
        continue;
      }
      CAPTURE(c.name);
      CAPTURE(to_string(pass));
      bool irreducible = false, unaligned = false, dispatch = false;
      for (const auto& f : r.program.functions) {
        irreducible |= !metrics::is_reducible(f);
        unaligned |= harness::has_unaligned_trap(f);
        dispatch |= harness::is_single_dispatch_loop(f);
      }
      if (pass == PassId::PartiallyTrappingSwitch) CHECK(unaligned);
      else if (pass == PassId::TableInterpretation) CHECK(dispatch);
      else CHECK(irreducible);
      CHECK(diff_equal(c.program, r.program, 10));
    }
  }
}

TEST_CASE("pipelines record steps and skip passes without sites") {
  const auto& c = support::corpus_program("straight_line");
  auto cfg = config(7);
  auto res = run_pipeline(subject_of(c), {PassId::LoopUnrolling, PassId::DeadCodeInsertion}, cfg);
  REQUIRE(res.steps.size() == 2);
  CHECK(res.steps[0].pass == PassId::DeadCodeInsertion);
  CHECK(res.steps[0].applied);
  CHECK(res.steps[0].input == c.program);
  CHECK_FALSE(res.steps[1].applied);
  CHECK_FALSE(res.steps[1].skipped_reason.empty());
  CHECK(res.steps[0].seed != res.steps[1].seed);
  CHECK(diff_equal(c.program, res.result.ir));
}
