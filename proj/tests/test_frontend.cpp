#include "doctest.h"

#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/ir/analysis.hpp"
#include "cfo/ir/text.hpp"
#include "cfo/ir/verify.hpp"
#include "support.hpp"

using namespace cfo;
using frontend::NodeKind;

namespace {

const frontend::Node& body_of(const frontend::Node& unit, std::size_t fn) { return unit.children.at(fn).children.at(0); }

}  // namespace

TEST_CASE("split declarations become separate var-decl nodes") {
  auto unit = support::parse_ok(
      "fn f(arr: int[]) -> int {\n  int l = 0; int r = len(arr) - 1;\n  return r - l;\n}\n");
  const auto& body = body_of(unit, 0);
  REQUIRE(body.children.size() == 3);
  CHECK(body.children[0].kind == NodeKind::VarDecl);
  CHECK(body.children[0].name == "l");
  CHECK(body.children[1].kind == NodeKind::VarDecl);
  CHECK(body.children[1].name == "r");
}

TEST_CASE("comma declarations split the same way") {
  auto a = support::parse_ok("fn f(arr: int[]) -> int { int l = 0, r = len(arr) - 1; return r; }");
  auto b = support::parse_ok("fn f(arr: int[]) -> int { int l = 0; int r = len(arr) - 1; return r; }");
  CHECK(a == b);
}

TEST_CASE("identity function parses to a single return") {
  auto unit = support::parse_ok("fn f(x: int) -> int { return x; }");
  REQUIRE(unit.children.size() == 1);
  const auto& fn = unit.children[0];
  CHECK(fn.kind == NodeKind::Function);
  CHECK(fn.name == "f");
  REQUIRE(fn.params.size() == 1);
  CHECK(fn.params[0].type == ir::Type::Int);
  CHECK(fn.type == ir::Type::Int);
  const auto& body = fn.children[0];
  REQUIRE(body.children.size() == 1);
  CHECK(body.children[0].kind == NodeKind::Return);
  CHECK(body.children[0].children[0].kind == NodeKind::VarRef);
  CHECK(body.children[0].children[0].name == "x");
}

TEST_CASE("truncated input is a syntax error at end of input") {
  std::string src = "fn main(args: int[]) -> int { if (";
  auto r = frontend::parse(src);
  CHECK_FALSE(r.ast);
  REQUIRE_FALSE(r.diagnostics.empty());
  CHECK(r.diagnostics[0].span.line == 1);
  CHECK(r.diagnostics[0].span.column == src.size() + 1);
  CHECK(r.diagnostics[0].message.find("end of input") != std::string::npos);
}

TEST_CASE("checker rejects ill-typed and ill-scoped programs") {
  auto fails = [](const char* src) { return !frontend::parse(src).ast; };
  CHECK(fails("fn main(args: int[]) -> int { return true; }"));
  CHECK(fails("fn main(args: int[]) -> int { int x = 0; int x = 1; return x; }"));
  CHECK(fails("fn main(args: int[]) -> int { int x = 0; { int x = 1; } return x; }"));
  CHECK(fails("fn main(args: int[]) -> int { return y; }"));
  CHECK(fails("fn main(args: int[]) -> int { break; return 0; }"));
  CHECK(fails("fn main(args: int[]) -> int { return g(1); }"));
  CHECK(fails("fn f(x: int) -> int { return x; } fn main(args: int[]) -> int { return f(true); }"));
  CHECK(fails("fn f(x: int) -> int { return x; } fn f(y: int) -> int { return y; }"));
  CHECK_FALSE(fails("fn main(args: int[]) -> int { { int x = 1; } { int x = 2; } return 0; }"));
}

TEST_CASE("catch clauses accept every trap kind") {
  auto unit = support::parse_ok(
      "fn main(args: int[]) -> int { int v = 0;\n"
      "  try { v = args[0]; } catch (e: null, index) { v = e; }\n"
      "  try { v = 1 / v; } catch (d: div, user) { v = d; }\n"
      "  return v; }");
  const auto& body = body_of(unit, 0);
  const auto& t1 = body.children[1];
  REQUIRE(t1.kind == NodeKind::TryCatch);
  CHECK(t1.kinds.contains(ir::TrapKind::NullAccess));
  CHECK(t1.kinds.contains(ir::TrapKind::IndexOutOfBounds));
  CHECK_FALSE(t1.kinds.contains(ir::TrapKind::DivByZero));
  const auto& t2 = body.children[2];
  CHECK(t2.kinds.contains(ir::TrapKind::DivByZero));
  CHECK(t2.kinds.contains(ir::TrapKind::User));
  CHECK_FALSE(t2.kinds.contains(ir::TrapKind::NullAccess));
}

TEST_CASE("straight-line body lowers to one block") {
  auto p = frontend::compile("fn main(args: int[]) -> int { int a = 1; int b = 2; int c = 3; return c; }");
  const auto& fn = *p.find("main");
  REQUIRE(fn.blocks.size() == 1);
  CHECK(fn.blocks[0].instrs.size() == 3);
  CHECK(fn.blocks[0].term.op == ir::Opcode::Return);
}

TEST_CASE("the binary search loop has a branching header and a back edge") {
  const auto& prog = support::corpus_program("binary_search").program;
  const auto& fn = *prog.find("binarySearch");
  auto loops = ir::natural_loops(fn);
  REQUIRE(loops.size() == 1);
  const auto& header = fn.block(loops[0].header);
  CHECK(header.term.op == ir::Opcode::Branch);
  REQUIRE(loops[0].back_edges.size() >= 1);
  auto g = ir::to_digraph(fn, false);
  auto idom = ir::immediate_dominators(g);
  for (auto [from, to] : loops[0].back_edges) {
    CHECK(to == loops[0].header);
    CHECK(ir::dominates(idom, fn.block_index(to), fn.block_index(from)));
  }
}

TEST_CASE("try-catch lowers to a trap entry whose handler has no normal predecessor") {
  auto p = frontend::compile(
      "fn main(args: int[]) -> int { int v = 0; try { v = args[0]; } catch (e) { v = -1; } return v; }");
  const auto& fn = *p.find("main");
  REQUIRE_FALSE(fn.traps.empty());
  auto preds = ir::predecessor_map(fn);
  for (const auto& t : fn.traps) {
    CHECK(preds[t.handler].empty());
    CHECK(fn.block(t.handler).instrs.at(0).op == ir::Opcode::Catch);
  }
  auto with = ir::reachable(ir::to_digraph(fn, true));
  auto without = ir::reachable(ir::to_digraph(fn, false));
  CHECK(with[fn.block_index(fn.traps[0].handler)]);
  CHECK_FALSE(without[fn.block_index(fn.traps[0].handler)]);
}

TEST_CASE("switch lowering has one target per case plus the default") {
  auto p = frontend::compile(
      "fn main(args: int[]) -> int { int s = len(args); int r = 0;\n"
      "  switch (s) { case 1: { r = 10; } case 2: { r = 20; } default: { r = 5; } }\n"
      "  return r; }");
  const auto& fn = *p.find("main");
  int switches = 0;
  for (const auto& b : fn.blocks)
    if (b.term.op == ir::Opcode::Switch) {
      ++switches;
      CHECK(b.term.imms == std::vector<std::int64_t>{1, 2});
      CHECK(b.term.targets.size() == 3);
    }
  CHECK(switches == 1);
}

TEST_CASE("corpus programs lower to verified IR and round-trip through text") {
  for (const auto& c : support::corpus()) {
    CAPTURE(c.name);
    CHECK(ir::verify(c.program).empty());
    auto text = ir::emit_text(c.program);
    auto back = ir::parse_text(text);
    REQUIRE(back.program);
    CHECK(*back.program == c.program);
    CHECK(ir::emit_text(*back.program) == text);
  }
}

TEST_CASE("printed source re-parses to the same tree") {
  for (const auto& c : support::corpus()) {
    CAPTURE(c.name);
    auto printed = frontend::print_source(c.ast);
    auto again = support::parse_ok(printed);
    CHECK(again == c.ast);
    CHECK(frontend::lower(again) == c.program);
  }
}

TEST_CASE("a unit without main parses but does not lower") {
  auto unit = support::parse_ok("fn f(x: int) -> int { return x; }");
  CHECK_THROWS_AS(frontend::lower(unit), Error);
}

TEST_CASE("lowering is deterministic") {
  const auto& c = support::corpus_program("hash_table");
  CHECK(frontend::lower(c.ast) == frontend::lower(c.ast));
}

TEST_CASE("compile reports diagnostics as invalid input") {
  try {
    frontend::compile("fn main(args: int[]) -> int { return; }");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}
