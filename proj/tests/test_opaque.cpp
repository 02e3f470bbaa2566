#include <set>

#include "doctest.h"

#include "cfo/error.hpp"
#include "cfo/interp/interpreter.hpp"
#include "cfo/ir/verify.hpp"
#include "cfo/opaque/opaque.hpp"

using namespace cfo;
using namespace cfo::opaque;
using ir::BinOp;

namespace {

PredicateExpr pred_of(Expr e, Truth truth) {
  PredicateExpr p;
  p.truth = truth;
  p.family = "test";
  p.inputs.assign(arity(e), kFreshInput);
  p.templ = std::move(e);
  return p;
}

// Lowers the expression into a main that reads its variables from the input
// array and returns the result, so the interpreter can serve as oracle.
ir::Program as_program(const Expr& e) {
  ir::Function f;
  f.name = "main";
  f.ret = ir::Type::Int;
  ir::Reg args = f.new_reg(ir::Type::Array);
  f.params = {args};
  std::vector<ir::Instruction> code;
  std::vector<ir::Reg> inputs;
  for (std::size_t i = 0; i < arity(e); ++i) {
    ir::Reg idx = f.new_reg(ir::Type::Int), v = f.new_reg(ir::Type::Int);
    code.push_back(ir::make_const(idx, static_cast<std::int64_t>(i)));
    code.push_back(ir::make_load(v, args, idx));
    inputs.push_back(v);
  }
  ir::Reg r = materialize(f, code, e, inputs, ir::Tag::Opaque, 1);
  ir::BasicBlock b{0, code, ir::make_return(r)};
  if (f.regs[r] == ir::Type::Bool) {
    ir::Reg one = f.new_reg(ir::Type::Int), zero = f.new_reg(ir::Type::Int), out = f.new_reg(ir::Type::Int);
    b.instrs.push_back(ir::make_const(one, 1));
    b.instrs.push_back(ir::make_const(zero, 0));
    b.instrs.push_back(ir::make_select(out, r, one, zero));
    b.term = ir::make_return(out);
  }
  f.blocks = {b};
  ir::Program p;
  p.functions.push_back(f);
  return p;
}

}  // namespace

TEST_CASE("canonical parity, remainder and square templates") {
  auto v = Expr::v(0);
  CHECK(canonical("parity") ==
        Expr::bin(BinOp::Eq, Expr::bin(BinOp::Rem, Expr::bin(BinOp::Mul, v, Expr::bin(BinOp::Add, v, Expr::c(1))), Expr::c(2)),
                  Expr::c(0)));
  CHECK(canonical("remainder_two") == Expr::bin(BinOp::Eq, Expr::bin(BinOp::Rem, v, Expr::c(2)), Expr::c(2)));
  CHECK(canonical("square") ==
        Expr::bin(BinOp::Le, Expr::bin(BinOp::Rem, Expr::bin(BinOp::Mul, v, v), Expr::c(4)), Expr::c(1)));
}

TEST_CASE("the family table has enough variety") {
  int t = 0, f = 0;
  std::set<std::string> names;
  for (const auto& fam : families()) {
    names.insert(fam.name);
    CHECK_FALSE(fam.proof.empty());
    if (fam.truth == Truth::AlwaysTrue) ++t;
    if (fam.truth == Truth::AlwaysFalse) ++f;
  }
  CHECK(t >= 4);
  CHECK(f >= 2);
  CHECK(names.size() == families().size());
  CHECK(names.count("parity"));
  CHECK(names.count("remainder_two"));
  CHECK(names.count("square"));
}

TEST_CASE("every true and false family holds over the 16-bit domain") {
  for (const auto& fam : families()) {
    if (fam.truth == Truth::Contextual) continue;
    CAPTURE(fam.name);
    auto r = verify_predicate_exhaustive(pred_of(canonical(fam.name), fam.truth), 16);
    CHECK(r.holds);
    CHECK(spot_check(pred_of(canonical(fam.name), fam.truth)).holds);
  }
}

TEST_CASE("seeded variants stay in their truth class") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    for (Truth truth : {Truth::AlwaysTrue, Truth::AlwaysFalse}) {
      auto p = gen_predicate(truth, seed, {});
      CAPTURE(p.family);
      CAPTURE(to_string(p.templ));
      CHECK(p.truth == truth);
      CHECK(verify_predicate_exhaustive(p, 12).holds);
      CHECK(spot_check(p).holds);
    }
  }
}

TEST_CASE("wrapping square predicate passes 16 bits but fails the wide spot check") {
  auto broken = pred_of(Expr::bin(BinOp::Ge, Expr::bin(BinOp::Mul, Expr::v(0), Expr::v(0)), Expr::c(0)), Truth::AlwaysTrue);
  CHECK(verify_predicate_exhaustive(broken, 16).holds);
  auto wide = spot_check(broken);
  CHECK_FALSE(wide.holds);
  REQUIRE(wide.counterexample.size() == 1);
  CHECK(evaluate(broken.templ, wide.counterexample) == 0);
}

TEST_CASE("exhaustive check reports a counterexample") {
  auto wrong = pred_of(Expr::bin(BinOp::Lt, Expr::v(0), Expr::c(100)), Truth::AlwaysTrue);
  auto r = verify_predicate_exhaustive(wrong, 8);
  CHECK_FALSE(r.holds);
  REQUIRE(r.counterexample.size() == 1);
  CHECK(r.counterexample[0] >= 100);
  auto never = pred_of(Expr::bin(BinOp::Eq, Expr::v(0), Expr::c(5)), Truth::AlwaysFalse);
  auto n = verify_predicate_exhaustive(never, 8);
  CHECK_FALSE(n.holds);
  CHECK(n.counterexample == std::vector<std::int64_t>{5});
}

TEST_CASE("domain limits are enforced") {
  auto p = pred_of(canonical("parity"), Truth::AlwaysTrue);
  CHECK_THROWS_AS(verify_predicate_exhaustive(p, 21), Error);
  auto two = pred_of(Expr::bin(BinOp::Eq, Expr::bin(BinOp::Xor, Expr::v(0), Expr::v(1)), Expr::bin(BinOp::Xor, Expr::v(1), Expr::v(0))),
                     Truth::AlwaysTrue);
  CHECK(verify_predicate_exhaustive(two, 12).holds);
  CHECK_THROWS_AS(verify_predicate_exhaustive(two, 13), Error);
  auto three = pred_of(Expr::bin(BinOp::Add, Expr::v(0), Expr::bin(BinOp::Add, Expr::v(1), Expr::v(2))), Truth::AlwaysTrue);
  CHECK_THROWS_AS(verify_predicate_exhaustive(three, 4), Error);
}

TEST_CASE("evaluate agrees with the interpreter on materialized templates") {
  std::vector<std::vector<std::int64_t>> samples;
  for (auto v : spot_values()) samples.push_back({v});
  for (std::int64_t v = -40; v <= 40; v += 7) samples.push_back({v});
  for (const auto& fam : families()) {
    CAPTURE(fam.name);
    auto e = canonical(fam.name);
    auto prog = as_program(e);
    REQUIRE(ir::verify(prog).empty());
    for (auto s : samples) {
      s.resize(arity(e), 3);
      auto r = interp::run(prog, interp::Input{false, s});
      REQUIRE(r.outcome == interp::Outcome::Returned);
      CHECK(r.value == evaluate(e, s));
    }
  }
}

TEST_CASE("generation is deterministic and seed-diverse") {
  CHECK(gen_predicate(Truth::AlwaysTrue, 42, {}) == gen_predicate(Truth::AlwaysTrue, 42, {}));
  std::set<std::string> shapes;
  for (std::uint64_t s = 0; s < 40; ++s) shapes.insert(to_string(gen_predicate(Truth::AlwaysTrue, s, {}).templ));
  CHECK(shapes.size() >= 4);
}

TEST_CASE("predicates draw inputs from supplied registers") {
  auto p = gen_predicate(Truth::AlwaysFalse, 3, {7, 9});
  for (auto r : p.inputs) CHECK((r == 7 || r == 9 || r == kFreshInput));
}

TEST_CASE("opaque values evaluate to the requested constant") {
  for (std::uint64_t s = 0; s < 30; ++s)
    for (std::int64_t want : {0, 1}) {
      auto v = gen_value(want, s, {});
      CHECK(v.value == want);
      for (auto x : spot_values()) {
        std::vector<std::int64_t> in(arity(v.expression), x);
        CHECK(evaluate(v.expression, in) == want);
      }
    }
}

TEST_CASE("contextual families are not constant") {
  for (const auto& fam : families()) {
    if (fam.truth != Truth::Contextual) continue;
    auto e = canonical(fam.name);
    std::set<std::int64_t> seen;
    for (std::int64_t v = -5; v <= 5; ++v) seen.insert(evaluate(e, std::vector<std::int64_t>(arity(e), v)));
    CHECK(seen.size() == 2);
  }
}
