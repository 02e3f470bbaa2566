#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfo/ir/ir.hpp"

namespace cfo::opaque {

enum class Truth : std::uint8_t { AlwaysTrue, AlwaysFalse, Contextual };
const char* to_string(Truth t);

/// Integer expression over numbered input variables. Comparisons yield 0/1.
struct Expr {
  enum class Kind : std::uint8_t { Var, Const, Bin };
  Kind kind = Kind::Const;
  ir::BinOp op = ir::BinOp::Add;
  std::int64_t value = 0;  // Const
  std::size_t var = 0;     // Var: index into the input list
  std::vector<Expr> kids;

  static Expr v(std::size_t index);
  static Expr c(std::int64_t value);
  static Expr bin(ir::BinOp op, Expr a, Expr b);

  friend bool operator==(const Expr&, const Expr&) = default;
};

std::string to_string(const Expr& e);
/// Number of distinct input variables referenced (max index + 1).
std::size_t arity(const Expr& e);
/// Evaluates with 64-bit wrapping and truncated division (same rules as the interpreter).
std::int64_t evaluate(const Expr& e, const std::vector<std::int64_t>& inputs);

/// Sentinel in PredicateExpr::inputs asking the pass to allocate and seed a fresh register.
inline constexpr ir::Reg kFreshInput = static_cast<ir::Reg>(-1);

struct PredicateExpr {
  Truth truth = Truth::AlwaysTrue;
  std::string family;
  Expr templ;
  std::vector<ir::Reg> inputs;  // one per template variable; kFreshInput where fresh

  friend bool operator==(const PredicateExpr&, const PredicateExpr&) = default;
};

struct OpaqueValue {
  std::int64_t value = 0;
  std::string family;
  Expr expression;
  std::vector<ir::Reg> inputs;
};

struct Family {
  std::string name;
  Truth truth;
  std::string proof;  // anchor in docs/opaque_predicates.md
  std::string shape;  // human-readable template
};

/// The shipped family table.
const std::vector<Family>& families();

/// Canonical (seed-independent) template of a family.
Expr canonical(const std::string& family);

/// Picks a family of the requested truth class and varies it structurally by
/// seed. Inputs are drawn from `source_registers` (int-typed) when non-empty.
PredicateExpr gen_predicate(Truth truth, std::uint64_t seed, const std::vector<ir::Reg>& source_registers);
PredicateExpr gen_predicate_from(const std::string& family, std::uint64_t seed,
                                 const std::vector<ir::Reg>& source_registers);

/// Opaque 0 or 1.
OpaqueValue gen_value(std::int64_t value, std::uint64_t seed, const std::vector<ir::Reg>& source_registers);

struct VerifyResult {
  bool holds = true;
  std::vector<std::int64_t> counterexample;
};

/// Exhaustive check over all sign-extended `domain_bits`-bit assignments.
/// Throws Error(DomainTooLarge) when bits > 20, arity > 2 or the space exceeds 2^24.
VerifyResult verify_predicate_exhaustive(const PredicateExpr& pred, int domain_bits);

/// Wide-value spot check (values around 2^31, 2^32, 2^62 and the 64-bit extremes).
VerifyResult spot_check(const PredicateExpr& pred);
const std::vector<std::int64_t>& spot_values();

/// Lowers an expression to IR instructions appended to `out`; fresh inputs
/// are allocated in `fn` and seeded with constants drawn from `seed`.
/// Returns the register holding the result (bool-typed for comparisons).
ir::Reg materialize(ir::Function& fn, std::vector<ir::Instruction>& out, const Expr& e,
                    std::vector<ir::Reg> inputs, ir::Tag tag, std::uint64_t seed);

}  // namespace cfo::opaque
