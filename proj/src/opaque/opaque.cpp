#include "cfo/opaque/opaque.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "cfo/error.hpp"
#include "cfo/util/rng.hpp"

namespace cfo::opaque {

using ir::BinOp;

const char* to_string(Truth t) {
  switch (t) {
    case Truth::AlwaysTrue: return "always_true";
    case Truth::AlwaysFalse: return "always_false";
    case Truth::Contextual: return "contextual";
  }
  return "?";
}

Expr Expr::v(std::size_t index) {
  Expr e;
  e.kind = Kind::Var;
  e.var = index;
  return e;
}

Expr Expr::c(std::int64_t value) {
  Expr e;
  e.kind = Kind::Const;
  e.value = value;
  return e;
}

Expr Expr::bin(BinOp op, Expr a, Expr b) {
  Expr e;
  e.kind = Kind::Bin;
  e.op = op;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

namespace {

const char* symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Rem: return "%";
    case BinOp::Xor: return "^";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

}  // namespace

std::string to_string(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Var: return "v" + std::to_string(e.var);
    case Expr::Kind::Const: return std::to_string(e.value);
    case Expr::Kind::Bin:
      return "(" + to_string(e.kids[0]) + " " + symbol(e.op) + " " + to_string(e.kids[1]) + ")";
  }
  return "?";
}

std::size_t arity(const Expr& e) {
  if (e.kind == Expr::Kind::Var) return e.var + 1;
  std::size_t a = 0;
  for (const auto& k : e.kids) a = std::max(a, arity(k));
  return a;
}

std::int64_t evaluate(const Expr& e, const std::vector<std::int64_t>& in) {
  switch (e.kind) {
    case Expr::Kind::Var: return in.at(e.var);
    case Expr::Kind::Const: return e.value;
    case Expr::Kind::Bin: break;
  }
  const std::int64_t a = evaluate(e.kids[0], in);
  const std::int64_t b = evaluate(e.kids[1], in);
  const auto ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b);
  switch (e.op) {
    case BinOp::Add: return static_cast<std::int64_t>(ua + ub);
    case BinOp::Sub: return static_cast<std::int64_t>(ua - ub);
    case BinOp::Mul: return static_cast<std::int64_t>(ua * ub);
    case BinOp::Div:
      if (b == 0) throw Error(ErrorCode::Internal, "division by zero in predicate template");
      return b == -1 ? static_cast<std::int64_t>(0 - ua) : a / b;
    case BinOp::Rem:
      if (b == 0) throw Error(ErrorCode::Internal, "division by zero in predicate template");
      return b == -1 ? 0 : a % b;
    case BinOp::Xor: return a ^ b;
    case BinOp::And: return a & b;
    case BinOp::Or: return a | b;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
  }
  return 0;
}

namespace {

using E = Expr;

// v * (v + 1), operands optionally commuted
E consecutive_product(Rng* rng) {
  E succ = (rng && rng->coin()) ? E::bin(BinOp::Add, E::c(1), E::v(0)) : E::bin(BinOp::Add, E::v(0), E::c(1));
  return (rng && rng->coin()) ? E::bin(BinOp::Mul, succ, E::v(0)) : E::bin(BinOp::Mul, E::v(0), succ);
}

E square(Rng* rng) {
  (void)rng;
  return E::bin(BinOp::Mul, E::v(0), E::v(0));
}

E build(const std::string& family, Rng* rng) {
  if (family == "parity")
    return E::bin(BinOp::Eq, E::bin(BinOp::Rem, consecutive_product(rng), E::c(2)), E::c(0));
  if (family == "parity_odd")
    return E::bin(BinOp::Eq, E::bin(BinOp::Rem, consecutive_product(rng), E::c(2)), E::c(1));
  if (family == "square") return E::bin(BinOp::Le, E::bin(BinOp::Rem, square(rng), E::c(4)), E::c(1));
  if (family == "square_two") return E::bin(BinOp::Eq, E::bin(BinOp::Rem, square(rng), E::c(4)), E::c(2));
  if (family == "cubic") {
    E cube = E::bin(BinOp::Mul, square(rng), E::v(0));
    return E::bin(BinOp::Eq, E::bin(BinOp::Rem, E::bin(BinOp::Sub, cube, E::v(0)), E::c(2)), E::c(0));
  }
  if (family == "remainder_bound") {
    std::int64_t m = rng ? 3 + static_cast<std::int64_t>(rng->below(6)) : 3;
    return E::bin(BinOp::Lt, E::bin(BinOp::Rem, E::v(0), E::c(m)), E::c(m));
  }
  if (family == "remainder_two") return E::bin(BinOp::Eq, E::bin(BinOp::Rem, E::v(0), E::c(2)), E::c(2));
  if (family == "xor_cancel") {
    std::int64_t k = rng ? static_cast<std::int64_t>(rng->range(1, 0xFFFF)) : 0x5A5A;
    return E::bin(BinOp::Eq, E::bin(BinOp::Xor, E::bin(BinOp::Xor, E::v(0), E::c(k)), E::c(k)), E::v(0));
  }
  if (family == "even") return E::bin(BinOp::Eq, E::bin(BinOp::Rem, E::v(0), E::c(2)), E::c(0));
  throw Error(ErrorCode::InvalidParam, "unknown predicate family '" + family + "'");
}

std::vector<ir::Reg> choose_inputs(std::size_t n, Rng& rng, const std::vector<ir::Reg>& sources) {
  std::vector<ir::Reg> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sources.empty() ? kFreshInput : rng.pick(sources));
  return out;
}

}  // namespace

const std::vector<Family>& families() {
  static const std::vector<Family> table = {
      {"parity", Truth::AlwaysTrue, "#parity", "(v * (v + 1)) % 2 == 0"},
      {"square", Truth::AlwaysTrue, "#square", "(v * v) % 4 <= 1"},
      {"cubic", Truth::AlwaysTrue, "#cubic", "(v * v * v - v) % 2 == 0"},
      {"remainder_bound", Truth::AlwaysTrue, "#remainder_bound", "v % m < m  (3 <= m <= 8)"},
      {"xor_cancel", Truth::AlwaysTrue, "#xor_cancel", "((v ^ k) ^ k) == v"},
      {"remainder_two", Truth::AlwaysFalse, "#remainder_two", "v % 2 == 2"},
      {"parity_odd", Truth::AlwaysFalse, "#parity_odd", "(v * (v + 1)) % 2 == 1"},
      {"square_two", Truth::AlwaysFalse, "#square_two", "(v * v) % 4 == 2"},
      {"even", Truth::Contextual, "#even", "v % 2 == 0"},
  };
  return table;
}

Expr canonical(const std::string& family) { return build(family, nullptr); }

PredicateExpr gen_predicate_from(const std::string& family, std::uint64_t seed,
                                 const std::vector<ir::Reg>& source_registers) {
  const Family* fam = nullptr;
  for (const auto& f : families())
    if (f.name == family) fam = &f;
  if (!fam) throw Error(ErrorCode::InvalidParam, "unknown predicate family '" + family + "'");
  Rng rng(mix_seed(seed, 0x0BA0));
  PredicateExpr p;
  p.truth = fam->truth;
  p.family = fam->name;
  p.templ = build(fam->name, &rng);
  p.inputs = choose_inputs(arity(p.templ), rng, source_registers);
  return p;
}

PredicateExpr gen_predicate(Truth truth, std::uint64_t seed, const std::vector<ir::Reg>& source_registers) {
  std::vector<const Family*> pool;
  for (const auto& f : families())
    if (f.truth == truth) pool.push_back(&f);
  Rng rng(mix_seed(seed, 0x0BA1));
  return gen_predicate_from(rng.pick(pool)->name, seed, source_registers);
}

OpaqueValue gen_value(std::int64_t value, std::uint64_t seed, const std::vector<ir::Reg>& source_registers) {
  if (value != 0 && value != 1) throw Error(ErrorCode::InvalidParam, "opaque values are 0 or 1");
  Rng rng(mix_seed(seed, 0x0BA2));
  OpaqueValue ov;
  ov.value = value;
  // Both shapes reduce to the parity remainder, which is always 0.
  E zero;
  if (rng.coin()) {
    ov.family = "parity";
    zero = E::bin(BinOp::Rem, consecutive_product(&rng), E::c(2));
  } else {
    ov.family = "cubic";
    zero = E::bin(BinOp::Rem, E::bin(BinOp::Sub, E::bin(BinOp::Mul, square(&rng), E::v(0)), E::v(0)), E::c(2));
  }
  ov.expression = value == 0 ? zero : E::bin(BinOp::Sub, E::c(1), zero);
  ov.inputs = choose_inputs(arity(ov.expression), rng, source_registers);
  return ov;
}

namespace {

bool accepts(Truth t, std::int64_t v) {
  switch (t) {
    case Truth::AlwaysTrue: return v != 0;
    case Truth::AlwaysFalse: return v == 0;
    case Truth::Contextual: return true;
  }
  return true;
}

}  // namespace

VerifyResult verify_predicate_exhaustive(const PredicateExpr& pred, int domain_bits) {
  const std::size_t n = arity(pred.templ);
  if (domain_bits < 1 || domain_bits > 20 || n > 2 || static_cast<std::size_t>(domain_bits) * n > 24)
    throw Error(ErrorCode::DomainTooLarge,
                "exhaustive domain of " + std::to_string(n) + " inputs at " + std::to_string(domain_bits) + " bits");
  const std::int64_t lo = -(std::int64_t{1} << (domain_bits - 1));
  const std::int64_t hi = (std::int64_t{1} << (domain_bits - 1)) - 1;
  VerifyResult res;
  std::vector<std::int64_t> in(n, lo);
  if (n == 0) {
    if (!accepts(pred.truth, evaluate(pred.templ, in))) res.holds = false;
    return res;
  }
  bool seen_true = false, seen_false = false;
  while (true) {
    std::int64_t v = evaluate(pred.templ, in);
    (v ? seen_true : seen_false) = true;
    if (!accepts(pred.truth, v)) {
      res.holds = false;
      res.counterexample = in;
      return res;
    }
    std::size_t k = 0;
    while (k < n && in[k] == hi) in[k++] = lo;
    if (k == n) break;
    ++in[k];
  }
  // A contextual predicate must actually take both values.
  if (pred.truth == Truth::Contextual && !(seen_true && seen_false)) res.holds = false;
  return res;
}

const std::vector<std::int64_t>& spot_values() {
  static const std::vector<std::int64_t> values = [] {
    std::vector<std::int64_t> v;
    const std::int64_t pivots[] = {std::int64_t{1} << 31, std::int64_t{1} << 32, 3037000499LL, 3037000500LL,
                                   std::int64_t{1} << 62, std::numeric_limits<std::int64_t>::max()};
    for (std::int64_t p : pivots)
      for (std::int64_t d = -2; d <= 2; ++d) {
        std::int64_t x = static_cast<std::int64_t>(static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(d));
        v.push_back(x);
        v.push_back(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(x)));
      }
    v.push_back(std::numeric_limits<std::int64_t>::min());
    return v;
  }();
  return values;
}

VerifyResult spot_check(const PredicateExpr& pred) {
  const std::size_t n = arity(pred.templ);
  VerifyResult res;
  const auto& vals = spot_values();
  std::vector<std::size_t> idx(n, 0);
  if (n == 0) return res;
  while (true) {
    std::vector<std::int64_t> in;
    for (std::size_t i : idx) in.push_back(vals[i]);
    if (!accepts(pred.truth, evaluate(pred.templ, in))) {
      res.holds = false;
      res.counterexample = in;
      return res;
    }
    std::size_t k = 0;
    while (k < n && idx[k] == vals.size() - 1) idx[k++] = 0;
    if (k == n) break;
    ++idx[k];
  }
  return res;
}

ir::Reg materialize(ir::Function& fn, std::vector<ir::Instruction>& out, const Expr& e,
                    std::vector<ir::Reg> inputs, ir::Tag tag, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x0BA3));
  for (auto& r : inputs)
    if (r == kFreshInput) {
      r = fn.new_reg(ir::Type::Int);
      out.push_back(ir::make_const(r, rng.range(-1000000, 1000000), tag));
    }
  struct Lower {
    ir::Function& fn;
    std::vector<ir::Instruction>& out;
    const std::vector<ir::Reg>& inputs;
    ir::Tag tag;
    ir::Reg go(const Expr& x) {
      switch (x.kind) {
        case Expr::Kind::Var: return inputs.at(x.var);
        case Expr::Kind::Const: {
          ir::Reg r = fn.new_reg(ir::Type::Int);
          out.push_back(ir::make_const(r, x.value, tag));
          return r;
        }
        case Expr::Kind::Bin: break;
      }
      ir::Reg a = go(x.kids[0]);
      ir::Reg b = go(x.kids[1]);
      ir::Reg r = fn.new_reg(ir::binary_result_type(x.op));
      out.push_back(ir::make_binary(x.op, r, a, b, tag));
      return r;
    }
  };
  Lower l{fn, out, inputs, tag};
  return l.go(e);
}

}  // namespace cfo::opaque
