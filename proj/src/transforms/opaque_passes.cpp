#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms {

using namespace ir;
using namespace detail;
using opaque::Truth;

namespace {

void require_boundary(const Function& fn, BlockId block, std::size_t index) {
  const auto* b = fn.find_block(block);
  if (!b) throw Error(ErrorCode::IneligibleSite, "unknown block " + std::to_string(block));
  if (index > b->instrs.size()) throw Error(ErrorCode::IneligibleSite, "boundary past the terminator");
  if (index == 0 && !b->instrs.empty() && b->instrs[0].op == Opcode::Catch)
    throw Error(ErrorCode::IneligibleSite, "boundary before catch");
}

std::size_t first_boundary(const BasicBlock& b) {
  return !b.instrs.empty() && b.instrs[0].op == Opcode::Catch ? 1 : 0;
}

/// Dead block body: filler, a mutated clone of `model`, or a dead switch fanning out.
void fill_dead(Function& fn, BlockId dead, BlockId cont, PayloadKind kind, const std::vector<Instruction>& model,
               std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xF11));
  if (kind == PayloadKind::BuggyClone) {
    std::vector<Instruction> body;
    for (const auto& in : model)
      if (in.op != Opcode::Catch) body.push_back(tagged(in, Tag::Dead));
    std::vector<std::size_t> consts;
    for (std::size_t i = 0; i < body.size(); ++i)
      if (body[i].op == Opcode::Const && fn.regs[*body[i].dst] == Type::Int) consts.push_back(i);
    if (!consts.empty()) {
      body[rng.pick(consts)].imm += rng.range(1, 9);
    } else {
      auto extra = dead_filler(fn, seed, 3);
      body.insert(body.end(), extra.begin(), extra.end());
    }
    fn.block(dead).instrs = std::move(body);
    fn.block(dead).term = make_jump(cont, Tag::Dead);
    return;
  }
  if (kind == PayloadKind::DeadSwitch) {
    std::size_t arms = static_cast<std::size_t>(rng.range(2, 3));
    std::vector<BlockId> targets;
    BlockId after = dead;
    for (std::size_t i = 0; i <= arms; ++i) {
      BasicBlock arm;
      arm.instrs = dead_filler(fn, mix_seed(seed, i + 1), static_cast<std::size_t>(rng.range(2, 5)));
      arm.term = make_jump(cont, Tag::Dead);
      after = add_block(fn, std::move(arm), after);
      targets.push_back(after);
    }
    BlockId dflt = targets.back();
    targets.pop_back();
    std::vector<std::int64_t> keys;
    std::int64_t k = rng.range(-20, 20);
    for (std::size_t i = 0; i < targets.size(); ++i) keys.push_back(k += rng.range(1, 7));
    Reg s = fn.new_reg(Type::Int);
    auto& db = fn.block(dead);
    db.instrs = {make_const(s, keys[rng.below(keys.size())] + (rng.coin() ? 0 : 100), Tag::Dead)};
    db.term = make_switch(s, keys, targets, dflt, Tag::Dead);
    return;
  }
  auto& d = fn.block(dead);
  d.instrs = dead_filler(fn, seed, static_cast<std::size_t>(rng.range(3, 7)));
  fn.block(dead).term = make_jump(cont, Tag::Dead);
}

}  // namespace

Function insert_opaque_guard(const Function& in, GuardSite site, Truth truth, PayloadKind kind, std::uint64_t seed) {
  Function fn = in;
  if (!fn.find_block(site.block)) throw Error(ErrorCode::IneligibleSite, "unknown block " + std::to_string(site.block));
  const bool needs_constant = kind != PayloadKind::Irrelevant && kind != PayloadKind::RedundantOperand;
  if (needs_constant && truth == Truth::Contextual)
    throw Error(ErrorCode::IneligibleSite, "guard needs a constant predicate");

  switch (kind) {
    case PayloadKind::ExtendConditional: {
      auto& b = fn.block(site.block);
      if (b.term.op != Opcode::Branch) throw Error(ErrorCode::IneligibleSite, "block does not end in a branch");
      std::vector<Instruction> out;
      Reg p = emit_predicate(fn, out, truth, seed);
      // cond && p for a true predicate, cond && !p for a false one.
      if (truth == Truth::AlwaysFalse) {
        Reg np = fn.new_reg(Type::Bool);
        out.push_back(make_unary(UnOp::Not, np, p, Tag::Opaque));
        p = np;
      }
      Reg c = fn.new_reg(Type::Bool);
      Reg orig = fn.block(site.block).term.args[0];
      out.push_back(make_binary(BinOp::And, c, orig, p, Tag::Opaque));
      append_instrs(fn, site.block, std::move(out));
      fn.block(site.block).term.args[0] = c;
      return fn;
    }
    case PayloadKind::RedundantOperand: {
      auto& b = fn.block(site.block);
      if (site.index >= b.instrs.size()) throw Error(ErrorCode::IneligibleSite, "no instruction at index");
      Instruction ins = b.instrs[site.index];
      if (ins.op != Opcode::Binary || fn.regs[*ins.dst] != Type::Int || fn.regs[ins.args[0]] != Type::Int)
        throw Error(ErrorCode::IneligibleSite, "not an integer binary operation");
      Rng rng(mix_seed(seed, 0x0DD));
      const bool multiply = rng.coin();
      Reg dst = *ins.dst;
      Reg t = fn.new_reg(Type::Int);
      std::vector<Instruction> out;
      auto val = opaque::gen_value(multiply ? 1 : 0, seed, int_registers(fn));
      Reg k = opaque::materialize(fn, out, val.expression, val.inputs, Tag::Opaque, seed);
      ins.dst = t;
      out.insert(out.begin(), ins);
      out.push_back(make_binary(multiply ? BinOp::Mul : BinOp::Add, dst, t, k, Tag::Opaque));
      // The original instruction keeps its slot, so trap ranges covering it still do.
      fn.block(site.block).instrs[site.index] = out.front();
      out.erase(out.begin());
      insert_instrs(fn, site.block, site.index + 1, std::move(out));
      return fn;
    }
    case PayloadKind::Irrelevant: {
      require_boundary(fn, site.block, site.index);
      Rng rng(mix_seed(seed, 0x1EE));
      auto ints = int_registers(fn);
      std::vector<Instruction> out;
      Reg acc = fn.new_reg(Type::Int);
      if (!ints.empty() && rng.coin()) out.push_back(make_move(acc, rng.pick(ints), Tag::Irrelevant));
      else out.push_back(make_const(acc, rng.range(-99, 99), Tag::Irrelevant));
      std::size_t n = static_cast<std::size_t>(rng.range(1, 3));
      static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Xor};
      for (std::size_t i = 0; i < n; ++i) {
        Reg k = fn.new_reg(Type::Int);
        out.push_back(make_const(k, rng.range(1, 64), Tag::Irrelevant));
        Reg next = fn.new_reg(Type::Int);
        out.push_back(make_binary(ops[rng.below(4)], next, acc, k, Tag::Irrelevant));
        acc = next;
      }
      insert_instrs(fn, site.block, site.index, std::move(out));
      return fn;
    }
    case PayloadKind::DeadBlock:
    case PayloadKind::DeadSwitch:
    case PayloadKind::BuggyClone:
    case PayloadKind::OpaqueBranch: {
      require_boundary(fn, site.block, site.index);
      std::vector<Instruction> model(fn.block(site.block).instrs.begin() + static_cast<std::ptrdiff_t>(site.index),
                                     fn.block(site.block).instrs.end());
      BlockId cont = split_block(fn, site.block, site.index);
      BasicBlock dead_block;
      dead_block.term = make_jump(cont, Tag::Dead);
      BlockId dead = add_block(fn, std::move(dead_block), cont);
      fill_dead(fn, dead, cont, kind, model, seed);
      BlockId live = cont;
      if (kind == PayloadKind::OpaqueBranch) {
        BasicBlock l1;
        l1.term = make_jump(cont, Tag::Opaque);
        live = add_block(fn, std::move(l1), site.block);
      }
      std::vector<Instruction> out;
      Reg p = emit_predicate(fn, out, truth, seed);
      append_instrs(fn, site.block, std::move(out));
      fn.block(site.block).term = truth == Truth::AlwaysTrue ? make_branch(p, live, dead, Tag::Opaque)
                                                             : make_branch(p, dead, live, Tag::Opaque);
      return fn;
    }
  }
  return fn;
}

namespace detail {

BlockId add_dummy_loop(Function& fn, BlockId block, std::size_t at, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x100B));
  BlockId cont = split_block(fn, block, at);
  Reg i = fn.new_reg(Type::Int);
  Reg n = fn.new_reg(Type::Int);
  Reg c = fn.new_reg(Type::Bool);
  Reg one = fn.new_reg(Type::Int);
  BasicBlock header, body;
  BlockId h = add_block(fn, std::move(header), block);
  BlockId l = add_block(fn, std::move(body), h);
  append_instrs(fn, block, {make_const(i, 0, Tag::Irrelevant), make_const(n, rng.range(1, 3), Tag::Irrelevant)});
  fn.block(block).term = make_jump(h, Tag::Irrelevant);
  fn.block(h).instrs = {make_binary(BinOp::Lt, c, i, n, Tag::Irrelevant)};
  fn.block(h).term = make_branch(c, l, cont, Tag::Irrelevant);
  fn.block(l).instrs = {make_const(one, 1, Tag::Irrelevant), make_binary(BinOp::Add, i, i, one, Tag::Irrelevant)};
  fn.block(l).term = make_jump(h, Tag::Irrelevant);
  return l;
}

namespace {

struct BlockRef {
  std::size_t fn;
  BlockId block;
};

std::vector<BlockRef> all_blocks(const Program& p, bool branch_only = false) {
  std::vector<BlockRef> out;
  for (std::size_t f = 0; f < p.functions.size(); ++f)
    for (const auto& b : p.functions[f].blocks)
      if (!branch_only || b.term.op == Opcode::Branch) out.push_back({f, b.id});
  return out;
}

/// Applies a boundary payload at one random boundary of each selected block.
TransformResult boundary_pass(const Subject& s, const PassConfig& cfg, PayloadKind kind, const char* what) {
  TransformResult r;
  r.program = s.ir;
  auto sites = all_blocks(r.program);
  if (sites.empty()) no_sites(std::string("no blocks for ") + what);
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  for (std::size_t k : chosen) {
    auto& fn = r.program.functions[sites[k].fn];
    std::uint64_t seed = mix_seed(cfg.seed, 1000 + k);
    Rng rng(seed);
    const auto& b = fn.block(sites[k].block);
    std::size_t lo = first_boundary(b);
    std::size_t at = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(b.instrs.size())));
    Truth truth = rng.coin() ? Truth::AlwaysTrue : Truth::AlwaysFalse;
    if (kind == PayloadKind::OpaqueBranch) truth = Truth::AlwaysTrue;
    fn = insert_opaque_guard(fn, GuardSite{sites[k].block, at}, truth, kind, seed);
    r.sites.push_back(Site{fn.name, sites[k].block, std::string(what) + " at " + std::to_string(at)});
  }
  return r;
}

}  // namespace

TransformResult extend_conditionals(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  auto sites = all_blocks(r.program, true);
  if (sites.empty()) no_sites("no conditional branches");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    std::uint64_t seed = mix_seed(cfg.seed, 1000 + k);
    Truth truth = Rng(seed).coin() ? Truth::AlwaysTrue : Truth::AlwaysFalse;
    fn = insert_opaque_guard(fn, GuardSite{sites[k].block, 0}, truth, PayloadKind::ExtendConditional, seed);
    r.sites.push_back(Site{fn.name, sites[k].block, truth == Truth::AlwaysTrue ? "and true-predicate" : "and negated false-predicate"});
  }
  return r;
}

TransformResult add_redundant_operands(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
    std::size_t index;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    for (const auto& b : fn.blocks)
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const auto& in = b.instrs[i];
        if (in.op == Opcode::Binary && fn.regs[*in.dst] == Type::Int && fn.regs[in.args[0]] == Type::Int)
          sites.push_back({f, b.id, i});
      }
  }
  if (sites.empty()) no_sites("no integer arithmetic");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  // Later indices first so earlier sites keep their positions.
  std::reverse(chosen.begin(), chosen.end());
  for (std::size_t k : chosen) {
    auto& fn = r.program.functions[sites[k].fn];
    fn = insert_opaque_guard(fn, GuardSite{sites[k].block, sites[k].index}, Truth::AlwaysTrue,
                             PayloadKind::RedundantOperand, mix_seed(cfg.seed, 1000 + k));
    r.sites.push_back(Site{fn.name, sites[k].block, "operand at " + std::to_string(sites[k].index)});
  }
  std::reverse(r.sites.begin(), r.sites.end());
  return r;
}

TransformResult dead_code_insertion(const Subject& s, const PassConfig& cfg) {
  PayloadKind kind = PayloadKind::DeadBlock;
  if (cfg.variant == "buggy_code") kind = PayloadKind::BuggyClone;
  else if (cfg.variant == "dead_switch" || cfg.variant == "switch") kind = PayloadKind::DeadSwitch;
  else if (!cfg.variant.empty()) throw Error(ErrorCode::InvalidParam, "unknown variant " + cfg.variant);
  return boundary_pass(s, cfg, kind, "dead block");
}

TransformResult dead_switch(const Subject& s, const PassConfig& cfg) {
  return boundary_pass(s, cfg, PayloadKind::DeadSwitch, "dead switch");
}

TransformResult irrelevant_code_insertion(const Subject& s, const PassConfig& cfg) {
  return boundary_pass(s, cfg, PayloadKind::Irrelevant, "irrelevant code");
}

TransformResult opaque_branch_insertion(const Subject& s, const PassConfig& cfg) {
  return boundary_pass(s, cfg, PayloadKind::OpaqueBranch, "opaque branch");
}

TransformResult insert_dummy_loop(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  auto sites = all_blocks(r.program);
  if (sites.empty()) no_sites("no blocks");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    std::uint64_t seed = mix_seed(cfg.seed, 1000 + k);
    const auto& b = fn.block(sites[k].block);
    std::size_t at = static_cast<std::size_t>(
        Rng(seed).range(static_cast<std::int64_t>(first_boundary(b)), static_cast<std::int64_t>(b.instrs.size())));
    add_dummy_loop(fn, sites[k].block, at, seed);
    r.sites.push_back(Site{fn.name, sites[k].block, "dummy loop at " + std::to_string(at)});
  }
  return r;
}

}  // namespace detail
}  // namespace cfo::transforms
