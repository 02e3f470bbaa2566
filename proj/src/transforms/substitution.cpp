#include <algorithm>

#include "cfo/metrics/metrics.hpp"
#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms::detail {

TransformResult instruction_substitution(const Subject& s, const PassConfig& cfg) {
  const bool gotos_only = cfg.variant == "replacing_goto";
  if (!cfg.variant.empty() && !gotos_only) throw Error(ErrorCode::InvalidParam, "unknown variant " + cfg.variant);
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
    std::size_t index;  // == instrs.size() for a jump
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    for (const auto& b : fn.blocks) {
      if (!gotos_only)
        for (std::size_t i = 0; i < b.instrs.size(); ++i) {
          const auto& in = b.instrs[i];
          bool sub = in.op == Opcode::Binary && in.bin == BinOp::Sub;
          bool mov = in.op == Opcode::Move && fn.regs[*in.dst] == Type::Int;
          if (sub || mov) sites.push_back({f, b.id, i});
        }
      if (b.term.op == Opcode::Jump) sites.push_back({f, b.id, b.instrs.size()});
    }
  }
  if (sites.empty()) no_sites(gotos_only ? "no jumps" : "no substitutable instructions");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) {
    const Ref& ref = sites[*it];
    auto& fn = r.program.functions[ref.fn];
    if (ref.index == fn.block(ref.block).instrs.size()) {
      // jump L  ==>  r = 0; br (r == 0), L, dead
      BlockId target = fn.block(ref.block).term.targets[0];
      BasicBlock dead;
      dead.instrs = dead_filler(fn, mix_seed(cfg.seed, *it), 3);
      dead.term = make_jump(target, Tag::Dead);
      BlockId d = add_block(fn, std::move(dead), ref.block);
      Reg a = fn.new_reg(Type::Int);
      Reg z = fn.new_reg(Type::Int);
      Reg c = fn.new_reg(Type::Bool);
      append_instrs(fn, ref.block, {make_const(a, 0), make_const(z, 0), make_binary(BinOp::Eq, c, a, z)});
      fn.block(ref.block).term = make_branch(c, target, d);
      r.sites.push_back(Site{fn.name, ref.block, "jump as constant branch"});
      continue;
    }
    Instruction in = fn.block(ref.block).instrs[ref.index];
    Reg z = fn.new_reg(Type::Int);
    std::vector<Instruction> rest;
    Instruction head = make_const(z, 0, in.tag);
    if (in.op == Opcode::Binary) {
      // a - b  ==>  a + (0 - b)
      Reg nb = fn.new_reg(Type::Int);
      rest.push_back(make_binary(BinOp::Sub, nb, z, in.args[1], in.tag));
      rest.push_back(make_binary(BinOp::Add, *in.dst, in.args[0], nb, in.tag));
    } else {
      rest.push_back(make_binary(BinOp::Add, *in.dst, in.args[0], z, in.tag));
    }
    fn.block(ref.block).instrs[ref.index] = head;
    insert_instrs(fn, ref.block, ref.index + 1, std::move(rest));
    r.sites.push_back(Site{fn.name, ref.block, in.op == Opcode::Binary ? "sub as add of negation" : "move as add zero"});
  }
  return r;
}

TransformResult boolean_splitter(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    Reg reg;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    std::set<Reg> seen;
    for (const auto& b : fn.blocks) {
      auto note = [&](Reg x) {
        if (fn.regs[x] == Type::Bool) seen.insert(x);
      };
      for (const auto& in : b.instrs) {
        for (Reg a : in.args) note(a);
        if (in.dst) note(*in.dst);
      }
      for (Reg a : b.term.args) note(a);
    }
    for (Reg x : seen) sites.push_back({f, x});
  }
  if (sites.empty()) no_sites("no boolean registers");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    const Reg x = sites[k].reg;
    const Reg sa = fn.new_reg(Type::Bool);
    const Reg sb = fn.new_reg(Type::Bool);
    Rng rng(mix_seed(cfg.seed, 1000 + k));
    auto reshare = [&](Reg value) {
      return std::vector<Instruction>{make_const(sa, rng.coin() ? 1 : 0, Tag::Opaque),
                                      make_binary(BinOp::Xor, sb, value, sa, Tag::Opaque)};
    };
    auto join = [&](std::vector<Instruction>& pre) {
      Reg u = fn.new_reg(Type::Bool);
      pre.push_back(make_binary(BinOp::Xor, u, sa, sb, Tag::Opaque));
      return u;
    };
    for (auto& b : fn.blocks) {
      std::vector<std::vector<Instruction>> groups;
      for (const auto& orig : b.instrs) {
        std::vector<Instruction> g;
        Instruction in = orig;
        if (std::find(in.args.begin(), in.args.end(), x) != in.args.end()) {
          Reg u = join(g);
          for (auto& a : in.args)
            if (a == x) a = u;
        }
        std::vector<Instruction> post;
        if (in.dst == x) {
          Reg t = fn.new_reg(Type::Bool);
          in.dst = t;
          post = reshare(t);
        }
        g.push_back(in);
        g.insert(g.end(), post.begin(), post.end());
        groups.push_back(std::move(g));
      }
      std::vector<Instruction> term_pre;
      if (std::find(b.term.args.begin(), b.term.args.end(), x) != b.term.args.end()) {
        Reg u = join(term_pre);
        for (auto& a : b.term.args)
          if (a == x) a = u;
      }
      BlockId id = b.id;
      replace_with_groups(fn, id, std::move(groups), std::move(term_pre));
    }
    if (std::find(fn.params.begin(), fn.params.end(), x) != fn.params.end()) {
      const auto& e = fn.block(fn.entry);
      std::size_t at = !e.instrs.empty() && e.instrs[0].op == Opcode::Catch ? 1 : 0;
      insert_instrs(fn, fn.entry, at, reshare(x));
    }
    r.sites.push_back(Site{fn.name, std::nullopt, "%" + std::to_string(x) + " split into xor shares"});
  }
  return r;
}

namespace {

struct GuardMatch {
  BlockId block;
  std::size_t cmp;  // index of the compare
  Reg subject;
  bool null_check;  // otherwise a zero check
  BlockId when_hit;   // target taken when the subject is null / zero
  BlockId when_clear;
};

std::size_t count_uses(const Function& fn, Reg r) {
  std::size_t n = 0;
  for (const auto& b : fn.blocks) {
    for (const auto& in : b.instrs) n += static_cast<std::size_t>(std::count(in.args.begin(), in.args.end(), r));
    n += static_cast<std::size_t>(std::count(b.term.args.begin(), b.term.args.end(), r));
  }
  return n;
}

std::optional<GuardMatch> match_guard(const Function& fn, const BasicBlock& b) {
  if (b.term.op != Opcode::Branch) return std::nullopt;
  Reg c = b.term.args[0];
  for (std::size_t i = b.instrs.size(); i-- > 0;) {
    const auto& in = b.instrs[i];
    if (in.dst != c) continue;
    if (in.op != Opcode::Binary || (in.bin != BinOp::Eq && in.bin != BinOp::Ne)) return std::nullopt;
    if (count_uses(fn, c) != 1) return std::nullopt;
    // Which operand is the constant?
    for (int side = 0; side < 2; ++side) {
      Reg k = in.args[side];
      Reg v = in.args[1 - side];
      if (k == v) continue;
      const Instruction* kdef = nullptr;
      for (std::size_t j = 0; j < i; ++j)
        if (b.instrs[j].dst == k) kdef = &b.instrs[j];
      if (!kdef || kdef->op != Opcode::Const) continue;
      Type t = fn.regs[v];
      bool null_check = t == Type::Array && kdef->imm == -1;
      bool zero_check = t == Type::Int && kdef->imm == 0;
      if (!null_check && !zero_check) continue;
      for (std::size_t j = i + 1; j < b.instrs.size(); ++j)
        if (b.instrs[j].dst == v) return std::nullopt;
      GuardMatch m{b.id, i, v, null_check, b.term.targets[0], b.term.targets[1]};
      if (in.bin == BinOp::Ne) std::swap(m.when_hit, m.when_clear);
      if (m.when_hit == m.when_clear) return std::nullopt;
      return m;
    }
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

TransformResult guard_to_trap(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    for (const auto& b : r.program.functions[f].blocks)
      if (match_guard(r.program.functions[f], b)) sites.push_back({f, b.id});
  if (sites.empty()) no_sites("no explicit null or zero checks");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    auto m = *match_guard(fn, fn.block(sites[k].block));
    erase_instr(fn, m.block, m.cmp);
    Reg code = fn.new_reg(Type::Int);
    BasicBlock probe, handler;
    handler.instrs = {make_catch(code)};
    handler.term = make_jump(m.when_hit);
    if (m.null_check) {
      Reg n = fn.new_reg(Type::Int);
      probe.instrs = {make_len(n, m.subject)};
    } else {
      Reg one = fn.new_reg(Type::Int);
      Reg q = fn.new_reg(Type::Int);
      probe.instrs = {make_const(one, 1), make_binary(BinOp::Div, q, one, m.subject)};
    }
    probe.term = make_jump(m.when_clear);
    const auto plen = static_cast<std::uint32_t>(probe.instrs.size());
    BlockId pid = add_block(fn, std::move(probe), m.block);
    BlockId hid = add_block(fn, std::move(handler), pid);
    fn.block(m.block).term = make_jump(pid);
    TrapKindSet kinds;
    kinds.insert(m.null_check ? TrapKind::NullAccess : TrapKind::DivByZero);
    fn.traps.insert(fn.traps.begin(), TrapEntry{pid, 0, plen + 1, hid, kinds});
    r.sites.push_back(Site{fn.name, m.block, m.null_check ? "null check as trap" : "zero check as trap"});
  }
  return r;
}

namespace {

bool same_modulo_dst(const Instruction& a, const Instruction& b) {
  return a.op == b.op && a.bin == b.bin && a.un == b.un && a.intrinsic == b.intrinsic && a.args == b.args &&
         a.imm == b.imm && a.imms == b.imms && a.text == b.text && a.dst.has_value() == b.dst.has_value();
}

bool hoistable(const Instruction& in) {
  return in.op != Opcode::Catch && !may_trap(in) && !has_effect(in) && in.op != Opcode::NewArray &&
         in.op != Opcode::ArrayLit && in.dst.has_value();
}

/// Hoists the first instruction of both arms into `b` when legal.
bool hoist_once(Function& fn, BlockId bid) {
  const auto& b = fn.block(bid);
  if (b.term.op != Opcode::Branch) return false;
  BlockId t = b.term.targets[0], f = b.term.targets[1];
  if (t == f || t == bid || f == bid || t == fn.entry || f == fn.entry) return false;
  auto preds = predecessor_map(fn);
  if (preds[t] != std::vector<BlockId>{bid} || preds[f] != std::vector<BlockId>{bid}) return false;
  auto handlers = handler_blocks(fn);
  if (handlers.count(t) || handlers.count(f)) return false;
  const auto& bt = fn.block(t);
  const auto& bf = fn.block(f);
  if (bt.instrs.empty() || bf.instrs.empty()) return false;
  const Instruction it = bt.instrs[0];
  const Instruction iff = bf.instrs[0];
  if (!hoistable(it) || !same_modulo_dst(it, iff)) return false;
  if (fn.regs[*it.dst] != fn.regs[*iff.dst]) return false;
  if (*it.dst == b.term.args[0]) return false;
  auto lv = liveness(fn);
  if (*it.dst != *iff.dst && lv.live_in.at(f)[*it.dst]) return false;
  append_instrs(fn, bid, {it});
  erase_instr(fn, t, 0);
  if (*it.dst == *iff.dst) erase_instr(fn, f, 0);
  else fn.block(f).instrs[0] = make_move(*iff.dst, *it.dst, iff.tag);
  return true;
}

}  // namespace

TransformResult hoist_common_branch_code(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    for (const auto& b : r.program.functions[f].blocks) {
      Function probe = r.program.functions[f];
      if (hoist_once(probe, b.id)) sites.push_back({f, b.id});
    }
  if (sites.empty()) no_sites("no branch with a common hoistable prefix");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    std::size_t n = 0;
    while (n < 8 && hoist_once(fn, sites[k].block)) ++n;
    r.sites.push_back(Site{fn.name, sites[k].block, std::to_string(n) + " instruction(s) hoisted"});
  }
  return r;
}

namespace {

struct RegUse {
  std::map<Reg, std::size_t> defs;
  std::map<Reg, std::size_t> uses;
};

RegUse census(const Function& fn) {
  RegUse u;
  for (Reg p : fn.params) ++u.defs[p];
  for (const auto& b : fn.blocks) {
    for (const auto& in : b.instrs) {
      for (Reg a : in.args) ++u.uses[a];
      if (in.dst) ++u.defs[*in.dst];
    }
    for (Reg a : b.term.args) ++u.uses[a];
  }
  return u;
}

/// Registers defined once inside [from, n) and used only there, after the def.
std::set<Reg> local_temps(const BasicBlock& b, std::size_t from, const RegUse& census) {
  std::set<Reg> defined, out;
  std::map<Reg, std::size_t> local_uses;
  std::set<Reg> bad;
  for (std::size_t i = from; i < b.instrs.size(); ++i) {
    const auto& in = b.instrs[i];
    for (Reg a : in.args) {
      if (!defined.count(a)) bad.insert(a);
      ++local_uses[a];
    }
    if (in.dst) defined.insert(*in.dst);
  }
  for (Reg a : b.term.args) bad.insert(a);
  for (Reg d : defined) {
    if (bad.count(d)) continue;
    auto du = census.defs.find(d);
    if (du == census.defs.end() || du->second != 1) continue;
    auto uu = census.uses.find(d);
    std::size_t total = uu == census.uses.end() ? 0 : uu->second;
    if (total == local_uses[d]) out.insert(d);
  }
  return out;
}

bool suffixes_match(const BasicBlock& x, const BasicBlock& y, std::size_t len, const RegUse& census) {
  std::size_t sx = x.instrs.size() - len, sy = y.instrs.size() - len;
  auto tx = local_temps(x, sx, census), ty = local_temps(y, sy, census);
  std::map<Reg, Reg> fwd, back;
  auto same = [&](Reg a, Reg b) {
    bool la = tx.count(a), lb = ty.count(b);
    if (la != lb) return false;
    if (!la) return a == b;
    auto f = fwd.find(a);
    auto g = back.find(b);
    if (f == fwd.end() && g == back.end()) {
      fwd[a] = b;
      back[b] = a;
      return true;
    }
    return f != fwd.end() && g != back.end() && f->second == b && g->second == a;
  };
  for (std::size_t k = 0; k < len; ++k) {
    const auto& a = x.instrs[sx + k];
    const auto& b = y.instrs[sy + k];
    if (a.op == Opcode::Catch || b.op == Opcode::Catch) return false;
    if (a.op != b.op || a.bin != b.bin || a.un != b.un || a.intrinsic != b.intrinsic || a.imm != b.imm ||
        a.imms != b.imms || a.text != b.text || a.args.size() != b.args.size() ||
        a.dst.has_value() != b.dst.has_value())
      return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
      if (!same(a.args[i], b.args[i])) return false;
    if (a.dst && !same(*a.dst, *b.dst)) return false;
  }
  return true;
}

std::size_t common_suffix(const Function& fn, const BasicBlock& x, const BasicBlock& y, const RegUse& census) {
  if (has_trap_entries(fn, x.id) || has_trap_entries(fn, y.id)) return 0;
  std::size_t limit = std::min(x.instrs.size(), y.instrs.size());
  for (std::size_t len = limit; len >= 4; --len)
    if (suffixes_match(x, y, len, census)) return len;
  return 0;
}

bool function_reducible(const Function& fn) { return metrics::is_reducible(fn); }

}  // namespace

TransformResult duplicate_sequence_reuse(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId x, y;
    std::size_t len;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    auto census_all = census(fn);
    auto handlers = handler_blocks(fn);
    for (std::size_t i = 0; i < fn.blocks.size(); ++i)
      for (std::size_t j = i + 1; j < fn.blocks.size(); ++j) {
        const auto& x = fn.blocks[i];
        const auto& y = fn.blocks[j];
        std::size_t len = common_suffix(fn, x, y, census_all);
        if (len >= 4) sites.push_back({f, x.id, y.id, len});
      }
  }
  if (sites.empty()) no_sites("no duplicated instruction sequences of length four or more");
  std::set<std::pair<std::size_t, BlockId>> used;
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    const Ref& ref = sites[k];
    if (used.count({ref.fn, ref.x}) || used.count({ref.fn, ref.y})) continue;
    auto& fn = r.program.functions[ref.fn];
    // Earlier rewrites in this function may have changed either block.
    auto c = census(fn);
    if (common_suffix(fn, fn.block(ref.x), fn.block(ref.y), c) != ref.len) continue;
    Function next = fn;
    const bool reducible = function_reducible(fn);
    BlockId tx = split_block(next, ref.x, next.block(ref.x).instrs.size() - ref.len);
    BlockId ty = split_block(next, ref.y, next.block(ref.y).instrs.size() - ref.len);
    BasicBlock cx;
    cx.term = next.block(tx).term;
    BlockId cxid = add_block(next, std::move(cx), tx);
    next.block(ty).instrs.clear();
    Reg sel = next.new_reg(Type::Int);
    append_instrs(next, ref.x, {make_const(sel, 1, Tag::Dispatcher)});
    append_instrs(next, ref.y, {make_const(sel, 2, Tag::Dispatcher)});
    next.block(ref.y).term = make_jump(tx);
    next.block(tx).term = make_switch(sel, {1, 2}, {cxid, ty}, cxid, Tag::Dispatcher);
    if (function_reducible(next) != reducible) continue;
    fn = std::move(next);
    used.insert({ref.fn, ref.x});
    used.insert({ref.fn, ref.y});
    r.sites.push_back(Site{fn.name, ref.x, std::to_string(ref.len) + " instructions shared with block " +
                                               std::to_string(ref.y)});
  }
  if (r.sites.empty()) no_sites("sharing every candidate would change reducibility");
  return r;
}

}  // namespace cfo::transforms::detail
