#include "util.hpp"

#include <algorithm>
#include <cmath>

namespace cfo::transforms::detail {

void insert_instrs(Function& fn, BlockId block, std::size_t pos, std::vector<Instruction> instrs) {
  if (instrs.empty()) return;
  auto& b = fn.block(block);
  const auto k = static_cast<std::uint32_t>(instrs.size());
  const bool trap_free = std::none_of(instrs.begin(), instrs.end(), [](const Instruction& in) { return may_trap(in); });
  const auto p = static_cast<std::uint32_t>(pos);
  for (auto& t : fn.traps) {
    if (t.block != block) continue;
    // Trap-free code may widen a range harmlessly, which keeps whole-block entries whole.
    if (trap_free ? t.start > p : t.start >= p) t.start += k;
    if (t.end > p) t.end += k;
  }
  b.instrs.insert(b.instrs.begin() + static_cast<std::ptrdiff_t>(pos), std::make_move_iterator(instrs.begin()),
                  std::make_move_iterator(instrs.end()));
}

void append_instrs(Function& fn, BlockId block, std::vector<Instruction> instrs) {
  std::size_t n = fn.block(block).instrs.size();
  insert_instrs(fn, block, n, std::move(instrs));
}

void replace_with_groups(Function& fn, BlockId block, std::vector<std::vector<Instruction>> groups,
                         std::vector<Instruction> term_pre) {
  auto& b = fn.block(block);
  std::vector<std::uint32_t> begin(groups.size() + 2, 0);
  std::vector<Instruction> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    begin[i] = static_cast<std::uint32_t>(out.size());
    for (auto& in : groups[i]) out.push_back(std::move(in));
  }
  begin[groups.size()] = static_cast<std::uint32_t>(out.size());
  for (auto& in : term_pre) out.push_back(std::move(in));
  begin[groups.size() + 1] = static_cast<std::uint32_t>(out.size()) + 1;
  const auto n = groups.size();
  for (auto& t : fn.traps) {
    if (t.block != block) continue;
    t.start = begin[std::min<std::size_t>(t.start, n)];
    t.end = t.end == n + 1 ? begin[n + 1] : begin[t.end];
  }
  std::erase_if(fn.traps, [](const TrapEntry& t) { return t.start >= t.end; });
  b.instrs = std::move(out);
}

void erase_instr(Function& fn, BlockId block, std::size_t pos) {
  auto& b = fn.block(block);
  b.instrs.erase(b.instrs.begin() + static_cast<std::ptrdiff_t>(pos));
  const auto p = static_cast<std::uint32_t>(pos);
  for (auto& t : fn.traps) {
    if (t.block != block) continue;
    if (t.start > p) --t.start;
    if (t.end > p) --t.end;
  }
  std::erase_if(fn.traps, [](const TrapEntry& t) { return t.start >= t.end; });
}

BlockId add_block(Function& fn, BasicBlock b, std::optional<BlockId> after) {
  b.id = fn.next_block_id();
  BlockId id = b.id;
  if (after) {
    std::size_t at = fn.block_index(*after) + 1;
    fn.blocks.insert(fn.blocks.begin() + static_cast<std::ptrdiff_t>(at), std::move(b));
  } else {
    fn.blocks.push_back(std::move(b));
  }
  return id;
}

BlockId split_block(Function& fn, BlockId block, std::size_t at) {
  BasicBlock tail;
  {
    auto& b = fn.block(block);
    tail.instrs.assign(b.instrs.begin() + static_cast<std::ptrdiff_t>(at), b.instrs.end());
    tail.term = b.term;
  }
  BlockId tid = add_block(fn, std::move(tail), block);
  auto& b = fn.block(block);
  b.instrs.resize(at);
  b.term = make_jump(tid);

  const auto a = static_cast<std::uint32_t>(at);
  std::vector<TrapEntry> out;
  for (const auto& t : fn.traps) {
    if (t.block != block) {
      out.push_back(t);
      continue;
    }
    if (t.start < a || (t.start == 0 && t.end > a)) {
      TrapEntry h = t;
      h.end = t.end > a ? a + 1 : t.end;
      out.push_back(h);
    }
    if (t.end > a) {
      TrapEntry tl = t;
      tl.block = tid;
      tl.start = std::max(t.start, a) - a;
      tl.end = t.end - a;
      out.push_back(tl);
    }
  }
  fn.traps = std::move(out);
  return tid;
}

void retarget(Instruction& term, BlockId from, BlockId to) {
  for (auto& t : term.targets)
    if (t == from) t = to;
}

std::set<BlockId> handler_blocks(const Function& fn) {
  std::set<BlockId> out;
  for (const auto& t : fn.traps) out.insert(t.handler);
  return out;
}

bool has_trap_entries(const Function& fn, BlockId block) {
  return std::any_of(fn.traps.begin(), fn.traps.end(), [&](const TrapEntry& t) { return t.block == block; });
}

std::vector<TrapEntry> covering_entries(const Function& fn, BlockId block, std::size_t index) {
  std::vector<TrapEntry> out;
  for (const auto& t : fn.traps)
    if (t.block == block && t.start <= index && index < t.end) out.push_back(t);
  return out;
}

void cover_block(Function& fn, BlockId block, const std::vector<TrapEntry>& entries) {
  const auto n = static_cast<std::uint32_t>(fn.block(block).instrs.size());
  for (auto t : entries) {
    t.block = block;
    t.start = 0;
    t.end = n + 1;
    fn.traps.push_back(t);
  }
}

std::vector<Reg> int_registers(const Function& fn) {
  std::vector<Reg> out;
  for (Reg p : fn.params)
    if (fn.regs[p] == Type::Int) out.push_back(p);
  for (Reg r = 0; r < fn.regs.size(); ++r)
    if (fn.regs[r] == Type::Int && std::find(fn.params.begin(), fn.params.end(), r) == fn.params.end())
      out.push_back(r);
  return out;
}

std::vector<std::size_t> select_sites(std::size_t n, double fraction, std::uint64_t seed) {
  if (n == 0) return {};
  std::size_t count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  count = std::clamp<std::size_t>(count, 1, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0x5173));
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Instruction make_new_array(Reg dst, Reg size, Tag tag) {
  Instruction in;
  in.op = Opcode::NewArray;
  in.dst = dst;
  in.args = {size};
  in.tag = tag;
  return in;
}

Instruction tagged(Instruction in, Tag tag) {
  in.tag = tag;
  return in;
}

std::int64_t default_value(Type t) { return t == Type::Array ? -1 : 0; }

Reg emit_predicate(Function& fn, std::vector<Instruction>& out, opaque::Truth truth, std::uint64_t seed) {
  auto pred = opaque::gen_predicate(truth, seed, int_registers(fn));
  Reg r = opaque::materialize(fn, out, pred.templ, pred.inputs, Tag::Opaque, seed);
  if (fn.regs[r] != Type::Bool) throw Error(ErrorCode::Internal, "predicate family " + pred.family + " is not boolean");
  return r;
}

std::vector<Instruction> dead_filler(Function& fn, std::uint64_t seed, std::size_t count) {
  Rng rng(mix_seed(seed, 0xDEAD));
  std::vector<Instruction> out;
  auto ints = int_registers(fn);
  Reg acc = fn.new_reg(Type::Int);
  if (!ints.empty() && rng.coin()) out.push_back(make_move(acc, rng.pick(ints), Tag::Dead));
  else out.push_back(make_const(acc, rng.range(-500, 500), Tag::Dead));
  static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Xor};
  while (out.size() + 1 < count) {
    Reg k = fn.new_reg(Type::Int);
    out.push_back(make_const(k, rng.range(1, 97), Tag::Dead));
    Reg next = fn.new_reg(Type::Int);
    out.push_back(make_binary(ops[rng.below(4)], next, acc, k, Tag::Dead));
    acc = next;
  }
  out.push_back(make_print(acc, Tag::Dead));
  return out;
}

std::string unique_function_name(const Program& p, const std::string& base) {
  if (!p.find(base)) return base;
  for (int i = 1;; ++i) {
    std::string name = base + "_" + std::to_string(i);
    if (!p.find(name)) return name;
  }
}

void rename_registers(Instruction& in, const std::map<Reg, Reg>& map) {
  for (auto& r : in.args) {
    auto it = map.find(r);
    if (it != map.end()) r = it->second;
  }
  if (in.dst) {
    auto it = map.find(*in.dst);
    if (it != map.end()) in.dst = it->second;
  }
}

std::vector<NaturalLoop> single_entry_loops(const Function& fn) {
  auto preds = predecessor_map(fn);
  auto handlers = handler_blocks(fn);
  std::vector<NaturalLoop> out;
  for (auto& loop : natural_loops(fn)) {
    if (handlers.count(loop.header)) continue;
    bool ok = true;
    for (BlockId b : loop.body) {
      if (b == loop.header) continue;
      for (BlockId p : preds[b])
        if (!loop.body.count(p)) ok = false;
    }
    for (const auto& t : fn.traps)
      if (loop.body.count(t.handler) && !loop.body.count(t.block)) ok = false;
    if (ok) out.push_back(std::move(loop));
  }
  return out;
}

std::map<BlockId, BlockId> copy_blocks(Function& fn, const std::vector<BlockId>& blocks, BlockId after) {
  std::map<BlockId, BlockId> ids;
  BlockId cursor = after;
  std::vector<BasicBlock> copies;
  for (BlockId b : blocks) copies.push_back(fn.block(b));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    cursor = add_block(fn, copies[i], cursor);
    ids[blocks[i]] = cursor;
  }
  for (BlockId b : blocks) {
    auto& term = fn.block(ids[b]).term;
    for (auto& t : term.targets) {
      auto it = ids.find(t);
      if (it != ids.end()) t = it->second;
    }
  }
  std::vector<TrapEntry> extra;
  for (const auto& t : fn.traps) {
    auto it = ids.find(t.block);
    if (it == ids.end()) continue;
    TrapEntry c = t;
    c.block = it->second;
    auto h = ids.find(t.handler);
    if (h != ids.end()) c.handler = h->second;
    extra.push_back(c);
  }
  fn.traps.insert(fn.traps.end(), extra.begin(), extra.end());
  return ids;
}

}  // namespace cfo::transforms::detail
