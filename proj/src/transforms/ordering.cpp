#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms::detail {

namespace {

BinOp mirrored(BinOp op) {
  switch (op) {
    case BinOp::Lt: return BinOp::Gt;
    case BinOp::Le: return BinOp::Ge;
    case BinOp::Gt: return BinOp::Lt;
    case BinOp::Ge: return BinOp::Le;
    default: return op;
  }
}

}  // namespace

TransformResult reorder_expressions(const Subject& s, const PassConfig& cfg) {
  const bool branches_only = cfg.variant == "branch_inversion";
  if (!cfg.variant.empty() && !branches_only) throw Error(ErrorCode::InvalidParam, "unknown variant " + cfg.variant);
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
    std::size_t index;  // instrs.size() for a branch terminator
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    for (const auto& b : r.program.functions[f].blocks) {
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const auto& in = b.instrs[i];
        if (!branches_only && in.op == Opcode::Binary && (is_commutative(in.bin) || mirrored(in.bin) != in.bin))
          sites.push_back({f, b.id, i});
      }
      if (b.term.op == Opcode::Branch) sites.push_back({f, b.id, b.instrs.size()});
    }
  if (sites.empty()) no_sites("no reorderable expressions");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) {
    const Ref& ref = sites[*it];
    auto& fn = r.program.functions[ref.fn];
    auto& b = fn.block(ref.block);
    if (ref.index == b.instrs.size()) {
      Reg c = b.term.args[0];
      Reg nc = fn.new_reg(Type::Bool);
      auto& bb = fn.block(ref.block);
      std::swap(bb.term.targets[0], bb.term.targets[1]);
      bb.term.args[0] = nc;
      append_instrs(fn, ref.block, {make_unary(UnOp::Not, nc, c, Tag::Original)});
      r.sites.push_back(Site{fn.name, ref.block, "branch inverted"});
    } else {
      auto& in = b.instrs[ref.index];
      std::swap(in.args[0], in.args[1]);
      in.bin = mirrored(in.bin);
      r.sites.push_back(Site{fn.name, ref.block, "operands swapped at " + std::to_string(ref.index)});
    }
  }
  return r;
}

TransformResult reorder_statements(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    for (const auto& b : fn.blocks)
      if (b.instrs.size() >= 2 && !has_trap_entries(fn, b.id)) sites.push_back({f, b.id});
  }
  if (sites.empty()) no_sites("no trap-free blocks with two or more instructions");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    auto& b = fn.block(sites[k].block);
    auto g = def_use(b);
    const std::size_t n = b.instrs.size();
    std::vector<std::size_t> indeg(n, 0);
    std::vector<std::vector<std::size_t>> out(n);
    for (auto [i, j] : g.edges) {
      out[i].push_back(j);
      ++indeg[j];
    }
    Rng rng(mix_seed(cfg.seed, 1000 + k));
    std::vector<std::size_t> ready, order;
    for (std::size_t i = 0; i < n; ++i)
      if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
      std::size_t pick = static_cast<std::size_t>(rng.below(ready.size()));
      std::size_t i = ready[pick];
      ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
      order.push_back(i);
      for (std::size_t j : out[i])
        if (--indeg[j] == 0) ready.push_back(j);
      std::sort(ready.begin(), ready.end());
    }
    std::vector<Instruction> instrs;
    for (std::size_t i : order) instrs.push_back(b.instrs[i]);
    b.instrs = std::move(instrs);
    r.sites.push_back(Site{fn.name, b.id, "statements permuted"});
  }
  return r;
}

TransformResult reorder_blocks(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  std::vector<std::size_t> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    if (r.program.functions[f].blocks.size() >= 3) sites.push_back(f);
  if (sites.empty()) no_sites("no function with three or more blocks");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k]];
    std::vector<BasicBlock> rest;
    BasicBlock entry;
    for (auto& b : fn.blocks) {
      if (b.id == fn.entry) entry = std::move(b);
      else rest.push_back(std::move(b));
    }
    Rng(mix_seed(cfg.seed, 1000 + k)).shuffle(rest);
    fn.blocks.clear();
    fn.blocks.push_back(std::move(entry));
    for (auto& b : rest) fn.blocks.push_back(std::move(b));
    r.sites.push_back(Site{fn.name, std::nullopt, "block layout permuted"});
  }
  return r;
}

TransformResult method_reordering(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  if (r.program.functions.size() < 2) no_sites("fewer than two functions");
  Rng(mix_seed(cfg.seed, 0x3E7)).shuffle(r.program.functions);
  std::string order;
  for (const auto& f : r.program.functions) order += (order.empty() ? "" : ",") + f.name;
  r.sites.push_back(Site{"", std::nullopt, order});
  return r;
}

namespace {

/// A counted loop `for (i = A; i < n; i = i + 1)` whose iterations touch only
/// element i of loop-invariant arrays and otherwise compute iteration-local temps.
struct CountedLoop {
  BlockId header = 0;
  BlockId exit = 0;
  Reg index = 0;
  Reg bound = 0;
  std::vector<Instruction> pre;   // header instructions before the compare
  std::vector<Instruction> body;  // chain instructions minus the increment
  std::vector<BlockId> chain;
  std::set<Reg> arrays;           // arrays that must be non-null and long enough
};

std::optional<CountedLoop> match_counted_loop(const Function& fn, const NaturalLoop& loop, const Liveness& lv) {
  CountedLoop cl;
  cl.header = loop.header;
  const auto& h = fn.block(loop.header);
  if (h.instrs.empty() || h.term.op != Opcode::Branch) return std::nullopt;
  const auto& cmp = h.instrs.back();
  if (cmp.op != Opcode::Binary || cmp.bin != BinOp::Lt || cmp.dst != h.term.args[0]) return std::nullopt;
  cl.index = cmp.args[0];
  cl.bound = cmp.args[1];
  if (cl.index == cl.bound || fn.regs[cl.index] != Type::Int) return std::nullopt;
  if (!loop.body.count(h.term.targets[0]) || loop.body.count(h.term.targets[1])) return std::nullopt;
  cl.exit = h.term.targets[1];

  // Chain of jump-linked blocks back to the header.
  BlockId cur = h.term.targets[0];
  while (cur != loop.header) {
    if (cl.chain.size() >= 4 || std::find(cl.chain.begin(), cl.chain.end(), cur) != cl.chain.end()) return std::nullopt;
    const auto& b = fn.block(cur);
    if (b.term.op != Opcode::Jump) return std::nullopt;
    cl.chain.push_back(cur);
    cur = b.term.targets[0];
  }
  if (cl.chain.size() + 1 != loop.body.size()) return std::nullopt;
  auto preds = predecessor_map(fn);
  for (std::size_t i = 0; i < cl.chain.size(); ++i) {
    const auto& p = preds[cl.chain[i]];
    BlockId want = i == 0 ? loop.header : cl.chain[i - 1];
    if (p.size() != 1 || p[0] != want) return std::nullopt;
  }
  auto handlers = handler_blocks(fn);
  for (BlockId b : loop.body)
    if (handlers.count(b)) return std::nullopt;

  // Increment at the end of the latch.
  std::vector<Instruction> all;
  for (BlockId b : cl.chain)
    for (const auto& in : fn.block(b).instrs) all.push_back(in);
  if (all.size() < 2) return std::nullopt;
  const auto& inc = all.back();
  if (inc.op != Opcode::Binary || inc.bin != BinOp::Add || inc.dst != cl.index) return std::nullopt;
  Reg one = inc.args[0] == cl.index ? inc.args[1] : inc.args[0];
  if (!(inc.args[0] == cl.index || inc.args[1] == cl.index) || one == cl.index) return std::nullopt;
  const auto& k = all[all.size() - 2];
  if (k.op != Opcode::Const || k.dst != one || k.imm != 1) return std::nullopt;
  cl.body.assign(all.begin(), all.end() - 2);

  std::set<Reg> loop_defs;
  for (BlockId b : loop.body)
    for (const auto& in : fn.block(b).instrs)
      if (in.dst) loop_defs.insert(*in.dst);

  // Header prefix: invariant computations of the bound.
  std::set<Reg> pre_defs;
  for (std::size_t i = 0; i + 1 < h.instrs.size(); ++i) {
    const auto& in = h.instrs[i];
    if (in.op != Opcode::Const && in.op != Opcode::Len && in.op != Opcode::Move) return std::nullopt;
    for (Reg a : in.args)
      if (loop_defs.count(a) && !pre_defs.count(a)) return std::nullopt;
    if (*in.dst == cl.index) return std::nullopt;
    if (in.op == Opcode::Len) cl.arrays.insert(in.args[0]);
    pre_defs.insert(*in.dst);
    cl.pre.push_back(in);
  }
  if (loop_defs.count(cl.bound) && !pre_defs.count(cl.bound)) return std::nullopt;

  // Body: only element-i memory traffic on invariant arrays, no effects, no traps otherwise.
  std::set<Reg> body_defs;
  for (const auto& in : cl.body) {
    switch (in.op) {
      case Opcode::Const:
      case Opcode::Move:
      case Opcode::Unary:
      case Opcode::Select: break;
      case Opcode::Binary:
        if (in.bin == BinOp::Div || in.bin == BinOp::Rem) return std::nullopt;
        break;
      case Opcode::Load:
      case Opcode::Store:
        if (in.args[1] != cl.index || loop_defs.count(in.args[0])) return std::nullopt;
        cl.arrays.insert(in.args[0]);
        break;
      case Opcode::Len:
        if (loop_defs.count(in.args[0])) return std::nullopt;
        cl.arrays.insert(in.args[0]);
        break;
      default: return std::nullopt;
    }
    if (in.dst) {
      if (*in.dst == cl.index || pre_defs.count(*in.dst)) return std::nullopt;
      body_defs.insert(*in.dst);
    }
  }
  body_defs.insert(one);
  // Iteration-local temps: dead at the header and at the exit.
  const auto& in_h = lv.live_in.at(loop.header);
  const auto& in_x = lv.live_in.at(cl.exit);
  for (Reg d : body_defs)
    if (in_h[d] || in_x[d]) return std::nullopt;
  for (Reg d : pre_defs)
    if (in_x[d] && d != cl.bound) return std::nullopt;
  if (in_x[*cmp.dst]) return std::nullopt;
  return cl;
}

void reverse_loop(Function& fn, const CountedLoop& cl) {
  auto preds = predecessor_map(fn);
  std::vector<BlockId> outside;
  for (BlockId p : preds[cl.header])
    if (std::find(cl.chain.begin(), cl.chain.end(), p) == cl.chain.end()) outside.push_back(p);

  // Guard chain: null checks, then bounds.
  std::vector<BlockId> guards;
  BlockId anchor = fn.blocks.back().id;
  for (Reg a : cl.arrays) {
    BasicBlock g;
    anchor = add_block(fn, std::move(g), anchor);
    guards.push_back(anchor);
    (void)a;
  }
  BasicBlock bounds;
  BlockId bounds_id = add_block(fn, std::move(bounds), anchor);
  BasicBlock r0, rh, rb, rx;
  BlockId r0_id = add_block(fn, std::move(r0), bounds_id);
  BlockId rh_id = add_block(fn, std::move(rh), r0_id);
  BlockId rb_id = add_block(fn, std::move(rb), rh_id);
  BlockId rx_id = add_block(fn, std::move(rx), rb_id);

  std::size_t gi = 0;
  for (Reg a : cl.arrays) {
    Reg nul = fn.new_reg(Type::Array);
    Reg isnull = fn.new_reg(Type::Bool);
    auto& g = fn.block(guards[gi]);
    g.instrs = {make_const(nul, -1), make_binary(BinOp::Eq, isnull, a, nul)};
    BlockId next = gi + 1 < guards.size() ? guards[gi + 1] : bounds_id;
    g.term = make_branch(isnull, cl.header, next);
    ++gi;
  }
  {
    std::vector<Instruction> code = cl.pre;
    Reg zero = fn.new_reg(Type::Int);
    Reg ok = fn.new_reg(Type::Bool);
    code.push_back(make_const(zero, 0));
    code.push_back(make_binary(BinOp::Ge, ok, cl.index, zero));
    for (Reg a : cl.arrays) {
      Reg la = fn.new_reg(Type::Int);
      Reg fits = fn.new_reg(Type::Bool);
      Reg both = fn.new_reg(Type::Bool);
      code.push_back(make_len(la, a));
      code.push_back(make_binary(BinOp::Le, fits, cl.bound, la));
      code.push_back(make_binary(BinOp::And, both, ok, fits));
      ok = both;
    }
    fn.block(bounds_id).instrs = std::move(code);
    fn.block(bounds_id).term = make_branch(ok, r0_id, cl.header);
  }
  Reg j = fn.new_reg(Type::Int);
  {
    Reg one = fn.new_reg(Type::Int);
    fn.block(r0_id).instrs = {make_move(j, cl.bound), make_const(one, 1), make_binary(BinOp::Sub, j, j, one)};
    fn.block(r0_id).term = make_jump(rh_id);
  }
  {
    Reg c = fn.new_reg(Type::Bool);
    fn.block(rh_id).instrs = {make_binary(BinOp::Ge, c, j, cl.index)};
    fn.block(rh_id).term = make_branch(c, rb_id, rx_id);
  }
  {
    std::vector<Instruction> body;
    for (auto in : cl.body) {
      for (auto& a : in.args)
        if (a == cl.index) a = j;
      body.push_back(in);
    }
    Reg one = fn.new_reg(Type::Int);
    body.push_back(make_const(one, 1));
    body.push_back(make_binary(BinOp::Sub, j, j, one));
    fn.block(rb_id).instrs = std::move(body);
    fn.block(rb_id).term = make_jump(rh_id);
  }
  {
    Reg below = fn.new_reg(Type::Bool);
    fn.block(rx_id).instrs = {make_binary(BinOp::Lt, below, cl.index, cl.bound),
                              make_select(cl.index, below, cl.bound, cl.index)};
    fn.block(rx_id).term = make_jump(cl.exit);
  }
  BlockId first = guards.empty() ? bounds_id : guards.front();
  for (BlockId p : outside) retarget(fn.block(p).term, cl.header, first);
}

}  // namespace

TransformResult reorder_loops(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId header;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    auto lv = liveness(fn);
    for (const auto& loop : single_entry_loops(fn))
      if (match_counted_loop(fn, loop, lv)) sites.push_back({f, loop.header});
  }
  if (sites.empty()) no_sites("no counted loop with independent iterations");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    auto lv = liveness(fn);
    for (const auto& loop : single_entry_loops(fn)) {
      if (loop.header != sites[k].header) continue;
      auto cl = match_counted_loop(fn, loop, lv);
      if (!cl) break;
      reverse_loop(fn, *cl);
      r.sites.push_back(Site{fn.name, loop.header, "loop reversed behind a bounds guard"});
      break;
    }
  }
  return r;
}

}  // namespace cfo::transforms::detail
