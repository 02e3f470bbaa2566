#include <functional>
#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms::detail {

namespace {

std::vector<BlockId> in_layout(const Function& fn, const std::set<BlockId>& body) {
  std::vector<BlockId> out;
  for (const auto& b : fn.blocks)
    if (body.count(b.id)) out.push_back(b.id);
  return out;
}

std::vector<BlockId> outside_preds(const Function& fn, const NaturalLoop& loop) {
  std::vector<BlockId> out;
  auto preds = predecessor_map(fn);
  for (BlockId p : preds[loop.header])
    if (!loop.body.count(p)) out.push_back(p);
  return out;
}

std::vector<BlockId> latches(const Function& fn, const NaturalLoop& loop) {
  std::vector<BlockId> out;
  for (BlockId b : in_layout(fn, loop.body)) {
    const auto& t = fn.block(b).term.targets;
    if (std::find(t.begin(), t.end(), loop.header) != t.end()) out.push_back(b);
  }
  return out;
}

/// cnt = cnt + 1; br (cnt < limit), stay, leave
BasicBlock counter_check(Function& fn, Reg cnt, std::int64_t limit, BlockId stay, BlockId leave) {
  BasicBlock b;
  Reg one = fn.new_reg(Type::Int);
  Reg k = fn.new_reg(Type::Int);
  Reg c = fn.new_reg(Type::Bool);
  b.instrs = {make_const(one, 1), make_binary(BinOp::Add, cnt, cnt, one), make_const(k, limit),
              make_binary(BinOp::Lt, c, cnt, k)};
  b.term = make_branch(c, stay, leave);
  return b;
}

void fission(Function& fn, const NaturalLoop& loop, std::uint64_t seed) {
  auto blocks = in_layout(fn, loop.body);
  auto outside = outside_preds(fn, loop);
  auto ids = copy_blocks(fn, blocks, fn.blocks.back().id);
  BlockId h2 = ids.at(loop.header);
  Reg cnt = fn.new_reg(Type::Int);
  std::int64_t split = Rng(mix_seed(seed, 0xF15)).range(1, 3);
  BlockId chk = add_block(fn, counter_check(fn, cnt, split, h2, loop.header));
  BasicBlock pre;
  pre.instrs = {make_const(cnt, 0)};
  pre.term = make_jump(h2);
  BlockId pid = add_block(fn, std::move(pre));
  for (BlockId b : blocks) {
    BlockId c = ids.at(b);
    auto& t = fn.block(c).term.targets;
    if (std::find(t.begin(), t.end(), h2) != t.end()) retarget(fn.block(c).term, h2, chk);
  }
  for (BlockId p : outside) retarget(fn.block(p).term, loop.header, pid);
}

void blocking(Function& fn, const NaturalLoop& loop, std::int64_t size) {
  auto outside = outside_preds(fn, loop);
  auto back = latches(fn, loop);
  Reg cnt = fn.new_reg(Type::Int);
  BasicBlock outer;
  outer.instrs = {make_const(cnt, 0)};
  outer.term = make_jump(loop.header);
  BlockId oid = add_block(fn, std::move(outer));
  BlockId chk = add_block(fn, counter_check(fn, cnt, size, loop.header, oid));
  for (BlockId b : back) retarget(fn.block(b).term, loop.header, chk);
  for (BlockId p : outside) retarget(fn.block(p).term, loop.header, oid);
}

void unrolling(Function& fn, const NaturalLoop& loop, std::int64_t factor) {
  auto blocks = in_layout(fn, loop.body);
  auto back = latches(fn, loop);
  std::vector<std::map<BlockId, BlockId>> copies;
  for (std::int64_t i = 1; i < factor; ++i) copies.push_back(copy_blocks(fn, blocks, fn.blocks.back().id));
  BlockId first = copies.front().at(loop.header);
  for (BlockId b : back) retarget(fn.block(b).term, loop.header, first);
  for (std::size_t j = 0; j < copies.size(); ++j) {
    BlockId own = copies[j].at(loop.header);
    BlockId next = j + 1 < copies.size() ? copies[j + 1].at(loop.header) : loop.header;
    for (BlockId b : back) retarget(fn.block(copies[j].at(b)).term, own, next);
  }
}

TransformResult loop_pass(const Subject& s, const PassConfig& cfg, const char* what,
                          const std::function<void(Function&, const NaturalLoop&, std::uint64_t)>& apply) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId header;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    for (const auto& loop : single_entry_loops(r.program.functions[f])) sites.push_back({f, loop.header});
  if (sites.empty()) no_sites("no single-entry loops");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    for (const auto& loop : single_entry_loops(fn))
      if (loop.header == sites[k].header) {
        apply(fn, loop, mix_seed(cfg.seed, 1000 + k));
        r.sites.push_back(Site{fn.name, loop.header, what});
        break;
      }
  }
  return r;
}

}  // namespace

TransformResult loop_fission(const Subject& s, const PassConfig& cfg) {
  return loop_pass(s, cfg, "loop split into two consecutive loops", fission);
}

TransformResult loop_blocking(const Subject& s, const PassConfig& cfg) {
  std::int64_t size = cfg.param("block_size", 4);
  if (size < 1) throw Error(ErrorCode::InvalidParam, "block_size must be at least 1");
  return loop_pass(s, cfg, "loop strip-mined", [size](Function& fn, const NaturalLoop& l, std::uint64_t) {
    blocking(fn, l, size);
  });
}

TransformResult loop_unrolling(const Subject& s, const PassConfig& cfg) {
  std::int64_t factor = cfg.param("unroll_factor", 2);
  if (factor < 2) throw Error(ErrorCode::InvalidParam, "unroll_factor must be at least 2");
  if (factor > 16) throw Error(ErrorCode::InvalidParam, "unroll_factor must be at most 16");
  return loop_pass(s, cfg, "loop unrolled", [factor](Function& fn, const NaturalLoop& l, std::uint64_t) {
    unrolling(fn, l, factor);
  });
}

}  // namespace cfo::transforms::detail
