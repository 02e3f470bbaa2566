#include <algorithm>

#include "cfo/metrics/metrics.hpp"
#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms {

using namespace ir;
using namespace detail;
using opaque::Truth;

namespace {

/// Adds a never-taken edge from the entry block to `target`.
void entry_edge(Function& fn, BlockId target, std::uint64_t seed) {
  BlockId s = fn.entry;
  if (fn.block(s).term.op != Opcode::Jump) split_block(fn, s, fn.block(s).instrs.size());
  BlockId cont = fn.block(s).term.targets[0];
  std::vector<Instruction> code;
  Reg p = emit_predicate(fn, code, Truth::AlwaysFalse, seed);
  append_instrs(fn, s, std::move(code));
  fn.block(s).term = make_branch(p, target, cont, Tag::Opaque);
}

/// Loop-body blocks other than the header that can take a second entry.
std::vector<std::pair<BlockId, BlockId>> side_entries(const Function& fn) {
  auto handlers = handler_blocks(fn);
  std::vector<std::pair<BlockId, BlockId>> out;  // (header, target)
  for (const auto& loop : natural_loops(fn))
    for (const auto& b : fn.blocks)
      if (loop.body.count(b.id) && b.id != loop.header && !handlers.count(b.id) && b.id != fn.entry)
        out.push_back({loop.header, b.id});
  return out;
}

std::vector<std::pair<BlockId, BlockId>> ensure_loop(Function& fn, std::uint64_t seed) {
  auto cands = side_entries(fn);
  if (!cands.empty()) return cands;
  add_dummy_loop(fn, fn.entry, fn.block(fn.entry).instrs.size(), seed);
  return side_entries(fn);
}

}  // namespace

Function make_irreducible(const Function& in, std::uint64_t seed) {
  Function fn = in;
  auto cands = ensure_loop(fn, seed);
  Rng rng(mix_seed(seed, 0x1221));
  rng.shuffle(cands);
  for (const auto& [header, target] : cands) {
    Function next = fn;
    entry_edge(next, target, mix_seed(seed, target));
    if (!metrics::is_reducible(next)) return next;
  }
  throw Error(ErrorCode::Internal, fn.name + ": no side entry made the graph irreducible");
}

namespace detail {

namespace {

TransformResult per_function(const Subject& s, const PassConfig& cfg, const char* what,
                             Function (*fn_pass)(const Function&, std::uint64_t)) {
  TransformResult r;
  r.program = s.ir;
  if (r.program.functions.empty()) no_sites("no functions");
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    auto& fn = r.program.functions[f];
    fn = fn_pass(fn, mix_seed(cfg.seed, 1000 + f));
    r.sites.push_back(Site{fn.name, std::nullopt, what});
  }
  return r;
}

Function intersect(const Function& in, std::uint64_t seed) {
  Function fn = in;
  auto cands = ensure_loop(fn, seed);
  Rng rng(mix_seed(seed, 0x1A7E));
  rng.shuffle(cands);
  for (const auto& [header, t] : cands) {
    Function next = fn;
    // Second loop {t, x} through a never-taken edge, then a never-taken entry into x.
    BlockId tail = split_block(next, t, next.block(t).instrs.size());
    BasicBlock x;
    x.instrs = dead_filler(next, seed, 3);
    x.term = make_jump(t, Tag::Dead);
    BlockId xid = add_block(next, std::move(x), tail);
    std::vector<Instruction> code;
    Reg p = emit_predicate(next, code, Truth::AlwaysFalse, mix_seed(seed, 7));
    append_instrs(next, t, std::move(code));
    next.block(t).term = make_branch(p, xid, tail, Tag::Opaque);
    entry_edge(next, xid, mix_seed(seed, 11));
    if (!metrics::is_reducible(next)) return next;
  }
  throw Error(ErrorCode::Internal, fn.name + ": intersecting loops stayed reducible");
}

Function goto_chain(const Function& in, std::uint64_t seed) {
  Function fn = in;
  Rng rng(mix_seed(seed, 0x6070));
  std::size_t cut = fn.blocks.size() < 2 ? fn.blocks.size() : static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(fn.blocks.size()) - 1));
  std::vector<BasicBlock> layout(fn.blocks.begin() + static_cast<std::ptrdiff_t>(cut), fn.blocks.end());
  layout.insert(layout.end(), fn.blocks.begin(), fn.blocks.begin() + static_cast<std::ptrdiff_t>(cut));
  fn.blocks = std::move(layout);
  BasicBlock e;
  e.term = make_jump(fn.entry, Tag::Opaque);
  BlockId eid = add_block(fn, std::move(e));
  std::rotate(fn.blocks.begin(), fn.blocks.end() - 1, fn.blocks.end());
  fn.entry = eid;
  return make_irreducible(fn, seed);
}

}  // namespace

TransformResult reducible_to_irreducible(const Subject& s, const PassConfig& cfg) {
  return per_function(s, cfg, "side entry into a loop", make_irreducible);
}

TransformResult intersecting_loops(const Subject& s, const PassConfig& cfg) {
  return per_function(s, cfg, "intersecting loops", intersect);
}

TransformResult goto_augmentation(const Subject& s, const PassConfig& cfg) {
  return per_function(s, cfg, "layout halves swapped and chained", goto_chain);
}

TransformResult basic_block_fission(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    for (const auto& b : r.program.functions[f].blocks) {
      std::size_t lo = !b.instrs.empty() && b.instrs[0].op == Opcode::Catch ? 1 : 0;
      if (b.instrs.size() >= lo + 2) sites.push_back({f, b.id});
    }
  if (sites.empty()) no_sites("no block with two or more instructions");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    const auto& b = fn.block(sites[k].block);
    std::size_t lo = !b.instrs.empty() && b.instrs[0].op == Opcode::Catch ? 1 : 0;
    std::uint64_t seed = mix_seed(cfg.seed, 1000 + k);
    std::size_t at = static_cast<std::size_t>(
        Rng(seed).range(static_cast<std::int64_t>(lo + 1), static_cast<std::int64_t>(b.instrs.size()) - 1));
    fn = insert_opaque_guard(fn, GuardSite{sites[k].block, at}, Truth::AlwaysTrue, PayloadKind::DeadBlock, seed);
    r.sites.push_back(Site{fn.name, sites[k].block, "split at " + std::to_string(at)});
  }
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    r.program.functions[f] = make_irreducible(r.program.functions[f], mix_seed(cfg.seed, 5000 + f));
  return r;
}

TransformResult indirect_if(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
  };
  std::vector<Ref> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    for (const auto& b : r.program.functions[f].blocks)
      if (b.term.op == Opcode::Branch) sites.push_back({f, b.id});
  if (sites.empty()) no_sites("no conditional branches");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    BlockId t = fn.block(sites[k].block).term.targets[0];
    Reg code = fn.new_reg(Type::Int);
    BasicBlock g, h;
    g.term = make_jump(t);
    h.instrs = {make_catch(code, Tag::Dead)};
    auto filler = dead_filler(fn, mix_seed(cfg.seed, k), 3);
    h.instrs.insert(h.instrs.end(), filler.begin(), filler.end());
    h.term = make_jump(t, Tag::Dead);
    BlockId gid = add_block(fn, std::move(g), sites[k].block);
    BlockId hid = add_block(fn, std::move(h), gid);
    fn.traps.push_back(TrapEntry{gid, 0, 1, hid, TrapKindSet::all()});
    fn.block(sites[k].block).term.targets[0] = gid;
    r.sites.push_back(Site{fn.name, sites[k].block, "branch through a trapped goto"});
  }
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    r.program.functions[f] = make_irreducible(r.program.functions[f], mix_seed(cfg.seed, 5000 + f));
  return r;
}

}  // namespace detail
}  // namespace cfo::transforms
