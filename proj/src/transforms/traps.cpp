#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms::detail {

namespace {

bool safe(const Instruction& in) { return in.op != Opcode::Catch && !may_trap(in); }

/// Runs of consecutive trap-free instructions as [begin, end).
std::vector<std::pair<std::size_t, std::size_t>> safe_runs(const BasicBlock& b) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  while (i < b.instrs.size()) {
    if (!safe(b.instrs[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < b.instrs.size() && safe(b.instrs[j])) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

}  // namespace

// Trap entries over code that cannot fault, leading to a handler that is
// never entered. The ranges are deliberately partial so the handler table no
// longer lines up with block boundaries.
TransformResult partially_trapping_switch(const Subject& s, const PassConfig& cfg) {
  std::int64_t count = cfg.param("trap_count", 1);
  if (count < 1) throw Error(ErrorCode::InvalidParam, "trap_count must be at least 1");
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::size_t fn;
    BlockId block;
  };
  std::vector<Ref> sites, switchy;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    std::set<BlockId> near_switch;
    for (const auto& b : fn.blocks)
      if (b.term.op == Opcode::Switch) {
        near_switch.insert(b.id);
        near_switch.insert(b.term.targets.begin(), b.term.targets.end());
      }
    for (const auto& b : fn.blocks)
      if (!safe_runs(b).empty()) {
        sites.push_back({f, b.id});
        if (near_switch.count(b.id)) switchy.push_back({f, b.id});
      }
  }
  if (!switchy.empty()) sites = switchy;
  if (sites.empty()) no_sites("no trap-free instructions");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k].fn];
    Rng rng(mix_seed(cfg.seed, 1000 + k));
    BasicBlock h;
    Reg code = fn.new_reg(Type::Int);
    h.instrs = {make_catch(code, Tag::Dead)};
    auto filler = dead_filler(fn, mix_seed(cfg.seed, k), 3);
    h.instrs.insert(h.instrs.end(), filler.begin(), filler.end());
    if (fn.ret == Type::Void) {
      h.term = make_return(std::nullopt, Tag::Dead);
    } else {
      Reg v = fn.new_reg(fn.ret);
      h.instrs.push_back(make_const(v, default_value(fn.ret), Tag::Dead));
      h.term = make_return(v, Tag::Dead);
    }
    BlockId hid = add_block(fn, std::move(h));
    for (std::int64_t i = 0; i < count; ++i) {
      auto runs = safe_runs(fn.block(sites[k].block));
      auto [b, e] = rng.pick(runs);
      auto start = static_cast<std::uint32_t>(rng.range(static_cast<std::int64_t>(b), static_cast<std::int64_t>(e) - 1));
      auto end = static_cast<std::uint32_t>(rng.range(start + 1, static_cast<std::int64_t>(e)));
      fn.traps.push_back(TrapEntry{sites[k].block, start, end, hid, TrapKindSet::all()});
    }
    r.sites.push_back(Site{fn.name, sites[k].block, "partial trap range to a dead handler"});
  }
  return r;
}

// Handlers move next to the code they protect, and a handler that cannot
// fault is placed inside its own protected range.
TransformResult combine_try_catch(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  std::vector<std::size_t> sites;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f)
    if (!r.program.functions[f].traps.empty()) sites.push_back(f);
  if (sites.empty()) no_sites("no try/catch regions");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k]];
    std::size_t merged = 0;
    for (BlockId h : handler_blocks(fn)) {
      // Layout: handler right before the first block it protects.
      std::size_t first = fn.blocks.size();
      for (const auto& t : fn.traps)
        if (t.handler == h && t.block != h) first = std::min(first, fn.block_index(t.block));
      if (first < fn.blocks.size()) {
        std::size_t at = std::max<std::size_t>(first, 1);
        std::size_t from = fn.block_index(h);
        BasicBlock moved = fn.blocks[from];
        fn.blocks.erase(fn.blocks.begin() + static_cast<std::ptrdiff_t>(from));
        if (from < at) --at;
        fn.blocks.insert(fn.blocks.begin() + static_cast<std::ptrdiff_t>(at), std::move(moved));
      }
      const auto& hb = fn.block(h);
      bool quiet = std::all_of(hb.instrs.begin(), hb.instrs.end(), [](const Instruction& in) { return !may_trap(in); }) &&
                   hb.term.op != Opcode::Throw;
      bool already = std::any_of(fn.traps.begin(), fn.traps.end(),
                                 [&](const TrapEntry& t) { return t.block == h && t.handler == h; });
      if (quiet && !already) {
        fn.traps.push_back(TrapEntry{h, 0, static_cast<std::uint32_t>(hb.instrs.size()) + 1, h, TrapKindSet::all()});
        ++merged;
      }
    }
    r.sites.push_back(Site{fn.name, std::nullopt, std::to_string(merged) + " handler(s) merged into their try range"});
  }
  return r;
}

}  // namespace cfo::transforms::detail
