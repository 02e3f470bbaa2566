#include <algorithm>
#include <set>

#include "cfo/harness/harness.hpp"
#include "cfo/ir/analysis.hpp"
#include "cfo/metrics/metrics.hpp"

namespace cfo::harness {

using transforms::PassId;

bool has_unaligned_trap(const ir::Function& fn) {
  return std::any_of(fn.traps.begin(), fn.traps.end(), [&](const ir::TrapEntry& t) {
    const auto* b = fn.find_block(t.block);
    return b && (t.start != 0 || t.end != b->instrs.size() + 1);
  });
}

bool is_single_dispatch_loop(const ir::Function& fn) {
  std::set<ir::BlockId> headers;
  for (const auto& loop : ir::natural_loops(fn)) headers.insert(loop.header);
  if (headers.size() != 1) return false;
  return fn.block(*headers.begin()).term.op == ir::Opcode::Switch;
}

namespace {

bool virtualizable(const ir::Function& fn) {
  if (!fn.traps.empty()) return false;
  for (const auto& b : fn.blocks)
    for (const auto& in : b.instrs)
      if (in.op == ir::Opcode::Call) return false;
  return true;
}

}  // namespace

ProxyCheck dr_proxy(PassId pass, const ir::Program& before, const ir::Program& after) {
  ProxyCheck c;
  std::size_t eligible = 0, hits = 0;
  switch (pass) {
    case PassId::GotoAugmentation:
    case PassId::ReducibleToIrreducible:
    case PassId::IntersectingLoops:
    case PassId::BasicBlockFission:
    case PassId::IndirectIf:
      c.proxy = "irreducible_cfg";
      for (const auto& fn : after.functions) {
        ++eligible;
        if (!metrics::is_reducible(fn)) ++hits;
      }
      c.triggered = eligible > 0 && hits == eligible;
      break;
    case PassId::PartiallyTrappingSwitch:
      c.proxy = "unaligned_trap_range";
      for (const auto& fn : after.functions) {
        ++eligible;
        if (has_unaligned_trap(fn)) ++hits;
      }
      // Sites are a sampled subset; one unaligned range anywhere is the proxy.
      c.triggered = hits > 0;
      break;
    case PassId::TableInterpretation:
      c.proxy = "single_dispatch_loop";
      for (const auto& fn : before.functions) {
        const auto* out = after.find(fn.name);
        if (!out || !virtualizable(fn)) continue;
        ++eligible;
        if (is_single_dispatch_loop(*out)) ++hits;
      }
      c.triggered = eligible > 0 && hits == eligible;
      break;
    default: {
      c.proxy = "reducibility_unchanged";
      for (const auto& fn : before.functions) {
        const auto* out = after.find(fn.name);
        if (!out) continue;
        ++eligible;
        if (metrics::is_reducible(fn) == metrics::is_reducible(*out)) ++hits;
      }
      bool any_before = std::any_of(before.functions.begin(), before.functions.end(),
                                    [](const ir::Function& f) { return !metrics::is_reducible(f); });
      bool any_after = std::any_of(after.functions.begin(), after.functions.end(),
                                   [](const ir::Function& f) { return !metrics::is_reducible(f); });
      c.triggered = hits == eligible && any_before == any_after;
      break;
    }
  }
  c.detail = std::to_string(hits) + "/" + std::to_string(eligible) + " functions";
  return c;
}

}  // namespace cfo::harness
