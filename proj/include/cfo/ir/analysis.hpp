#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "cfo/ir/ir.hpp"

namespace cfo::ir {

/// Plain directed graph over dense node indices. Node 0..n-1; `entry` is the root.
struct Digraph {
  std::size_t n = 0;
  std::size_t entry = 0;
  std::vector<std::vector<std::size_t>> succ;

  std::vector<std::vector<std::size_t>> predecessors() const;
};

/// CFG of a function as a Digraph. Node i is fn.blocks[i]. Trap edges
/// (covered block -> handler) are added when `with_traps` is set.
Digraph to_digraph(const Function& fn, bool with_traps);

/// Nodes reachable from the entry, as a mask.
std::vector<bool> reachable(const Digraph& g);

/// Immediate dominators (Cooper, Harvey, Kennedy). idom[entry] = entry;
/// unreachable nodes get npos.
inline constexpr std::size_t npos = static_cast<std::size_t>(-1);
std::vector<std::size_t> immediate_dominators(const Digraph& g);
bool dominates(const std::vector<std::size_t>& idom, std::size_t a, std::size_t b);

struct DominatorTree {
  std::map<BlockId, BlockId> idom;   // reachable blocks only
  std::vector<BlockId> unreachable;  // excluded from the tree
};

/// Dominator tree over normal and trap edges.
DominatorTree dominators(const Function& fn);

/// Dependence graph over instruction indices of one block (terminator excluded).
struct DefUseGraph {
  std::size_t size = 0;
  std::set<std::pair<std::size_t, std::size_t>> edges;  // i < j always

  bool has_edge(std::size_t i, std::size_t j) const { return edges.count({i, j}) != 0; }
};

DefUseGraph def_use(const BasicBlock& block);

/// Register liveness, trap-aware: a block covered by a trap entry keeps the
/// handler's live-in set alive across the covered range.
struct Liveness {
  std::map<BlockId, std::vector<bool>> live_in;
  std::map<BlockId, std::vector<bool>> live_out;
};

Liveness liveness(const Function& fn);

/// Registers live immediately before instruction `index` of `block`
/// (index == instrs.size() means before the terminator).
std::vector<bool> live_before(const Function& fn, const Liveness& lv, BlockId block, std::size_t index);

struct NaturalLoop {
  BlockId header = 0;
  std::set<BlockId> body;  // includes header
  std::vector<std::pair<BlockId, BlockId>> back_edges;
};

/// Natural loops over normal edges, one per header, ordered by header layout position.
std::vector<NaturalLoop> natural_loops(const Function& fn);

/// Normal-edge predecessors of each block (keyed by id).
std::map<BlockId, std::vector<BlockId>> predecessor_map(const Function& fn);

}  // namespace cfo::ir
