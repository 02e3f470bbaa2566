#pragma once

// Test-side oracles. These deliberately share no code with the library
// algorithms they check.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "cfo/ir/analysis.hpp"
#include "cfo/ir/ir.hpp"

namespace oracle {

inline std::vector<bool> reach_avoiding(const cfo::ir::Digraph& g, std::size_t avoid) {
  std::vector<bool> seen(g.n, false);
  if (g.entry == avoid) return seen;
  std::vector<std::size_t> stack{g.entry};
  seen[g.entry] = true;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto w : g.succ[v])
      if (w != avoid && !seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

/// Reducibility by exhaustive T1/T2 interval reduction: drop self loops,
/// fold any non-entry node with a single predecessor into it. The graph is
/// reducible iff this ends in one node.
inline bool t1t2_reducible(const cfo::ir::Digraph& g) {
  auto live = reach_avoiding(g, static_cast<std::size_t>(-1));
  std::map<std::size_t, std::set<std::size_t>> succ, pred;
  for (std::size_t v = 0; v < g.n; ++v) {
    if (!live[v]) continue;
    succ[v];
    pred[v];
  }
  for (std::size_t v = 0; v < g.n; ++v)
    if (live[v])
      for (auto w : g.succ[v]) {
        succ[v].insert(w);
        pred[w].insert(v);
      }
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [v, s] : succ)
      if (s.erase(v)) {
        pred[v].erase(v);
        changed = true;
      }
    for (auto it = succ.begin(); it != succ.end(); ++it) {
      auto v = it->first;
      if (v == g.entry || pred[v].size() != 1) continue;
      auto p = *pred[v].begin();
      for (auto w : it->second) {
        pred[w].erase(v);
        pred[w].insert(p);
        succ[p].insert(w);
      }
      succ[p].erase(v);
      pred.erase(v);
      succ.erase(it);
      changed = true;
      break;
    }
  }
  return succ.size() == 1;
}

/// Immediate dominators from the definition: a dominates b iff b cannot be
/// reached once a is removed. Unreachable nodes map to npos.
inline std::vector<std::size_t> brute_force_idom(const cfo::ir::Digraph& g) {
  auto live = reach_avoiding(g, static_cast<std::size_t>(-1));
  std::vector<std::set<std::size_t>> strict(g.n);
  for (std::size_t a = 0; a < g.n; ++a) {
    if (!live[a]) continue;
    auto without = reach_avoiding(g, a);
    for (std::size_t b = 0; b < g.n; ++b)
      if (b != a && live[b] && !without[b]) strict[b].insert(a);
  }
  std::vector<std::size_t> idom(g.n, cfo::ir::npos);
  for (std::size_t b = 0; b < g.n; ++b) {
    if (!live[b]) continue;
    if (b == g.entry) {
      idom[b] = b;
      continue;
    }
    // The closest strict dominator is the one with the most strict dominators.
    std::size_t best = cfo::ir::npos;
    for (auto d : strict[b])
      if (best == cfo::ir::npos || strict[d].size() > strict[best].size()) best = d;
    idom[b] = best;
  }
  return idom;
}

/// Random graph of 1..max_nodes nodes, with a mix of forward spine edges and
/// arbitrary edges so that both reducible and irreducible shapes occur.
inline cfo::ir::Digraph random_digraph(std::mt19937_64& rng, std::size_t max_nodes) {
  cfo::ir::Digraph g;
  g.n = 1 + rng() % max_nodes;
  g.succ.resize(g.n);
  for (std::size_t v = 0; v < g.n; ++v) {
    if (v + 1 < g.n && rng() % 4 != 0) g.succ[v].push_back(v + 1);
    auto extra = rng() % 3;
    for (std::uint64_t k = 0; k < extra; ++k) g.succ[v].push_back(rng() % g.n);
  }
  return g;
}

struct EdgeCount {
  std::int64_t nodes = 0;
  std::int64_t edges = 0;
  std::int64_t trap_edges = 0;
};

/// Counts blocks and distinct (block, successor) pairs straight from the
/// terminators and distinct (block, handler) pairs from the trap table.
inline EdgeCount recount(const cfo::ir::Function& fn) {
  EdgeCount c;
  c.nodes = static_cast<std::int64_t>(fn.blocks.size());
  for (const auto& b : fn.blocks) {
    std::set<cfo::ir::BlockId> targets(b.term.targets.begin(), b.term.targets.end());
    c.edges += static_cast<std::int64_t>(targets.size());
  }
  std::set<std::pair<cfo::ir::BlockId, cfo::ir::BlockId>> traps;
  for (const auto& t : fn.traps) traps.insert({t.block, t.handler});
  c.trap_edges = static_cast<std::int64_t>(traps.size());
  return c;
}

}  // namespace oracle
