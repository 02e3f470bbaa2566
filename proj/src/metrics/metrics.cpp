#include "cfo/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace cfo::metrics {

using namespace cfo::ir;

namespace {

std::int64_t weak_components(const Digraph& g) {
  std::vector<std::size_t> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t u = 0; u < g.n; ++u)
    for (std::size_t v : g.succ[u]) parent[find(u)] = find(v);
  std::int64_t count = 0;
  for (std::size_t u = 0; u < g.n; ++u)
    if (find(u) == u) ++count;
  return count;
}

}  // namespace

bool is_reducible(const Digraph& g) {
  if (g.n == 0) return true;
  auto idom = immediate_dominators(g);
  // Iterative DFS tracking the active path.
  std::vector<char> state(g.n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::pair<std::size_t, std::size_t>> stack{{g.entry, 0}};
  state[g.entry] = 1;
  while (!stack.empty()) {
    auto& [u, i] = stack.back();
    if (i < g.succ[u].size()) {
      std::size_t v = g.succ[u][i++];
      if (state[v] == 1) {
        if (!dominates(idom, v, u)) return false;
      } else if (state[v] == 0) {
        state[v] = 1;
        stack.emplace_back(v, 0);
      }
    } else {
      state[u] = 2;
      stack.pop_back();
    }
  }
  return true;
}

bool is_reducible(const Function& fn) { return is_reducible(to_digraph(fn, true)); }

CFGMetrics compute_metrics(const Function& fn) {
  CFGMetrics m;
  m.functions = 1;
  Digraph normal = to_digraph(fn, false);
  m.blocks = static_cast<std::int64_t>(fn.blocks.size());
  for (const auto& s : normal.succ) m.edges += static_cast<std::int64_t>(s.size());
  std::set<std::pair<BlockId, BlockId>> trap_pairs;
  for (const auto& t : fn.traps) trap_pairs.emplace(t.block, t.handler);
  m.trap_edges = static_cast<std::int64_t>(trap_pairs.size());
  m.trap_entries = static_cast<std::int64_t>(fn.traps.size());
  for (const auto& b : fn.blocks) {
    m.instructions += static_cast<std::int64_t>(b.instrs.size());
    if (b.term.op == Opcode::Switch)
      m.max_switch_fanout = std::max<std::int64_t>(m.max_switch_fanout, static_cast<std::int64_t>(successors(b).size()));
  }
  if (!fn.blocks.empty()) m.cyclomatic = m.edges - m.blocks + 2 * weak_components(normal);
  m.irreducible = !is_reducible(fn);
  return m;
}

CFGMetrics compute_metrics(const Program& program) {
  CFGMetrics total;
  for (const auto& f : program.functions) {
    CFGMetrics m = compute_metrics(f);
    total.functions += m.functions;
    total.blocks += m.blocks;
    total.edges += m.edges;
    total.trap_edges += m.trap_edges;
    total.instructions += m.instructions;
    total.cyclomatic += m.cyclomatic;
    total.max_switch_fanout = std::max(total.max_switch_fanout, m.max_switch_fanout);
    total.trap_entries += m.trap_entries;
    total.irreducible = total.irreducible || m.irreducible;
  }
  return total;
}

PotencyDelta potency_delta(const CFGMetrics& b, const CFGMetrics& a) {
  PotencyDelta d;
  d.functions = a.functions - b.functions;
  d.blocks = a.blocks - b.blocks;
  d.edges = a.edges - b.edges;
  d.trap_edges = a.trap_edges - b.trap_edges;
  d.instructions = a.instructions - b.instructions;
  d.cyclomatic = a.cyclomatic - b.cyclomatic;
  d.max_switch_fanout = a.max_switch_fanout - b.max_switch_fanout;
  d.trap_entries = a.trap_entries - b.trap_entries;
  auto ratio = [](std::int64_t after, std::int64_t before) {
    return before == 0 ? (after == 0 ? 1.0 : static_cast<double>(after)) : static_cast<double>(after) / static_cast<double>(before);
  };
  d.blocks_ratio = ratio(a.blocks, b.blocks);
  d.instructions_ratio = ratio(a.instructions, b.instructions);
  d.cyclomatic_ratio = ratio(a.cyclomatic, b.cyclomatic);
  d.dr_proxy_triggered = a.irreducible && !b.irreducible;
  return d;
}

}  // namespace cfo::metrics
