#include "cfo/ir/analysis.hpp"

#include <algorithm>

namespace cfo::ir {

std::vector<std::vector<std::size_t>> Digraph::predecessors() const {
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v : succ[u])
      if (std::find(pred[v].begin(), pred[v].end(), u) == pred[v].end()) pred[v].push_back(u);
  return pred;
}

Digraph to_digraph(const Function& fn, bool with_traps) {
  Digraph g;
  g.n = fn.blocks.size();
  g.succ.resize(g.n);
  std::map<BlockId, std::size_t> index;
  for (std::size_t i = 0; i < fn.blocks.size(); ++i) index[fn.blocks[i].id] = i;
  auto add = [&](std::size_t u, BlockId target) {
    auto it = index.find(target);
    if (it == index.end()) return;
    auto& s = g.succ[u];
    if (std::find(s.begin(), s.end(), it->second) == s.end()) s.push_back(it->second);
  };
  for (std::size_t i = 0; i < fn.blocks.size(); ++i)
    for (BlockId t : fn.blocks[i].term.targets) add(i, t);
  if (with_traps)
    for (const auto& t : fn.traps) {
      auto it = index.find(t.block);
      if (it != index.end()) add(it->second, t.handler);
    }
  auto e = index.find(fn.entry);
  g.entry = e == index.end() ? 0 : e->second;
  return g;
}

std::vector<bool> reachable(const Digraph& g) {
  std::vector<bool> seen(g.n, false);
  if (g.n == 0) return seen;
  std::vector<std::size_t> stack{g.entry};
  seen[g.entry] = true;
  while (!stack.empty()) {
    std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : g.succ[u])
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
  }
  return seen;
}

namespace {

std::vector<std::size_t> reverse_postorder(const Digraph& g) {
  std::vector<std::size_t> post;
  std::vector<char> state(g.n, 0);
  // Iterative DFS: (node, next successor index).
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  if (g.n == 0) return post;
  stack.emplace_back(g.entry, 0);
  state[g.entry] = 1;
  while (!stack.empty()) {
    auto& [u, i] = stack.back();
    if (i < g.succ[u].size()) {
      std::size_t v = g.succ[u][i++];
      if (!state[v]) {
        state[v] = 1;
        stack.emplace_back(v, 0);
      }
    } else {
      post.push_back(u);
      stack.pop_back();
    }
  }
  std::reverse(post.begin(), post.end());
  return post;
}

}  // namespace

std::vector<std::size_t> immediate_dominators(const Digraph& g) {
  std::vector<std::size_t> idom(g.n, npos);
  if (g.n == 0) return idom;
  auto rpo = reverse_postorder(g);
  std::vector<std::size_t> order(g.n, npos);
  for (std::size_t i = 0; i < rpo.size(); ++i) order[rpo[i]] = i;
  auto pred = g.predecessors();
  idom[g.entry] = g.entry;

  auto intersect = [&](std::size_t a, std::size_t b) {
    while (a != b) {
      while (order[a] > order[b]) a = idom[a];
      while (order[b] > order[a]) b = idom[b];
    }
    return a;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 1; k < rpo.size(); ++k) {
      std::size_t b = rpo[k];
      std::size_t new_idom = npos;
      for (std::size_t p : pred[b]) {
        if (idom[p] == npos) continue;
        new_idom = new_idom == npos ? p : intersect(p, new_idom);
      }
      if (new_idom != idom[b]) {
        idom[b] = new_idom;
        changed = true;
      }
    }
  }
  return idom;
}

bool dominates(const std::vector<std::size_t>& idom, std::size_t a, std::size_t b) {
  if (idom[b] == npos || idom[a] == npos) return false;
  while (true) {
    if (a == b) return true;
    std::size_t up = idom[b];
    if (up == b) return false;
    b = up;
  }
}

DominatorTree dominators(const Function& fn) {
  DominatorTree tree;
  Digraph g = to_digraph(fn, true);
  auto idom = immediate_dominators(g);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (idom[i] == npos) tree.unreachable.push_back(fn.blocks[i].id);
    else tree.idom[fn.blocks[i].id] = fn.blocks[idom[i]].id;
  }
  return tree;
}

DefUseGraph def_use(const BasicBlock& block) {
  DefUseGraph g;
  g.size = block.instrs.size();
  for (std::size_t j = 0; j < g.size; ++j) {
    const auto& b = block.instrs[j];
    auto b_uses = uses(b);
    auto b_def = def(b);
    bool b_mem = touches_memory(b);
    bool b_eff = has_effect(b) || may_trap(b);
    for (std::size_t i = 0; i < j; ++i) {
      const auto& a = block.instrs[i];
      auto a_def = def(a);
      auto a_uses = uses(a);
      bool dep = false;
      if (a_def && std::find(b_uses.begin(), b_uses.end(), *a_def) != b_uses.end()) dep = true;
      if (b_def && (a_def == b_def || std::find(a_uses.begin(), a_uses.end(), *b_def) != a_uses.end()))
        dep = true;
      if (b_mem && touches_memory(a)) dep = true;
      if (b_eff && (has_effect(a) || may_trap(a))) dep = true;
      if (a.op == Opcode::Catch || b.op == Opcode::Catch) dep = true;
      if (dep) g.edges.emplace(i, j);
    }
  }
  return g;
}

namespace {

using RegSet = std::vector<bool>;

void unite(RegSet& into, const RegSet& from) {
  for (std::size_t i = 0; i < from.size(); ++i)
    if (from[i]) into[i] = true;
}

bool covered(const Function& fn, BlockId b, std::size_t index, std::vector<BlockId>& handlers) {
  handlers.clear();
  for (const auto& t : fn.traps)
    if (t.block == b && index >= t.start && index < t.end) handlers.push_back(t.handler);
  return !handlers.empty();
}

/// Backward transfer over a block from `live` (live-out) down to position `stop`.
RegSet scan_back(const Function& fn, const Liveness& lv, const BasicBlock& bb, RegSet live,
                 std::size_t stop) {
  std::vector<BlockId> handlers;
  const std::size_t n = bb.instrs.size();
  for (std::size_t idx = n + 1; idx-- > stop;) {
    const Instruction& in = idx == n ? bb.term : bb.instrs[idx];
    if (auto d = def(in)) live[*d] = false;
    for (Reg r : uses(in)) live[r] = true;
    if (covered(fn, bb.id, idx, handlers))
      for (BlockId h : handlers) {
        auto it = lv.live_in.find(h);
        if (it != lv.live_in.end()) unite(live, it->second);
      }
  }
  return live;
}

}  // namespace

Liveness liveness(const Function& fn) {
  Liveness lv;
  const std::size_t nregs = fn.regs.size();
  for (const auto& b : fn.blocks) {
    lv.live_in[b.id] = RegSet(nregs, false);
    lv.live_out[b.id] = RegSet(nregs, false);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = fn.blocks.rbegin(); it != fn.blocks.rend(); ++it) {
      const auto& b = *it;
      RegSet out(nregs, false);
      for (BlockId s : successors(b)) {
        auto f = lv.live_in.find(s);
        if (f != lv.live_in.end()) unite(out, f->second);
      }
      RegSet in = scan_back(fn, lv, b, out, 0);
      if (out != lv.live_out[b.id]) {
        lv.live_out[b.id] = std::move(out);
        changed = true;
      }
      if (in != lv.live_in[b.id]) {
        lv.live_in[b.id] = std::move(in);
        changed = true;
      }
    }
  }
  return lv;
}

std::vector<bool> live_before(const Function& fn, const Liveness& lv, BlockId block, std::size_t index) {
  const auto& bb = fn.block(block);
  return scan_back(fn, lv, bb, lv.live_out.at(block), index);
}

std::map<BlockId, std::vector<BlockId>> predecessor_map(const Function& fn) {
  std::map<BlockId, std::vector<BlockId>> pred;
  for (const auto& b : fn.blocks) pred[b.id];
  for (const auto& b : fn.blocks)
    for (BlockId s : successors(b)) pred[s].push_back(b.id);
  return pred;
}

std::vector<NaturalLoop> natural_loops(const Function& fn) {
  Digraph g = to_digraph(fn, true);
  auto idom = immediate_dominators(g);
  Digraph normal = to_digraph(fn, false);
  auto pred = normal.predecessors();
  std::map<std::size_t, NaturalLoop> by_header;
  for (std::size_t u = 0; u < normal.n; ++u) {
    if (idom[u] == npos) continue;
    for (std::size_t h : normal.succ[u]) {
      if (!dominates(idom, h, u)) continue;
      auto& loop = by_header[h];
      loop.header = fn.blocks[h].id;
      loop.back_edges.emplace_back(fn.blocks[u].id, fn.blocks[h].id);
      std::vector<bool> in(normal.n, false);
      for (const auto& b : loop.body) in[fn.block_index(b)] = true;
      in[h] = true;
      std::vector<std::size_t> work;
      if (!in[u]) {
        in[u] = true;
        work.push_back(u);
      }
      while (!work.empty()) {
        std::size_t x = work.back();
        work.pop_back();
        for (std::size_t p : pred[x])
          if (!in[p] && idom[p] != npos) {
            in[p] = true;
            work.push_back(p);
          }
      }
      for (std::size_t i = 0; i < normal.n; ++i)
        if (in[i]) loop.body.insert(fn.blocks[i].id);
    }
  }
  std::vector<NaturalLoop> out;
  for (auto& [h, loop] : by_header) out.push_back(std::move(loop));
  return out;
}

}  // namespace cfo::ir
