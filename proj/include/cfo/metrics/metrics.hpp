#pragma once

#include <cstdint>
#include <string>

#include "cfo/ir/analysis.hpp"
#include "cfo/ir/ir.hpp"

namespace cfo::metrics {

struct CFGMetrics {
  std::int64_t functions = 0;
  std::int64_t blocks = 0;
  std::int64_t edges = 0;       // normal edges, deduplicated per block
  std::int64_t trap_edges = 0;  // distinct (block, handler) pairs
  std::int64_t instructions = 0;  // non-terminator instructions
  std::int64_t cyclomatic = 0;    // sum over functions of E - N + 2P (normal edges)
  std::int64_t max_switch_fanout = 0;
  std::int64_t trap_entries = 0;
  bool irreducible = false;  // any function irreducible

  friend bool operator==(const CFGMetrics&, const CFGMetrics&) = default;
};

CFGMetrics compute_metrics(const ir::Program& program);
CFGMetrics compute_metrics(const ir::Function& fn);

/// Dominator criterion: every retreating DFS edge must target a dominator of
/// its source. Unreachable nodes are ignored.
bool is_reducible(const ir::Digraph& g);
/// Over normal and trap edges.
bool is_reducible(const ir::Function& fn);

struct PotencyDelta {
  std::int64_t functions = 0;
  std::int64_t blocks = 0;
  std::int64_t edges = 0;
  std::int64_t trap_edges = 0;
  std::int64_t instructions = 0;
  std::int64_t cyclomatic = 0;
  std::int64_t max_switch_fanout = 0;
  std::int64_t trap_entries = 0;
  double blocks_ratio = 1.0;
  double instructions_ratio = 1.0;
  double cyclomatic_ratio = 1.0;
  bool dr_proxy_triggered = false;

  friend bool operator==(const PotencyDelta&, const PotencyDelta&) = default;
};

PotencyDelta potency_delta(const CFGMetrics& before, const CFGMetrics& after);

}  // namespace cfo::metrics
