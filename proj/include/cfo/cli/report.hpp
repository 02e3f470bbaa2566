#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/catalog/catalog.hpp"
#include "cfo/frontend/ast.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/metrics/metrics.hpp"
#include "cfo/transforms/transforms.hpp"

namespace cfo::cli {

inline constexpr int kReportSchema = 1;

struct PassRecord {
  transforms::PassId pass = transforms::PassId::ExtendConditionals;
  std::uint64_t seed = 0;
  bool applied = false;
  std::string skipped_reason;
  std::vector<transforms::Site> sites;

  friend bool operator==(const PassRecord&, const PassRecord&) = default;
};

struct ProxyRecord {
  transforms::PassId pass = transforms::PassId::ExtendConditionals;
  harness::ProxyCheck check;

  friend bool operator==(const ProxyRecord&, const ProxyRecord&) = default;
};

struct ObfuscationReport {
  int schema = kReportSchema;
  std::string input;
  std::string level;  // preset name, or "custom" for an explicit pass list
  std::uint64_t seed = 0;
  std::vector<PassRecord> passes;  // in execution order, skipped passes included
  metrics::CFGMetrics metrics_before;
  metrics::CFGMetrics metrics_after;
  metrics::PotencyDelta deltas;
  std::vector<catalog::TechniqueRecord> classification;  // applied passes, first application order
  harness::DiffVerdict diff;
  std::vector<ProxyRecord> dr_proxies;  // one per applied pass

  friend bool operator==(const ObfuscationReport&, const ObfuscationReport&) = default;
};

/// Builds the report of a finished pipeline run, including the differential
/// test of `original` against the result on `n_inputs` standard inputs.
ObfuscationReport build_report(std::string input, std::string level, std::uint64_t seed,
                               const ir::Program& original, const transforms::PipelineResult& run,
                               std::size_t n_inputs);

/// Pretty-printed JSON with a trailing newline. Stable key order.
std::string to_json(const ObfuscationReport& report);
/// Throws Error(InvalidInput) on malformed or foreign-schema input.
ObfuscationReport report_from_json(std::string_view json);

std::string metrics_to_json(const metrics::CFGMetrics& m);
std::string metrics_to_text(const metrics::CFGMetrics& m);

/// Entry point of the `cfo` tool. Returns the exit status: 0 success, 1 user
/// error, 2 broken internal invariant.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfo::cli
