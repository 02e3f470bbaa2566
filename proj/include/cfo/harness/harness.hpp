#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/frontend/ast.hpp"
#include "cfo/interp/interpreter.hpp"
#include "cfo/ir/ir.hpp"
#include "cfo/transforms/transforms.hpp"

namespace cfo::harness {

enum class Feature : std::uint8_t {
  If,
  IfElse,
  While,
  For,
  Switch,
  NestedConditionals,
  TryCatch,
  Arrays,
  MultiFunction,
  ReadsInput,
};

const char* to_string(Feature f);
std::optional<Feature> parse_feature(std::string_view s);
const std::set<Feature>& all_features();

struct GenConfig {
  std::uint64_t seed = 0;
  int max_functions = 3;             // including main
  int max_blocks_per_function = 12;  // statement budget per function body
  int max_loop_depth = 2;            // clamped to 3
  std::set<Feature> features = all_features();
};

/// Generates a terminating MiniLang program that uses exactly the requested
/// features. Deterministic in the config.
frontend::SourceUnit gen_program(const GenConfig& config);

/// `n` inputs: the degenerate set (null, [], [x], [min, max]) first, then
/// seed-derived random arrays.
std::vector<interp::Input> standard_inputs(std::size_t n, std::uint64_t seed);

enum class DiffStatus : std::uint8_t { Equal, Mismatch, OriginalFuelExhausted };
const char* to_string(DiffStatus s);

struct Divergence {
  interp::Input input;
  std::size_t input_index = 0;
  std::string aspect;         // "outcome", "value", "trap_kind" or "output"
  std::size_t position = 0;   // first differing output item (aspect "output")
  std::string expected;
  std::string actual;

  friend bool operator==(const Divergence&, const Divergence&) = default;
};

struct DiffVerdict {
  DiffStatus status = DiffStatus::Equal;
  std::size_t compared = 0;
  std::size_t skipped = 0;  // inputs on which the original ran out of fuel
  std::optional<Divergence> first_divergence;

  friend bool operator==(const DiffVerdict&, const DiffVerdict&) = default;
};

/// Fuel multiplier applied to the transformed program.
inline constexpr std::uint64_t kTransformedFuelFactor = 50;

DiffVerdict differential_test(const ir::Program& original, const ir::Program& transformed,
                              const std::vector<interp::Input>& inputs, std::uint64_t fuel = interp::default_fuel());
DiffVerdict differential_test(const ir::Program& original, const ir::Program& transformed, std::size_t n_inputs,
                              std::uint64_t seed, std::uint64_t fuel = interp::default_fuel());

std::string describe(const DiffVerdict& v);

struct DeadSite {
  std::string function;
  ir::BlockId block = 0;
  std::uint32_t index = 0;
  std::uint64_t count = 0;
};

struct CoverageVerdict {
  bool clean = true;
  std::size_t dead_instructions = 0;  // dead-tagged instructions present
  std::vector<DeadSite> executed;
};

CoverageVerdict dead_code_coverage_check(const ir::Program& transformed, const std::vector<interp::Input>& inputs,
                                         std::uint64_t fuel = interp::default_fuel());

struct CorpusProgram {
  std::string name;  // file stem
  std::string path;
  std::string source;
  frontend::Node ast;
  ir::Program program;
};

/// Loads every `*.mini` file of a directory, sorted by name. Throws
/// Error(InvalidInput) when a file fails to compile.
std::vector<CorpusProgram> load_corpus(const std::string& dir);

/// Decompiler-resistance proxy of a pass, evaluated on one application.
struct ProxyCheck {
  std::string proxy;  // "irreducible_cfg", "unaligned_trap_range", "single_dispatch_loop" or "reducibility_unchanged"
  bool triggered = false;
  std::string detail;

  friend bool operator==(const ProxyCheck&, const ProxyCheck&) = default;
};

/// For DR passes: whether the documented proxy holds on every eligible
/// function of `after`. For the other passes: whether reducibility of every
/// surviving function is unchanged.
ProxyCheck dr_proxy(transforms::PassId pass, const ir::Program& before, const ir::Program& after);

/// True when some trap entry covers only part of its block.
bool has_unaligned_trap(const ir::Function& fn);
/// All back edges target one block, and that block dispatches through a switch.
bool is_single_dispatch_loop(const ir::Function& fn);

}  // namespace cfo::harness
