#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/frontend/ast.hpp"
#include "cfo/ir/ir.hpp"
#include "cfo/opaque/opaque.hpp"

namespace cfo::transforms {

/// Registry identifiers, in registry order.
enum class PassId : std::uint8_t {
  ExtendConditionals,
  AddRedundantOperands,
  DeadCodeInsertion,
  DeadSwitch,
  IrrelevantCodeInsertion,
  ReorderExpressions,
  ReorderStatements,
  ReorderBlocks,
  ReorderLoops,
  MethodReordering,
  InstructionSubstitution,
  ControlFlowFlattening,
  InlineMethod,
  OutlineMethod,
  CloneMethod,
  InterleaveMethods,
  GuardToTrap,
  LoopFission,
  LoopBlocking,
  LoopUnrolling,
  ReplaceEquivalentCodes,
  CodeCloneIV,
  InsertDummyLoop,
  IntersectingLoops,
  BasicBlockFission,
  RemoveLibraryIdioms,
  ReducibleToIrreducible,
  TableInterpretation,
  HoistCommonBranchCode,
  DuplicateSequenceReuse,
  PartiallyTrappingSwitch,
  CombineTryCatch,
  IndirectIf,
  ApiBufferMethods,
  GotoAugmentation,
  BooleanSplitter,
  OpaqueBranchInsertion,
};

const char* to_string(PassId id);
std::optional<PassId> parse_pass_id(std::string_view name);
const std::vector<PassId>& all_passes();

/// Passes whose Table-2 row carries DR = Y.
bool is_dr_pass(PassId id);
/// Passes that rewrite the source tree rather than the IR.
bool is_ast_pass(PassId id);
/// Passes that only add code (instruction count must grow).
bool is_insertion_pass(PassId id);
/// Passes that tag `dead` instructions.
bool is_dead_code_pass(PassId id);

enum class Intensity : std::uint8_t { Light, Normal, Aggressive };
const char* to_string(Intensity i);
std::optional<Intensity> parse_intensity(std::string_view s);
double default_site_fraction(Intensity i);

struct PassConfig {
  std::uint64_t seed = 0;
  Intensity intensity = Intensity::Normal;
  double site_fraction = 0.0;  // 0 selects the intensity default
  std::string variant;         // pass-specific variant name, empty for the plain form
  std::map<std::string, std::int64_t> params;

  double effective_fraction() const { return site_fraction > 0 ? site_fraction : default_site_fraction(intensity); }
  std::int64_t param(const std::string& key, std::int64_t fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct Site {
  std::string function;
  std::optional<ir::BlockId> block;
  std::string detail;

  friend bool operator==(const Site&, const Site&) = default;
};

/// What a pass consumes: the IR plus, when available, the checked source tree.
struct Subject {
  std::optional<frontend::Node> ast;
  ir::Program ir;
};

struct TransformResult {
  ir::Program program;
  std::optional<frontend::Node> ast;  // set by source-level passes
  std::vector<Site> sites;
  std::vector<std::string> notes;
};

/// Applies one pass. Verifies input and output; a verification failure of the
/// output is an Error(Internal). Throws Error(NoEligibleSites) when nothing applies.
TransformResult apply_pass(PassId pass, const Subject& subject, const PassConfig& config);
TransformResult apply_pass(PassId pass, const ir::Program& program, const PassConfig& config);

/// Passes enabled by a level preset.
std::vector<PassId> level_passes(Intensity level);
/// Deterministic composition order: source-level passes, then registry order, DR passes last.
std::vector<PassId> composition_order(std::vector<PassId> passes);

struct PipelineStep {
  PassId pass;
  std::uint64_t seed = 0;
  bool applied = false;
  std::string skipped_reason;
  std::vector<Site> sites;
  ir::Program input;  // program the step started from
};

struct PipelineResult {
  Subject result;
  std::vector<PipelineStep> steps;
};

/// Runs passes in composition order. A pass without eligible sites is
/// recorded as skipped. Step i uses seed mix(config.seed, i).
PipelineResult run_pipeline(const Subject& subject, const std::vector<PassId>& passes, const PassConfig& config);

// Core operations shared by the passes.

ir::Function flatten_function(const ir::Function& fn, std::uint64_t seed);
ir::Function make_irreducible(const ir::Function& fn, std::uint64_t seed);
ir::Program outline_region(const ir::Program& program, const std::string& function, ir::BlockId block,
                           std::size_t begin, std::size_t end, std::uint64_t seed);
ir::Program interleave_functions(const std::string& f, const std::string& g, const ir::Program& program);
ir::Function virtualize_function(const ir::Function& fn, std::uint64_t seed);

enum class PayloadKind : std::uint8_t {
  DeadBlock,
  DeadSwitch,
  BuggyClone,
  Irrelevant,
  ExtendConditional,
  RedundantOperand,
  OpaqueBranch,
};

struct GuardSite {
  ir::BlockId block = 0;
  std::size_t index = 0;  // instruction boundary; for RedundantOperand the instruction; ignored for ExtendConditional
};

ir::Function insert_opaque_guard(const ir::Function& fn, GuardSite site, opaque::Truth truth, PayloadKind kind,
                                 std::uint64_t seed);

}  // namespace cfo::transforms
