#include <algorithm>
#include <sstream>

#include "cfo/ir/verify.hpp"
#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms {

using namespace ir;

namespace {

struct Entry {
  PassId id;
  const char* name;
  detail::PassFn fn;
  bool dr;
  bool ast;
  bool insertion;
  bool dead;
};

// clang-format off
const Entry kRegistry[] = {
    {PassId::ExtendConditionals, "extend_conditionals", detail::extend_conditionals, false, false, true, false},
    {PassId::AddRedundantOperands, "add_redundant_operands", detail::add_redundant_operands, false, false, true, false},
    {PassId::DeadCodeInsertion, "dead_code_insertion", detail::dead_code_insertion, false, false, true, true},
    {PassId::DeadSwitch, "dead_switch", detail::dead_switch, false, false, true, true},
    {PassId::IrrelevantCodeInsertion, "irrelevant_code_insertion", detail::irrelevant_code_insertion, false, false, true, false},
    {PassId::ReorderExpressions, "reorder_expressions", detail::reorder_expressions, false, false, false, false},
    {PassId::ReorderStatements, "reorder_statements", detail::reorder_statements, false, false, false, false},
    {PassId::ReorderBlocks, "reorder_blocks", detail::reorder_blocks, false, false, false, false},
    {PassId::ReorderLoops, "reorder_loops", detail::reorder_loops, false, false, false, false},
    {PassId::MethodReordering, "method_reordering", detail::method_reordering, false, false, false, false},
    {PassId::InstructionSubstitution, "instruction_substitution", detail::instruction_substitution, false, false, false, true},
    {PassId::ControlFlowFlattening, "control_flow_flattening", detail::control_flow_flattening, false, false, false, false},
    {PassId::InlineMethod, "inline_method", detail::inline_method, false, false, false, false},
    {PassId::OutlineMethod, "outline_method", detail::outline_method, false, false, false, false},
    {PassId::CloneMethod, "clone_method", detail::clone_method, false, false, false, false},
    {PassId::InterleaveMethods, "interleave_methods", detail::interleave_methods, false, false, false, false},
    {PassId::GuardToTrap, "guard_to_trap", detail::guard_to_trap, false, false, false, false},
    {PassId::LoopFission, "loop_fission", detail::loop_fission, false, false, false, false},
    {PassId::LoopBlocking, "loop_blocking", detail::loop_blocking, false, false, false, false},
    {PassId::LoopUnrolling, "loop_unrolling", detail::loop_unrolling, false, false, false, false},
    {PassId::ReplaceEquivalentCodes, "replace_equivalent_codes", detail::replace_equivalent_codes, false, true, false, false},
    {PassId::CodeCloneIV, "code_clone_iv", detail::code_clone_iv, false, true, false, false},
    {PassId::InsertDummyLoop, "insert_dummy_loop", detail::insert_dummy_loop, false, false, true, false},
    {PassId::IntersectingLoops, "intersecting_loops", detail::intersecting_loops, true, false, false, true},
    {PassId::BasicBlockFission, "basic_block_fission", detail::basic_block_fission, true, false, false, true},
    {PassId::RemoveLibraryIdioms, "remove_library_idioms", detail::remove_library_idioms, false, false, false, false},
    {PassId::ReducibleToIrreducible, "reducible_to_irreducible", detail::reducible_to_irreducible, true, false, false, false},
    {PassId::TableInterpretation, "table_interpretation", detail::table_interpretation, true, false, false, false},
    {PassId::HoistCommonBranchCode, "hoist_common_branch_code", detail::hoist_common_branch_code, false, false, false, false},
    {PassId::DuplicateSequenceReuse, "duplicate_sequence_reuse", detail::duplicate_sequence_reuse, false, false, false, false},
    {PassId::PartiallyTrappingSwitch, "partially_trapping_switch", detail::partially_trapping_switch, true, false, false, true},
    {PassId::CombineTryCatch, "combine_try_catch", detail::combine_try_catch, false, false, false, false},
    {PassId::IndirectIf, "indirect_if", detail::indirect_if, true, false, false, true},
    {PassId::ApiBufferMethods, "api_buffer_methods", detail::api_buffer_methods, false, false, true, false},
    {PassId::GotoAugmentation, "goto_augmentation", detail::goto_augmentation, true, false, false, false},
    {PassId::BooleanSplitter, "boolean_splitter", detail::boolean_splitter, false, false, false, false},
    {PassId::OpaqueBranchInsertion, "opaque_branch_insertion", detail::opaque_branch_insertion, false, false, true, true},
};
// clang-format on

const Entry& entry(PassId id) {
  const auto& e = kRegistry[static_cast<std::size_t>(id)];
  if (e.id != id) throw Error(ErrorCode::Internal, "pass registry out of order");
  return e;
}

std::string describe(const std::vector<Diagnostic>& diags) {
  std::ostringstream os;
  for (std::size_t i = 0; i < diags.size() && i < 5; ++i) os << (i ? "; " : "") << to_string(diags[i]);
  if (diags.size() > 5) os << "; (" << diags.size() - 5 << " more)";
  return os.str();
}

}  // namespace

const char* to_string(PassId id) { return entry(id).name; }

std::optional<PassId> parse_pass_id(std::string_view name) {
  for (const auto& e : kRegistry)
    if (name == e.name) return e.id;
  return std::nullopt;
}

const std::vector<PassId>& all_passes() {
  static const std::vector<PassId> all = [] {
    std::vector<PassId> v;
    for (const auto& e : kRegistry) v.push_back(e.id);
    return v;
  }();
  return all;
}

bool is_dr_pass(PassId id) { return entry(id).dr; }
bool is_ast_pass(PassId id) { return entry(id).ast; }
bool is_insertion_pass(PassId id) { return entry(id).insertion; }
bool is_dead_code_pass(PassId id) { return entry(id).dead; }

const char* to_string(Intensity i) {
  switch (i) {
    case Intensity::Light: return "light";
    case Intensity::Normal: return "normal";
    case Intensity::Aggressive: return "aggressive";
  }
  return "?";
}

std::optional<Intensity> parse_intensity(std::string_view s) {
  for (auto i : {Intensity::Light, Intensity::Normal, Intensity::Aggressive})
    if (s == to_string(i)) return i;
  return std::nullopt;
}

double default_site_fraction(Intensity i) {
  switch (i) {
    case Intensity::Light: return 0.25;
    case Intensity::Normal: return 0.5;
    case Intensity::Aggressive: return 1.0;
  }
  return 0.5;
}

namespace {

bool knows_variant(PassId pass, const std::string& variant) {
  if (variant.empty()) return true;
  switch (pass) {
    case PassId::DeadCodeInsertion: return variant == "buggy_code" || variant == "dead_switch" || variant == "switch";
    case PassId::ReorderExpressions: return variant == "branch_inversion";
    case PassId::InstructionSubstitution: return variant == "replacing_goto";
    default: return false;
  }
}

}  // namespace

TransformResult apply_pass(PassId pass, const Subject& subject, const PassConfig& config) {
  const Entry& e = entry(pass);
  auto in_diags = verify(subject.ir);
  if (!in_diags.empty()) throw Error(ErrorCode::InvalidInput, "input program is malformed: " + describe(in_diags));
  if (config.site_fraction < 0 || config.site_fraction > 1)
    throw Error(ErrorCode::InvalidParam, "site fraction must lie in (0, 1]");
  if (!knows_variant(pass, config.variant))
    throw Error(ErrorCode::InvalidParam, std::string(e.name) + " has no variant " + config.variant);
  if (e.ast && !subject.ast) throw Error(ErrorCode::RequiresSource, std::string(e.name) + " needs MiniLang source");
  TransformResult r = e.fn(subject, config);
  auto out_diags = verify(r.program);
  if (!out_diags.empty())
    throw Error(ErrorCode::Internal, std::string(e.name) + " produced malformed IR: " + describe(out_diags));
  return r;
}

TransformResult apply_pass(PassId pass, const Program& program, const PassConfig& config) {
  return apply_pass(pass, Subject{std::nullopt, program}, config);
}

std::vector<PassId> level_passes(Intensity level) {
  std::vector<PassId> out{PassId::ExtendConditionals, PassId::AddRedundantOperands, PassId::ReorderExpressions};
  if (level == Intensity::Light) return out;
  out.insert(out.end(), {PassId::DeadCodeInsertion, PassId::IrrelevantCodeInsertion, PassId::ReorderStatements,
                         PassId::InstructionSubstitution, PassId::GuardToTrap});
  if (level == Intensity::Normal) return out;
  out.insert(out.end(), {PassId::ControlFlowFlattening, PassId::GotoAugmentation, PassId::ReducibleToIrreducible,
                         PassId::BasicBlockFission});
  return out;
}

std::vector<PassId> composition_order(std::vector<PassId> passes) {
  auto rank = [](PassId p) { return is_ast_pass(p) ? 0 : is_dr_pass(p) ? 2 : 1; };
  std::stable_sort(passes.begin(), passes.end(), [&](PassId a, PassId b) {
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return static_cast<int>(a) < static_cast<int>(b);
  });
  return passes;
}

PipelineResult run_pipeline(const Subject& subject, const std::vector<PassId>& passes, const PassConfig& config) {
  PipelineResult out;
  out.result = subject;
  auto order = composition_order(passes);
  for (std::size_t i = 0; i < order.size(); ++i) {
    PipelineStep step;
    step.pass = order[i];
    step.seed = mix_seed(config.seed, i);
    step.input = out.result.ir;
    PassConfig cfg = config;
    cfg.seed = step.seed;
    // A variant names a form of one pass; the others run plain.
    if (!knows_variant(step.pass, cfg.variant)) cfg.variant.clear();
    try {
      TransformResult r = apply_pass(step.pass, out.result, cfg);
      out.result.ir = std::move(r.program);
      // Once the IR is rewritten the tree no longer describes it.
      out.result.ast = std::move(r.ast);
      step.applied = true;
      step.sites = std::move(r.sites);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEligibleSites && e.code() != ErrorCode::UnsupportedTraps &&
          e.code() != ErrorCode::RequiresSource)
        throw;
      step.skipped_reason = e.what();
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

}  // namespace cfo::transforms
