#pragma once

// Pass entry points, one per registry id. Each receives a verified subject.

#include "cfo/transforms/transforms.hpp"

namespace cfo::transforms::detail {

using PassFn = TransformResult (*)(const Subject&, const PassConfig&);

// opaque_passes.cpp
TransformResult extend_conditionals(const Subject&, const PassConfig&);
TransformResult add_redundant_operands(const Subject&, const PassConfig&);
TransformResult dead_code_insertion(const Subject&, const PassConfig&);
TransformResult dead_switch(const Subject&, const PassConfig&);
TransformResult irrelevant_code_insertion(const Subject&, const PassConfig&);
TransformResult opaque_branch_insertion(const Subject&, const PassConfig&);
TransformResult insert_dummy_loop(const Subject&, const PassConfig&);

// ordering.cpp
TransformResult reorder_expressions(const Subject&, const PassConfig&);
TransformResult reorder_statements(const Subject&, const PassConfig&);
TransformResult reorder_blocks(const Subject&, const PassConfig&);
TransformResult reorder_loops(const Subject&, const PassConfig&);
TransformResult method_reordering(const Subject&, const PassConfig&);

// substitution.cpp
TransformResult instruction_substitution(const Subject&, const PassConfig&);
TransformResult boolean_splitter(const Subject&, const PassConfig&);
TransformResult guard_to_trap(const Subject&, const PassConfig&);
TransformResult hoist_common_branch_code(const Subject&, const PassConfig&);
TransformResult duplicate_sequence_reuse(const Subject&, const PassConfig&);

// flatten.cpp
TransformResult control_flow_flattening(const Subject&, const PassConfig&);

// irreducible.cpp
TransformResult reducible_to_irreducible(const Subject&, const PassConfig&);
TransformResult intersecting_loops(const Subject&, const PassConfig&);
TransformResult basic_block_fission(const Subject&, const PassConfig&);
TransformResult goto_augmentation(const Subject&, const PassConfig&);
TransformResult indirect_if(const Subject&, const PassConfig&);

// methods.cpp
TransformResult inline_method(const Subject&, const PassConfig&);
TransformResult outline_method(const Subject&, const PassConfig&);
TransformResult clone_method(const Subject&, const PassConfig&);
TransformResult interleave_methods(const Subject&, const PassConfig&);
TransformResult remove_library_idioms(const Subject&, const PassConfig&);
TransformResult api_buffer_methods(const Subject&, const PassConfig&);

// loops.cpp
TransformResult loop_fission(const Subject&, const PassConfig&);
TransformResult loop_blocking(const Subject&, const PassConfig&);
TransformResult loop_unrolling(const Subject&, const PassConfig&);

// traps.cpp
TransformResult partially_trapping_switch(const Subject&, const PassConfig&);
TransformResult combine_try_catch(const Subject&, const PassConfig&);

// virtualize.cpp
TransformResult table_interpretation(const Subject&, const PassConfig&);

// ast_passes.cpp
TransformResult replace_equivalent_codes(const Subject&, const PassConfig&);
TransformResult code_clone_iv(const Subject&, const PassConfig&);

/// Inserts a dummy counted loop at an instruction boundary; returns the loop body block.
ir::BlockId add_dummy_loop(ir::Function& fn, ir::BlockId block, std::size_t at, std::uint64_t seed);

}  // namespace cfo::transforms::detail
