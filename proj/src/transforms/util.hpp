#pragma once

// Helpers shared by the pass implementations. Not part of the public API.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfo/error.hpp"
#include "cfo/ir/analysis.hpp"
#include "cfo/ir/ir.hpp"
#include "cfo/opaque/opaque.hpp"
#include "cfo/transforms/transforms.hpp"
#include "cfo/util/rng.hpp"

namespace cfo::transforms::detail {

using namespace cfo::ir;

/// Inserts instructions before position `pos`, shifting trap ranges so the
/// new instructions are covered only when strictly inside a range.
void insert_instrs(Function& fn, BlockId block, std::size_t pos, std::vector<Instruction> instrs);
/// Appends before the terminator.
void append_instrs(Function& fn, BlockId block, std::vector<Instruction> instrs);
/// Replaces each instruction i of `block` by groups[i] and prepends `term_pre`
/// to the terminator. Trap ranges are remapped to cover whole groups; the
/// added code must be trap-free.
void replace_with_groups(Function& fn, BlockId block, std::vector<std::vector<Instruction>> groups,
                         std::vector<Instruction> term_pre);
/// Removes one instruction, shrinking trap ranges (empty ranges are dropped).
void erase_instr(Function& fn, BlockId block, std::size_t pos);

/// Splits `block` before instruction `at`. The tail (and the terminator) moves
/// to a fresh block placed right after it in layout; the head ends in a jump.
/// Trap entries are split so that whole-block entries stay whole-block.
BlockId split_block(Function& fn, BlockId block, std::size_t at);

/// Adds a block with a fresh id, placed after `after` in layout (or at the end).
BlockId add_block(Function& fn, BasicBlock b, std::optional<BlockId> after = std::nullopt);

void retarget(Instruction& term, BlockId from, BlockId to);

std::set<BlockId> handler_blocks(const Function& fn);
bool has_trap_entries(const Function& fn, BlockId block);
/// Trap entries of `block` whose range contains instruction `index`, in table order.
std::vector<TrapEntry> covering_entries(const Function& fn, BlockId block, std::size_t index);
/// Adds whole-block copies of `entries` for `block` (appended to the table).
void cover_block(Function& fn, BlockId block, const std::vector<TrapEntry>& entries);

/// Int-typed registers, params first.
std::vector<Reg> int_registers(const Function& fn);

/// Chooses max(1, ceil(fraction * n)) indices out of n, deterministically; result sorted.
std::vector<std::size_t> select_sites(std::size_t n, double fraction, std::uint64_t seed);

Instruction tagged(Instruction in, Tag tag);
Instruction make_new_array(Reg dst, Reg size, Tag tag = Tag::Original);
std::int64_t default_value(Type t);

/// Emits an opaque predicate of the given truth into `out`; returns its bool register.
Reg emit_predicate(Function& fn, std::vector<Instruction>& out, opaque::Truth truth, std::uint64_t seed);

/// Plausible filler tagged `dead`: arithmetic on fresh registers and a print.
std::vector<Instruction> dead_filler(Function& fn, std::uint64_t seed, std::size_t count);

/// Function name not yet used in the program.
std::string unique_function_name(const Program& p, const std::string& base);

/// Rewrites every register in an instruction through `map` (missing keys untouched).
void rename_registers(Instruction& in, const std::map<Reg, Reg>& map);

/// Natural loops with a single entry edge source outside the loop set into the header only.
std::vector<NaturalLoop> single_entry_loops(const Function& fn);

/// Copies a set of blocks with fresh ids (layout appended after `after`), remapping
/// intra-set targets and copying trap entries of copied blocks. Returns old->new ids.
std::map<BlockId, BlockId> copy_blocks(Function& fn, const std::vector<BlockId>& blocks, BlockId after);

[[noreturn]] inline void no_sites(const std::string& why) { throw Error(ErrorCode::NoEligibleSites, why); }

}  // namespace cfo::transforms::detail
