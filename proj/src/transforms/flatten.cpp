#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms {

using namespace ir;
using namespace detail;

// Every non-handler block becomes a case of one dispatcher switch. Blocks
// keep their ids; the new entry seeds the dispatcher with the key of the
// original entry, and each case ends by writing the key of its successor.
Function flatten_function(const Function& in, std::uint64_t seed) {
  Function fn = in;
  for (const auto& t : fn.traps) {
    const auto& b = fn.block(t.block);
    if (t.start != 0 || t.end != b.instrs.size() + 1)
      throw Error(ErrorCode::UnsupportedTraps, fn.name + ": trap range does not cover whole block " + std::to_string(t.block));
  }
  auto handlers = handler_blocks(fn);
  std::vector<BlockId> cases;
  for (const auto& b : fn.blocks)
    if (!handlers.count(b.id)) cases.push_back(b.id);

  std::vector<std::int64_t> keys(cases.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = static_cast<std::int64_t>(i + 1);
  Rng(mix_seed(seed, 0xF1A7)).shuffle(keys);
  std::map<BlockId, std::int64_t> key_of;
  for (std::size_t i = 0; i < cases.size(); ++i) key_of[cases[i]] = keys[i];

  const Reg d = fn.new_reg(Type::Int);
  BasicBlock entry, header, fallback;
  BlockId old_entry = fn.entry;
  BlockId entry_id = add_block(fn, std::move(entry));
  BlockId header_id = add_block(fn, std::move(header));
  BlockId fallback_id = add_block(fn, std::move(fallback));

  auto dispatch = [&](BlockId id) {
    auto& b = fn.block(id);
    Instruction term = b.term;
    std::vector<Instruction> code;
    auto key_reg = [&](BlockId target) {
      Reg k = fn.new_reg(Type::Int);
      code.push_back(make_const(k, key_of.at(target), Tag::Dispatcher));
      return k;
    };
    switch (term.op) {
      case Opcode::Jump: code.push_back(make_const(d, key_of.at(term.targets[0]), Tag::Dispatcher)); break;
      case Opcode::Branch: {
        Reg kt = key_reg(term.targets[0]);
        Reg kf = key_reg(term.targets[1]);
        code.push_back(make_select(d, term.args[0], kt, kf, Tag::Dispatcher));
        break;
      }
      case Opcode::Switch: {
        Reg acc = key_reg(term.targets.back());
        for (std::size_t i = term.imms.size(); i-- > 0;) {
          Reg k = key_reg(term.targets[i]);
          Reg v = fn.new_reg(Type::Int);
          Reg eq = fn.new_reg(Type::Bool);
          code.push_back(make_const(v, term.imms[i], Tag::Dispatcher));
          code.push_back(make_binary(BinOp::Eq, eq, term.args[0], v, Tag::Dispatcher));
          Reg next = i == 0 ? d : fn.new_reg(Type::Int);
          code.push_back(make_select(next, eq, k, acc, Tag::Dispatcher));
          acc = next;
        }
        if (term.imms.empty()) code.push_back(make_move(d, acc, Tag::Dispatcher));
        break;
      }
      default: return;  // ret / throw stay in place
    }
    append_instrs(fn, id, std::move(code));
    fn.block(id).term = make_jump(header_id, Tag::Dispatcher);
  };
  for (BlockId c : cases) dispatch(c);
  for (BlockId h : handlers) dispatch(h);

  fn.block(entry_id).instrs = {make_const(d, key_of.at(old_entry), Tag::Dispatcher)};
  fn.block(entry_id).term = make_jump(header_id, Tag::Dispatcher);
  std::vector<std::int64_t> sorted_keys;
  std::vector<BlockId> targets;
  std::vector<std::pair<std::int64_t, BlockId>> table;
  for (BlockId c : cases) table.push_back({key_of.at(c), c});
  std::sort(table.begin(), table.end());
  for (auto& [k, b] : table) {
    sorted_keys.push_back(k);
    targets.push_back(b);
  }
  fn.block(header_id).term = make_switch(d, sorted_keys, targets, fallback_id, Tag::Dispatcher);
  if (fn.ret == Type::Void) {
    fn.block(fallback_id).term = make_return(std::nullopt, Tag::Dispatcher);
  } else {
    Reg z = fn.new_reg(fn.ret);
    fn.block(fallback_id).instrs = {make_const(z, default_value(fn.ret), Tag::Dispatcher)};
    fn.block(fallback_id).term = make_return(z, Tag::Dispatcher);
  }
  fn.entry = entry_id;
  // Entry, then the dispatcher, then the cases.
  std::vector<BasicBlock> layout;
  for (BlockId id : {entry_id, header_id}) layout.push_back(fn.block(id));
  for (auto& b : fn.blocks)
    if (b.id != entry_id && b.id != header_id) layout.push_back(b);
  fn.blocks = std::move(layout);
  return fn;
}

namespace detail {

TransformResult control_flow_flattening(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  std::vector<std::size_t> sites;
  std::vector<std::string> refused;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    const auto& fn = r.program.functions[f];
    bool aligned = std::all_of(fn.traps.begin(), fn.traps.end(), [&](const TrapEntry& t) {
      return t.start == 0 && t.end == fn.block(t.block).instrs.size() + 1;
    });
    if (aligned) sites.push_back(f);
    else refused.push_back(fn.name);
  }
  if (sites.empty()) {
    if (!refused.empty()) throw Error(ErrorCode::UnsupportedTraps, "partial trap ranges in " + refused.front());
    no_sites("no functions");
  }
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    auto& fn = r.program.functions[sites[k]];
    std::size_t n = fn.blocks.size();
    fn = flatten_function(fn, mix_seed(cfg.seed, 1000 + k));
    r.sites.push_back(Site{fn.name, std::nullopt, std::to_string(n) + " blocks flattened"});
  }
  for (const auto& name : refused) r.notes.push_back(name + ": skipped, partial trap ranges");
  return r;
}

}  // namespace detail
}  // namespace cfo::transforms
