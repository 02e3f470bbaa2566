#include "cfo/ir/ir.hpp"

#include <algorithm>
#include <stdexcept>

namespace cfo::ir {

BasicBlock* Function::find_block(BlockId id) {
  for (auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

const BasicBlock* Function::find_block(BlockId id) const {
  for (const auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

BasicBlock& Function::block(BlockId id) {
  if (auto* b = find_block(id)) return *b;
  throw std::out_of_range("no block " + std::to_string(id) + " in " + name);
}

const BasicBlock& Function::block(BlockId id) const {
  if (const auto* b = find_block(id)) return *b;
  throw std::out_of_range("no block " + std::to_string(id) + " in " + name);
}

std::size_t Function::block_index(BlockId id) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].id == id) return i;
  throw std::out_of_range("no block " + std::to_string(id) + " in " + name);
}

BlockId Function::next_block_id() const {
  BlockId next = 0;
  for (const auto& b : blocks) next = std::max(next, b.id + 1);
  return next;
}

Reg Function::new_reg(Type t) {
  regs.push_back(t);
  return static_cast<Reg>(regs.size() - 1);
}

std::vector<Type> Function::param_types() const {
  std::vector<Type> out;
  out.reserve(params.size());
  for (Reg p : params) out.push_back(regs.at(p));
  return out;
}

Function* Program::find(std::string_view n) {
  for (auto& f : functions)
    if (f.name == n) return &f;
  return nullptr;
}

const Function* Program::find(std::string_view n) const {
  for (const auto& f : functions)
    if (f.name == n) return &f;
  return nullptr;
}

Instruction make_const(Reg dst, std::int64_t v, Tag tag) {
  Instruction in;
  in.op = Opcode::Const;
  in.dst = dst;
  in.imm = v;
  in.tag = tag;
  return in;
}

Instruction make_move(Reg dst, Reg src, Tag tag) {
  Instruction in;
  in.op = Opcode::Move;
  in.dst = dst;
  in.args = {src};
  in.tag = tag;
  return in;
}

Instruction make_binary(BinOp op, Reg dst, Reg a, Reg b, Tag tag) {
  Instruction in;
  in.op = Opcode::Binary;
  in.bin = op;
  in.dst = dst;
  in.args = {a, b};
  in.tag = tag;
  return in;
}

Instruction make_unary(UnOp op, Reg dst, Reg a, Tag tag) {
  Instruction in;
  in.op = Opcode::Unary;
  in.un = op;
  in.dst = dst;
  in.args = {a};
  in.tag = tag;
  return in;
}

Instruction make_select(Reg dst, Reg cond, Reg a, Reg b, Tag tag) {
  Instruction in;
  in.op = Opcode::Select;
  in.dst = dst;
  in.args = {cond, a, b};
  in.tag = tag;
  return in;
}

Instruction make_load(Reg dst, Reg arr, Reg idx, Tag tag) {
  Instruction in;
  in.op = Opcode::Load;
  in.dst = dst;
  in.args = {arr, idx};
  in.tag = tag;
  return in;
}

Instruction make_store(Reg arr, Reg idx, Reg val, Tag tag) {
  Instruction in;
  in.op = Opcode::Store;
  in.args = {arr, idx, val};
  in.tag = tag;
  return in;
}

Instruction make_len(Reg dst, Reg arr, Tag tag) {
  Instruction in;
  in.op = Opcode::Len;
  in.dst = dst;
  in.args = {arr};
  in.tag = tag;
  return in;
}

Instruction make_call(std::optional<Reg> dst, std::string callee, std::vector<Reg> args, Tag tag) {
  Instruction in;
  in.op = Opcode::Call;
  in.dst = dst;
  in.text = std::move(callee);
  in.args = std::move(args);
  in.tag = tag;
  return in;
}

Instruction make_print(Reg v, Tag tag) {
  Instruction in;
  in.op = Opcode::Intrinsic;
  in.intrinsic = IntrinsicFn::Print;
  in.args = {v};
  in.tag = tag;
  return in;
}

Instruction make_catch(Reg dst, Tag tag) {
  Instruction in;
  in.op = Opcode::Catch;
  in.dst = dst;
  in.tag = tag;
  return in;
}

Instruction make_jump(BlockId target, Tag tag) {
  Instruction in;
  in.op = Opcode::Jump;
  in.targets = {target};
  in.tag = tag;
  return in;
}

Instruction make_branch(Reg cond, BlockId t, BlockId f, Tag tag) {
  Instruction in;
  in.op = Opcode::Branch;
  in.args = {cond};
  in.targets = {t, f};
  in.tag = tag;
  return in;
}

Instruction make_switch(Reg v, std::vector<std::int64_t> keys, std::vector<BlockId> targets,
                        BlockId dflt, Tag tag) {
  Instruction in;
  in.op = Opcode::Switch;
  in.args = {v};
  in.imms = std::move(keys);
  in.targets = std::move(targets);
  in.targets.push_back(dflt);
  in.tag = tag;
  return in;
}

Instruction make_return(std::optional<Reg> v, Tag tag) {
  Instruction in;
  in.op = Opcode::Return;
  if (v) in.args = {*v};
  in.tag = tag;
  return in;
}

Instruction make_throw(Reg code, Tag tag) {
  Instruction in;
  in.op = Opcode::Throw;
  in.args = {code};
  in.tag = tag;
  return in;
}

const char* to_string(Type t) {
  switch (t) {
    case Type::Int: return "int";
    case Type::Bool: return "bool";
    case Type::Array: return "int[]";
    case Type::Void: return "void";
  }
  return "?";
}

const char* to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "add";
    case BinOp::Sub: return "sub";
    case BinOp::Mul: return "mul";
    case BinOp::Div: return "div";
    case BinOp::Rem: return "rem";
    case BinOp::Xor: return "xor";
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
    case BinOp::Eq: return "eq";
    case BinOp::Ne: return "ne";
    case BinOp::Lt: return "lt";
    case BinOp::Le: return "le";
    case BinOp::Gt: return "gt";
    case BinOp::Ge: return "ge";
  }
  return "?";
}

const char* to_string(UnOp op) { return op == UnOp::Neg ? "neg" : "not"; }

const char* to_string(IntrinsicFn f) {
  switch (f) {
    case IntrinsicFn::Print: return "print";
    case IntrinsicFn::PrintStr: return "print_str";
    case IntrinsicFn::Min: return "min";
  }
  return "?";
}

const char* to_string(Tag t) {
  switch (t) {
    case Tag::Original: return "original";
    case Tag::Opaque: return "opaque";
    case Tag::Dead: return "dead";
    case Tag::Irrelevant: return "irrelevant";
    case Tag::Dispatcher: return "dispatcher";
    case Tag::Buffer: return "buffer";
  }
  return "?";
}

const char* to_string(TrapKind k) {
  switch (k) {
    case TrapKind::NullAccess: return "null";
    case TrapKind::IndexOutOfBounds: return "index";
    case TrapKind::DivByZero: return "div";
    case TrapKind::User: return "user";
  }
  return "?";
}

bool is_comparison(BinOp op) {
  switch (op) {
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return true;
    default: return false;
  }
}

bool is_commutative(BinOp op) {
  switch (op) {
    case BinOp::Add:
    case BinOp::Mul:
    case BinOp::Xor:
    case BinOp::And:
    case BinOp::Or:
    case BinOp::Eq:
    case BinOp::Ne: return true;
    default: return false;
  }
}

Type binary_result_type(BinOp op) {
  if (is_comparison(op) || op == BinOp::And || op == BinOp::Or) return Type::Bool;
  return Type::Int;
}

std::vector<Reg> uses(const Instruction& in) { return in.args; }

std::optional<Reg> def(const Instruction& in) { return in.dst; }

bool may_trap(const Instruction& in) {
  switch (in.op) {
    case Opcode::Binary: return in.bin == BinOp::Div || in.bin == BinOp::Rem;
    case Opcode::NewArray:
    case Opcode::Load:
    case Opcode::Store:
    case Opcode::Len:
    case Opcode::Call:
    case Opcode::Throw: return true;
    default: return false;
  }
}

bool has_effect(const Instruction& in) {
  switch (in.op) {
    case Opcode::Intrinsic: return in.intrinsic != IntrinsicFn::Min;
    case Opcode::Call:
    case Opcode::Store:
    case Opcode::Catch: return true;
    default: return false;
  }
}

bool touches_memory(const Instruction& in) {
  switch (in.op) {
    case Opcode::NewArray:
    case Opcode::ArrayLit:
    case Opcode::Load:
    case Opcode::Store:
    case Opcode::Len:
    case Opcode::Call: return true;
    default: return false;
  }
}

std::vector<BlockId> successors(const BasicBlock& b) {
  std::vector<BlockId> out;
  for (BlockId t : b.term.targets)
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  return out;
}

}  // namespace cfo::ir
