#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfo::ir {

enum class Type : std::uint8_t { Int, Bool, Array, Void };

using Reg = std::uint32_t;
using BlockId = std::uint32_t;

enum class Opcode : std::uint8_t {
  Const,
  Move,
  Binary,
  Unary,
  Select,
  NewArray,
  ArrayLit,
  Load,
  Store,
  Len,
  Call,
  Intrinsic,
  Catch,
  // terminators
  Jump,
  Branch,
  Switch,
  Return,
  Throw,
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Rem, Xor, And, Or, Eq, Ne, Lt, Le, Gt, Ge };
enum class UnOp : std::uint8_t { Neg, Not };
enum class IntrinsicFn : std::uint8_t { Print, PrintStr, Min };

/// Provenance mark carried by every instruction. `Dead` is reserved for code
/// that can never execute; the coverage checks rely on that.
enum class Tag : std::uint8_t { Original, Opaque, Dead, Irrelevant, Dispatcher, Buffer };

enum class TrapKind : std::uint8_t { NullAccess = 0, IndexOutOfBounds = 1, DivByZero = 2, User = 3 };

/// Bit set over TrapKind.
struct TrapKindSet {
  std::uint8_t bits = 0;

  static constexpr TrapKindSet all() { return TrapKindSet{0x0F}; }
  constexpr bool contains(TrapKind k) const { return (bits >> static_cast<unsigned>(k)) & 1U; }
  constexpr void insert(TrapKind k) { bits |= static_cast<std::uint8_t>(1U << static_cast<unsigned>(k)); }
  constexpr bool empty() const { return bits == 0; }
  friend constexpr bool operator==(TrapKindSet, TrapKindSet) = default;
};

struct Span {
  std::uint32_t line = 0;
  std::uint32_t column = 0;
};

/// One IR instruction. The record is deliberately uniform: which fields are
/// meaningful depends on `op` (see the operand table in verify.cpp).
struct Instruction {
  Opcode op = Opcode::Const;
  BinOp bin = BinOp::Add;
  UnOp un = UnOp::Neg;
  IntrinsicFn intrinsic = IntrinsicFn::Print;
  std::optional<Reg> dst;
  std::vector<Reg> args;
  std::int64_t imm = 0;
  std::vector<std::int64_t> imms;   // array literal values, switch case keys
  std::vector<BlockId> targets;     // branch targets; switch: cases then default
  std::string text;                 // callee name or print_str literal
  Tag tag = Tag::Original;
  std::optional<Span> span;         // not part of structural identity

  bool is_terminator() const { return op >= Opcode::Jump; }

  friend bool operator==(const Instruction& a, const Instruction& b) {
    return a.op == b.op && a.bin == b.bin && a.un == b.un && a.intrinsic == b.intrinsic &&
           a.dst == b.dst && a.args == b.args && a.imm == b.imm && a.imms == b.imms &&
           a.targets == b.targets && a.text == b.text && a.tag == b.tag;
  }
};

struct BasicBlock {
  BlockId id = 0;
  std::vector<Instruction> instrs;
  Instruction term;

  friend bool operator==(const BasicBlock&, const BasicBlock&) = default;
};

/// Instruction range [start, end) of `block` guarded by `handler`. Index
/// `instrs.size()` denotes the terminator.
struct TrapEntry {
  BlockId block = 0;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  BlockId handler = 0;
  TrapKindSet kinds = TrapKindSet::all();

  friend bool operator==(const TrapEntry&, const TrapEntry&) = default;
};

struct Function {
  std::string name;
  std::vector<Reg> params;
  std::vector<Type> regs;
  Type ret = Type::Void;
  std::vector<BasicBlock> blocks;  // layout order
  BlockId entry = 0;
  std::vector<TrapEntry> traps;

  BasicBlock* find_block(BlockId id);
  const BasicBlock* find_block(BlockId id) const;
  BasicBlock& block(BlockId id);
  const BasicBlock& block(BlockId id) const;
  std::size_t block_index(BlockId id) const;
  BlockId next_block_id() const;
  Reg new_reg(Type t);
  std::vector<Type> param_types() const;

  friend bool operator==(const Function&, const Function&) = default;
};

struct Program {
  std::vector<Function> functions;
  std::string entry = "main";

  Function* find(std::string_view name);
  const Function* find(std::string_view name) const;

  friend bool operator==(const Program&, const Program&) = default;
};

// Instruction builders.
Instruction make_const(Reg dst, std::int64_t v, Tag tag = Tag::Original);
Instruction make_move(Reg dst, Reg src, Tag tag = Tag::Original);
Instruction make_binary(BinOp op, Reg dst, Reg a, Reg b, Tag tag = Tag::Original);
Instruction make_unary(UnOp op, Reg dst, Reg a, Tag tag = Tag::Original);
Instruction make_select(Reg dst, Reg cond, Reg a, Reg b, Tag tag = Tag::Original);
Instruction make_load(Reg dst, Reg arr, Reg idx, Tag tag = Tag::Original);
Instruction make_store(Reg arr, Reg idx, Reg val, Tag tag = Tag::Original);
Instruction make_len(Reg dst, Reg arr, Tag tag = Tag::Original);
Instruction make_call(std::optional<Reg> dst, std::string callee, std::vector<Reg> args,
                      Tag tag = Tag::Original);
Instruction make_print(Reg v, Tag tag = Tag::Original);
Instruction make_catch(Reg dst, Tag tag = Tag::Original);
Instruction make_jump(BlockId target, Tag tag = Tag::Original);
Instruction make_branch(Reg cond, BlockId t, BlockId f, Tag tag = Tag::Original);
Instruction make_switch(Reg v, std::vector<std::int64_t> keys, std::vector<BlockId> targets,
                        BlockId dflt, Tag tag = Tag::Original);
Instruction make_return(std::optional<Reg> v, Tag tag = Tag::Original);
Instruction make_throw(Reg code, Tag tag = Tag::Original);

const char* to_string(Type t);
const char* to_string(BinOp op);
const char* to_string(UnOp op);
const char* to_string(IntrinsicFn f);
const char* to_string(Tag t);
const char* to_string(TrapKind k);

/// Result type of a binary operator given its operand type.
Type binary_result_type(BinOp op);
bool is_comparison(BinOp op);
bool is_commutative(BinOp op);

/// Registers read / written by an instruction.
std::vector<Reg> uses(const Instruction& in);
std::optional<Reg> def(const Instruction& in);

/// True when the instruction can raise a trap (directly or through a callee).
bool may_trap(const Instruction& in);
/// True for instructions with externally visible effects (output, calls, memory writes).
bool has_effect(const Instruction& in);
bool touches_memory(const Instruction& in);

/// Normal (non-trap) successors of a block, deduplicated, in target order.
std::vector<BlockId> successors(const BasicBlock& b);

}  // namespace cfo::ir
