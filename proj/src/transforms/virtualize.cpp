#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms {

using namespace ir;
using namespace detail;

namespace {

// Bytecode layout: [opcode, operands...]. Register operands are slots in an
// int register file; bools are stored as 0/1. Instructions touching array
// registers run as "escape" sites: the opcode is followed by a site number
// and an inner switch executes the original instruction with its own
// array registers.
enum class Kind : std::uint8_t {
  Const,
  Move,
  Bin,  // one opcode per BinOp in use
  Neg,
  Not,
  Select,
  Min,
  Print,
  Escape,
  Jump,
  Branch,
  Switch,
  Ret,
  RetVoid,
  Throw,
};

struct OpKey {
  Kind kind;
  BinOp bin = BinOp::Add;
  friend bool operator<(const OpKey& a, const OpKey& b) {
    return std::tie(a.kind, a.bin) < std::tie(b.kind, b.bin);
  }
};

class Virtualizer {
 public:
  Virtualizer(const Function& fn, std::uint64_t seed) : src_(fn), seed_(seed) {}

  Function run() {
    for (const auto& t : src_.traps) {
      (void)t;
      throw Error(ErrorCode::UnsupportedFeature, src_.name + ": trap entries are not virtualized");
    }
    for (const auto& b : src_.blocks)
      for (const auto& in : b.instrs)
        if (in.op == Opcode::Call) throw Error(ErrorCode::UnsupportedFeature, src_.name + ": calls are not virtualized");

    out_ = src_;
    out_.blocks.clear();
    out_.traps.clear();
    for (Reg r = 0; r < src_.regs.size(); ++r)
      if (src_.regs[r] != Type::Array) slot_[r] = static_cast<std::int64_t>(slot_.size());

    layout();
    assign_opcodes();
    build();
    return std::move(out_);
  }

 private:
  bool involves_array(const Instruction& in) const {
    if (in.dst && src_.regs[*in.dst] == Type::Array) return true;
    for (Reg a : in.args)
      if (src_.regs[a] == Type::Array) return true;
    return in.op == Opcode::Intrinsic && in.intrinsic == IntrinsicFn::PrintStr;
  }

  OpKey key_of(const Instruction& in) const {
    if (involves_array(in)) return {Kind::Escape};
    switch (in.op) {
      case Opcode::Const: return {Kind::Const};
      case Opcode::Move: return {Kind::Move};
      case Opcode::Binary: return {Kind::Bin, in.bin};
      case Opcode::Unary: return {in.un == UnOp::Neg ? Kind::Neg : Kind::Not};
      case Opcode::Select: return {Kind::Select};
      case Opcode::Intrinsic: return {in.intrinsic == IntrinsicFn::Min ? Kind::Min : Kind::Print};
      case Opcode::Jump: return {Kind::Jump};
      case Opcode::Branch: return {Kind::Branch};
      case Opcode::Switch: return {Kind::Switch};
      case Opcode::Return: return {in.args.empty() ? Kind::RetVoid : Kind::Ret};
      case Opcode::Throw: return {Kind::Throw};
      default: throw Error(ErrorCode::UnsupportedFeature, "cannot virtualize this instruction");
    }
  }

  static std::size_t width(const OpKey& k) {
    switch (k.kind) {
      case Kind::Const:
      case Kind::Move:
      case Kind::Neg:
      case Kind::Not: return 3;
      case Kind::Bin:
      case Kind::Min: return 4;
      case Kind::Select: return 5;
      case Kind::Print:
      case Kind::Escape:
      case Kind::Jump:
      case Kind::Switch:
      case Kind::Ret:
      case Kind::Throw: return 2;
      case Kind::Branch: return 4;
      case Kind::RetVoid: return 1;
    }
    return 1;
  }

  void layout() {
    std::int64_t pc = 0;
    for (const auto& b : src_.blocks) {
      block_pc_[b.id] = pc;
      for (const auto& in : b.instrs) {
        auto k = key_of(in);
        used_.insert(k);
        pc += static_cast<std::int64_t>(width(k));
      }
      auto k = key_of(b.term);
      used_.insert(k);
      pc += static_cast<std::int64_t>(width(k));
    }
  }

  void assign_opcodes() {
    std::vector<std::int64_t> pool;
    for (std::int64_t v = 1; v <= 255; ++v) pool.push_back(v);
    Rng(mix_seed(seed_, 0x7AB)).shuffle(pool);
    std::size_t i = 0;
    for (const auto& k : used_) opcode_[k] = pool[i++];
  }

  std::int64_t slot(Reg r) const { return slot_.at(r); }

  void encode(const Instruction& in, std::int64_t pc) {
    OpKey k = key_of(in);
    code_.push_back(opcode_.at(k));
    switch (k.kind) {
      case Kind::Const: code_.insert(code_.end(), {slot(*in.dst), in.imm}); break;
      case Kind::Move:
      case Kind::Neg:
      case Kind::Not: code_.insert(code_.end(), {slot(*in.dst), slot(in.args[0])}); break;
      case Kind::Bin:
      case Kind::Min: code_.insert(code_.end(), {slot(*in.dst), slot(in.args[0]), slot(in.args[1])}); break;
      case Kind::Select:
        code_.insert(code_.end(), {slot(*in.dst), slot(in.args[0]), slot(in.args[1]), slot(in.args[2])});
        break;
      case Kind::Print:
      case Kind::Ret:
      case Kind::Throw: code_.push_back(slot(in.args[0])); break;
      case Kind::Escape:
        code_.push_back(static_cast<std::int64_t>(escapes_.size()));
        escapes_.push_back({in, pc + 2});
        break;
      case Kind::Jump: code_.push_back(block_pc_.at(in.targets[0])); break;
      case Kind::Branch:
        code_.insert(code_.end(), {slot(in.args[0]), block_pc_.at(in.targets[0]), block_pc_.at(in.targets[1])});
        break;
      case Kind::Switch:
        code_.push_back(static_cast<std::int64_t>(switches_.size()));
        switches_.push_back(in);
        break;
      case Kind::RetVoid: break;
    }
  }

  BlockId block(std::vector<Instruction> instrs, Instruction term) {
    BasicBlock b;
    b.instrs = std::move(instrs);
    b.term = std::move(term);
    for (auto& in : b.instrs) in.tag = Tag::Dispatcher;
    b.term.tag = Tag::Dispatcher;
    return add_block(out_, std::move(b));
  }

  Reg reg(Type t) { return out_.new_reg(t); }

  Reg constant(std::vector<Instruction>& code, std::int64_t v) {
    Reg r = reg(Type::Int);
    code.push_back(make_const(r, v));
    return r;
  }

  /// Reads the register-file slot held in register `slot_reg`.
  Reg read(std::vector<Instruction>& code, Reg slot_reg) {
    Reg v = reg(Type::Int);
    code.push_back(make_load(v, file_, slot_reg));
    return v;
  }

  Reg truthy(std::vector<Instruction>& code, Reg v) {
    Reg z = constant(code, 0);
    Reg b = reg(Type::Bool);
    code.push_back(make_binary(BinOp::Ne, b, v, z));
    return b;
  }

  Reg as_int(std::vector<Instruction>& code, Reg b) {
    Reg one = constant(code, 1);
    Reg zero = constant(code, 0);
    Reg v = reg(Type::Int);
    code.push_back(make_select(v, b, one, zero));
    return v;
  }

  void build() {
    for (const auto& b : src_.blocks) {
      for (const auto& in : b.instrs) encode(in, static_cast<std::int64_t>(code_.size()));
      encode(b.term, static_cast<std::int64_t>(code_.size()));
    }

    // Entry: code table, register file, parameters, initial pc.
    std::vector<Instruction> init;
    Reg code_reg = reg(Type::Array);
    Instruction lit;
    lit.op = Opcode::ArrayLit;
    lit.dst = code_reg;
    lit.imms = code_;
    init.push_back(lit);
    file_ = reg(Type::Array);
    Reg n = constant(init, static_cast<std::int64_t>(slot_.size()));
    init.push_back(make_new_array(file_, n));
    for (Reg p : src_.params) {
      if (src_.regs[p] == Type::Array) continue;
      Reg s = constant(init, slot(p));
      Reg v = src_.regs[p] == Type::Bool ? as_int(init, p) : p;
      init.push_back(make_store(file_, s, v));
    }
    pc_ = reg(Type::Int);
    init.push_back(make_const(pc_, block_pc_.at(src_.entry)));
    BlockId entry = block(std::move(init), make_jump(0));
    out_.entry = entry;
    BlockId header = block({}, make_jump(0));
    out_.block(entry).term = make_jump(header);
    code_reg_ = code_reg;

    std::vector<std::int64_t> keys;
    std::vector<BlockId> targets;
    for (const auto& [k, op] : opcode_) {
      keys.push_back(op);
      targets.push_back(handler(k, header));
    }
    std::vector<std::pair<std::int64_t, BlockId>> table;
    for (std::size_t i = 0; i < keys.size(); ++i) table.push_back({keys[i], targets[i]});
    std::sort(table.begin(), table.end());
    keys.clear();
    targets.clear();
    for (auto& [k, t] : table) {
      keys.push_back(k);
      targets.push_back(t);
    }
    Reg op = reg(Type::Int);
    BlockId fallback = default_return();
    out_.block(header).instrs = {tagged(make_load(op, code_reg_, pc_), Tag::Dispatcher)};
    out_.block(header).term = make_switch(op, keys, targets, fallback, Tag::Dispatcher);
  }

  BlockId default_return() {
    if (out_.ret == Type::Void) return block({}, make_return(std::nullopt));
    std::vector<Instruction> code;
    Reg v = reg(out_.ret);
    code.push_back(make_const(v, default_value(out_.ret)));
    return block(std::move(code), make_return(v));
  }

  /// Decodes `count` operands after pc; returns their registers and the cursor.
  std::vector<Reg> operands(std::vector<Instruction>& code, std::size_t count, Reg& cursor) {
    Reg one = constant(code, 1);
    std::vector<Reg> out;
    cursor = pc_;
    for (std::size_t i = 0; i < count; ++i) {
      Reg next = reg(Type::Int);
      code.push_back(make_binary(BinOp::Add, next, cursor, one));
      cursor = next;
      Reg v = reg(Type::Int);
      code.push_back(make_load(v, code_reg_, cursor));
      out.push_back(v);
    }
    return out;
  }

  void advance(std::vector<Instruction>& code, Reg cursor) {
    Reg one = constant(code, 1);
    code.push_back(make_binary(BinOp::Add, pc_, cursor, one));
  }

  BlockId handler(const OpKey& k, BlockId header) {
    std::vector<Instruction> code;
    Reg cursor = pc_;
    switch (k.kind) {
      case Kind::Const: {
        auto ops = operands(code, 2, cursor);
        code.push_back(make_store(file_, ops[0], ops[1]));
        break;
      }
      case Kind::Move: {
        auto ops = operands(code, 2, cursor);
        code.push_back(make_store(file_, ops[0], read(code, ops[1])));
        break;
      }
      case Kind::Neg:
      case Kind::Not: {
        auto ops = operands(code, 2, cursor);
        Reg a = read(code, ops[1]);
        Reg v = reg(Type::Int);
        if (k.kind == Kind::Neg) {
          code.push_back(make_unary(UnOp::Neg, v, a));
        } else {
          Reg one = constant(code, 1);
          code.push_back(make_binary(BinOp::Xor, v, a, one));
        }
        code.push_back(make_store(file_, ops[0], v));
        break;
      }
      case Kind::Bin: {
        auto ops = operands(code, 3, cursor);
        Reg a = read(code, ops[1]);
        Reg b = read(code, ops[2]);
        Reg v = reg(Type::Int);
        switch (k.bin) {
          case BinOp::And: code.push_back(make_binary(BinOp::Mul, v, a, b)); break;
          case BinOp::Or: {
            Reg sum = reg(Type::Int);
            code.push_back(make_binary(BinOp::Add, sum, a, b));
            v = as_int(code, truthy(code, sum));
            break;
          }
          default:
            if (is_comparison(k.bin)) {
              Reg c = reg(Type::Bool);
              code.push_back(make_binary(k.bin, c, a, b));
              v = as_int(code, c);
            } else {
              code.push_back(make_binary(k.bin, v, a, b));
            }
        }
        code.push_back(make_store(file_, ops[0], v));
        break;
      }
      case Kind::Select: {
        auto ops = operands(code, 4, cursor);
        Reg c = truthy(code, read(code, ops[1]));
        Reg a = read(code, ops[2]);
        Reg b = read(code, ops[3]);
        Reg v = reg(Type::Int);
        code.push_back(make_select(v, c, a, b));
        code.push_back(make_store(file_, ops[0], v));
        break;
      }
      case Kind::Min: {
        auto ops = operands(code, 3, cursor);
        Instruction m;
        m.op = Opcode::Intrinsic;
        m.intrinsic = IntrinsicFn::Min;
        m.dst = reg(Type::Int);
        m.args = {read(code, ops[1]), read(code, ops[2])};
        code.push_back(m);
        code.push_back(make_store(file_, ops[0], *m.dst));
        break;
      }
      case Kind::Print: {
        auto ops = operands(code, 1, cursor);
        code.push_back(make_print(read(code, ops[0])));
        break;
      }
      case Kind::Jump: {
        auto ops = operands(code, 1, cursor);
        code.push_back(make_move(pc_, ops[0]));
        return block(std::move(code), make_jump(header));
      }
      case Kind::Branch: {
        auto ops = operands(code, 3, cursor);
        Reg c = truthy(code, read(code, ops[0]));
        code.push_back(make_select(pc_, c, ops[1], ops[2]));
        return block(std::move(code), make_jump(header));
      }
      case Kind::Ret: {
        auto ops = operands(code, 1, cursor);
        Reg v = read(code, ops[0]);
        if (out_.ret == Type::Bool) v = truthy(code, v);
        return block(std::move(code), make_return(v));
      }
      case Kind::RetVoid: return block({}, make_return(std::nullopt));
      case Kind::Throw: {
        auto ops = operands(code, 1, cursor);
        return block(std::move(code), make_throw(read(code, ops[0])));
      }
      case Kind::Escape: return escape_handler(header);
      case Kind::Switch: return switch_handler(header);
    }
    advance(code, cursor);
    return block(std::move(code), make_jump(header));
  }

  BlockId escape_handler(BlockId header) {
    std::vector<Instruction> code;
    Reg cursor = pc_;
    auto ops = operands(code, 1, cursor);
    std::vector<std::int64_t> keys;
    std::vector<BlockId> targets;
    for (std::size_t i = 0; i < escapes_.size(); ++i) {
      keys.push_back(static_cast<std::int64_t>(i));
      targets.push_back(escape_case(escapes_[i].first, escapes_[i].second, header));
    }
    BlockId fallback = default_return();
    return block(std::move(code), make_switch(ops[0], keys, targets, fallback));
  }

  BlockId escape_case(const Instruction& orig, std::int64_t next_pc, BlockId header) {
    std::vector<Instruction> code;
    Instruction in = orig;
    for (auto& a : in.args) {
      if (src_.regs[a] == Type::Array) continue;
      Reg v = read(code, constant(code, slot(a)));
      a = src_.regs[a] == Type::Bool ? truthy(code, v) : v;
    }
    if (in.is_terminator()) {
      // Only array returns escape.
      return block(std::move(code), in);
    }
    std::optional<Reg> result;
    if (in.dst && src_.regs[*in.dst] != Type::Array) {
      result = *in.dst;
      in.dst = reg(src_.regs[*result]);
    }
    code.push_back(in);
    if (result) {
      Reg v = src_.regs[*result] == Type::Bool ? as_int(code, *in.dst) : *in.dst;
      code.push_back(make_store(file_, constant(code, slot(*result)), v));
    }
    code.push_back(make_const(pc_, next_pc));
    return block(std::move(code), make_jump(header));
  }

  BlockId switch_handler(BlockId header) {
    std::vector<Instruction> code;
    Reg cursor = pc_;
    auto ops = operands(code, 1, cursor);
    std::vector<std::int64_t> keys;
    std::vector<BlockId> targets;
    for (std::size_t i = 0; i < switches_.size(); ++i) {
      const auto& sw = switches_[i];
      std::vector<Instruction> sc;
      Reg v = read(sc, constant(sc, slot(sw.args[0])));
      std::vector<BlockId> arms;
      for (BlockId t : sw.targets) {
        std::vector<Instruction> set{make_const(pc_, block_pc_.at(t))};
        arms.push_back(block(std::move(set), make_jump(header)));
      }
      BlockId dflt = arms.back();
      arms.pop_back();
      keys.push_back(static_cast<std::int64_t>(i));
      targets.push_back(block(std::move(sc), make_switch(v, sw.imms, arms, dflt)));
    }
    BlockId fallback = default_return();
    return block(std::move(code), make_switch(ops[0], keys, targets, fallback));
  }

  const Function& src_;
  std::uint64_t seed_;
  Function out_;
  std::map<Reg, std::int64_t> slot_;
  std::map<BlockId, std::int64_t> block_pc_;
  std::set<OpKey> used_;
  std::map<OpKey, std::int64_t> opcode_;
  std::vector<std::int64_t> code_;
  std::vector<std::pair<Instruction, std::int64_t>> escapes_;
  std::vector<Instruction> switches_;
  Reg file_ = 0;
  Reg pc_ = 0;
  Reg code_reg_ = 0;
};

}  // namespace

Function virtualize_function(const Function& fn, std::uint64_t seed) { return Virtualizer(fn, seed).run(); }

namespace detail {

TransformResult table_interpretation(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  std::vector<std::size_t> sites;
  std::string why;
  for (std::size_t f = 0; f < r.program.functions.size(); ++f) {
    try {
      virtualize_function(r.program.functions[f], 0);
      sites.push_back(f);
    } catch (const Error& e) {
      if (why.empty()) why = e.what();
    }
  }
  if (sites.empty()) no_sites(why.empty() ? "no functions" : "no function qualifies (" + why + ")");
  // Every qualifying function is virtualized; a partial choice would leave the
  // structural proxy unmet for the rest.
  for (std::size_t f : sites) {
    auto& fn = r.program.functions[f];
    fn = virtualize_function(fn, mix_seed(cfg.seed, 1000 + f));
    r.sites.push_back(Site{fn.name, std::nullopt, "virtualized"});
  }
  return r;
}

}  // namespace detail
}  // namespace cfo::transforms
