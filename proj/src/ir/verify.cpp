#include "cfo/ir/verify.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cfo::ir {

std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  os << d.function;
  if (d.block) os << ":b" << *d.block;
  os << ": " << d.rule;
  if (!d.message.empty()) os << " (" << d.message << ")";
  return os.str();
}

namespace {

class Verifier {
 public:
  explicit Verifier(const Program& p) : prog_(p) {}

  std::vector<Diagnostic> run() {
    std::set<std::string> names;
    for (const auto& f : prog_.functions) {
      if (!names.insert(f.name).second) report(f.name, std::nullopt, "duplicate function", f.name);
    }
    const Function* entry = prog_.find(prog_.entry);
    if (!entry) {
      report(prog_.entry, std::nullopt, "missing entry function", "");
    } else if (entry->params.size() != 1 || entry->regs.size() <= entry->params[0] ||
               entry->regs[entry->params[0]] != Type::Array || entry->ret != Type::Int) {
      report(entry->name, std::nullopt, "entry signature", "expected (int[]) -> int");
    }
    for (const auto& f : prog_.functions) check_function(f);
    return std::move(diags_);
  }

 private:
  void report(const std::string& fn, std::optional<BlockId> b, std::string rule, std::string msg) {
    diags_.push_back(Diagnostic{fn, b, std::move(rule), std::move(msg)});
  }

  bool reg_ok(const Function& f, Reg r) const { return r < f.regs.size(); }

  Type reg_type(const Function& f, Reg r) const { return reg_ok(f, r) ? f.regs[r] : Type::Void; }

  void check_function(const Function& f) {
    fn_ = &f;
    std::set<Reg> seen_params;
    for (Reg p : f.params) {
      if (!reg_ok(f, p)) report(f.name, std::nullopt, "bad register", "param %" + std::to_string(p));
      else if (!seen_params.insert(p).second) report(f.name, std::nullopt, "duplicate param", "");
      else if (f.regs[p] == Type::Void) report(f.name, std::nullopt, "type mismatch", "void param");
    }
    for (Type t : f.regs)
      if (t == Type::Void) {
        report(f.name, std::nullopt, "type mismatch", "void register");
        break;
      }

    ids_.clear();
    for (const auto& b : f.blocks) {
      if (!ids_.insert(b.id).second) report(f.name, b.id, "duplicate block", "");
    }
    if (!ids_.count(f.entry)) report(f.name, std::nullopt, "missing entry block", "");

    handlers_.clear();
    for (const auto& t : f.traps) handlers_.insert(t.handler);

    std::unordered_set<BlockId> normal_targets;
    for (const auto& b : f.blocks) {
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const auto& in = b.instrs[i];
        if (in.is_terminator()) {
          report(f.name, b.id, "code after terminator", "instruction " + std::to_string(i));
          continue;
        }
        if (in.op == Opcode::Catch && (i != 0 || !handlers_.count(b.id)))
          report(f.name, b.id, "misplaced catch", "instruction " + std::to_string(i));
        check_instruction(f, b, in);
      }
      if (!b.term.is_terminator()) {
        report(f.name, b.id, "missing terminator", "");
      } else {
        check_terminator(f, b, b.term);
        for (BlockId t : b.term.targets) normal_targets.insert(t);
      }
    }
    if (normal_targets.count(f.entry)) report(f.name, f.entry, "entry has predecessors", "");
    for (BlockId h : handlers_)
      if (normal_targets.count(h)) report(f.name, h, "handler entered normally", "");

    for (const auto& t : f.traps) {
      const BasicBlock* b = f.find_block(t.block);
      if (!b) {
        report(f.name, t.block, "trap block", "unknown block");
        continue;
      }
      const auto n = static_cast<std::uint32_t>(b->instrs.size());
      if (!(t.start < t.end && t.end <= n + 1)) report(f.name, t.block, "trap range", "");
      if (t.kinds.empty()) report(f.name, t.block, "trap range", "empty kind set");
      const BasicBlock* h = f.find_block(t.handler);
      if (!h) report(f.name, t.block, "dangling target", "handler " + std::to_string(t.handler));
      else if (h->instrs.empty() || h->instrs[0].op != Opcode::Catch)
        report(f.name, t.handler, "trap handler", "handler must begin with catch");
    }
  }

  void expect_arity(const BasicBlock& b, const Instruction& in, std::size_t args, bool dst) {
    if (in.args.size() != args || in.dst.has_value() != dst)
      report(fn_->name, b.id, "operand arity", "");
  }

  void expect_type(const BasicBlock& b, Reg r, Type t, const char* what) {
    if (!reg_ok(*fn_, r)) {
      report(fn_->name, b.id, "bad register", "%" + std::to_string(r));
    } else if (fn_->regs[r] != t) {
      report(fn_->name, b.id, "type mismatch", what);
    }
  }

  void check_regs(const BasicBlock& b, const Instruction& in) {
    for (Reg r : in.args)
      if (!reg_ok(*fn_, r)) report(fn_->name, b.id, "bad register", "%" + std::to_string(r));
    if (in.dst && !reg_ok(*fn_, *in.dst))
      report(fn_->name, b.id, "bad register", "%" + std::to_string(*in.dst));
  }

  void check_instruction(const Function& f, const BasicBlock& b, const Instruction& in) {
    check_regs(b, in);
    if (!in.targets.empty()) report(f.name, b.id, "operand arity", "targets on non-terminator");
    switch (in.op) {
      case Opcode::Const: {
        expect_arity(b, in, 0, true);
        if (!in.dst) break;
        Type t = reg_type(f, *in.dst);
        if (t == Type::Bool && in.imm != 0 && in.imm != 1) report(f.name, b.id, "type mismatch", "bool const");
        if (t == Type::Array && in.imm != -1) report(f.name, b.id, "type mismatch", "array const must be null");
        break;
      }
      case Opcode::Move:
        expect_arity(b, in, 1, true);
        if (in.args.size() == 1 && in.dst && reg_type(f, in.args[0]) != reg_type(f, *in.dst))
          report(f.name, b.id, "type mismatch", "move");
        break;
      case Opcode::Binary: {
        expect_arity(b, in, 2, true);
        if (in.args.size() != 2 || !in.dst) break;
        Type a = reg_type(f, in.args[0]);
        Type c = reg_type(f, in.args[1]);
        if (a != c) {
          report(f.name, b.id, "type mismatch", to_string(in.bin));
          break;
        }
        switch (in.bin) {
          case BinOp::Eq:
          case BinOp::Ne: break;
          case BinOp::And:
          case BinOp::Or:
            if (a != Type::Bool) report(f.name, b.id, "type mismatch", to_string(in.bin));
            break;
          case BinOp::Xor:
            if (a != Type::Bool && a != Type::Int) report(f.name, b.id, "type mismatch", "xor");
            break;
          default:
            if (a != Type::Int) report(f.name, b.id, "type mismatch", to_string(in.bin));
        }
        Type want = in.bin == BinOp::Xor ? a : binary_result_type(in.bin);
        expect_type(b, *in.dst, want, "binary result");
        break;
      }
      case Opcode::Unary:
        expect_arity(b, in, 1, true);
        if (in.args.size() == 1 && in.dst) {
          Type t = in.un == UnOp::Neg ? Type::Int : Type::Bool;
          expect_type(b, in.args[0], t, "unary operand");
          expect_type(b, *in.dst, t, "unary result");
        }
        break;
      case Opcode::Select:
        expect_arity(b, in, 3, true);
        if (in.args.size() == 3 && in.dst) {
          expect_type(b, in.args[0], Type::Bool, "select condition");
          if (reg_type(f, in.args[1]) != reg_type(f, *in.dst) ||
              reg_type(f, in.args[2]) != reg_type(f, *in.dst))
            report(f.name, b.id, "type mismatch", "select");
        }
        break;
      case Opcode::NewArray:
        expect_arity(b, in, 1, true);
        if (in.args.size() == 1 && in.dst) {
          expect_type(b, in.args[0], Type::Int, "array length");
          expect_type(b, *in.dst, Type::Array, "newarr result");
        }
        break;
      case Opcode::ArrayLit:
        expect_arity(b, in, 0, true);
        if (in.dst) expect_type(b, *in.dst, Type::Array, "arrlit result");
        break;
      case Opcode::Load:
        expect_arity(b, in, 2, true);
        if (in.args.size() == 2 && in.dst) {
          expect_type(b, in.args[0], Type::Array, "load array");
          expect_type(b, in.args[1], Type::Int, "load index");
          expect_type(b, *in.dst, Type::Int, "load result");
        }
        break;
      case Opcode::Store:
        expect_arity(b, in, 3, false);
        if (in.args.size() == 3) {
          expect_type(b, in.args[0], Type::Array, "store array");
          expect_type(b, in.args[1], Type::Int, "store index");
          expect_type(b, in.args[2], Type::Int, "store value");
        }
        break;
      case Opcode::Len:
        expect_arity(b, in, 1, true);
        if (in.args.size() == 1 && in.dst) {
          expect_type(b, in.args[0], Type::Array, "len operand");
          expect_type(b, *in.dst, Type::Int, "len result");
        }
        break;
      case Opcode::Call: {
        const Function* callee = prog_.find(in.text);
        if (!callee) {
          report(f.name, b.id, "unknown callee", in.text);
          break;
        }
        if (callee->params.size() != in.args.size()) {
          report(f.name, b.id, "call arity", in.text);
          break;
        }
        for (std::size_t i = 0; i < in.args.size(); ++i)
          if (callee->regs[callee->params[i]] != reg_type(f, in.args[i]))
            report(f.name, b.id, "type mismatch", "argument " + std::to_string(i) + " of " + in.text);
        if (in.dst) {
          if (callee->ret == Type::Void) report(f.name, b.id, "type mismatch", "void call result");
          else expect_type(b, *in.dst, callee->ret, "call result");
        }
        break;
      }
      case Opcode::Intrinsic:
        switch (in.intrinsic) {
          case IntrinsicFn::Print:
            expect_arity(b, in, 1, false);
            if (in.args.size() == 1 && reg_type(f, in.args[0]) == Type::Array)
              report(f.name, b.id, "type mismatch", "print operand");
            break;
          case IntrinsicFn::PrintStr: expect_arity(b, in, 0, false); break;
          case IntrinsicFn::Min:
            expect_arity(b, in, 2, true);
            if (in.args.size() == 2 && in.dst) {
              expect_type(b, in.args[0], Type::Int, "min operand");
              expect_type(b, in.args[1], Type::Int, "min operand");
              expect_type(b, *in.dst, Type::Int, "min result");
            }
            break;
        }
        break;
      case Opcode::Catch:
        expect_arity(b, in, 0, true);
        if (in.dst) expect_type(b, *in.dst, Type::Int, "catch register");
        break;
      default: break;
    }
  }

  void check_terminator(const Function& f, const BasicBlock& b, const Instruction& t) {
    check_regs(b, t);
    for (BlockId target : t.targets)
      if (!ids_.count(target)) report(f.name, b.id, "dangling target", "block " + std::to_string(target));
    if (t.dst) report(f.name, b.id, "operand arity", "terminator with destination");
    switch (t.op) {
      case Opcode::Jump:
        if (t.targets.size() != 1 || !t.args.empty()) report(f.name, b.id, "operand arity", "jump");
        break;
      case Opcode::Branch:
        if (t.targets.size() != 2 || t.args.size() != 1) report(f.name, b.id, "operand arity", "br");
        else expect_type(b, t.args[0], Type::Bool, "branch condition");
        break;
      case Opcode::Switch: {
        if (t.args.size() != 1 || t.targets.size() != t.imms.size() + 1) {
          report(f.name, b.id, "operand arity", "switch");
          break;
        }
        expect_type(b, t.args[0], Type::Int, "switch operand");
        std::set<std::int64_t> keys(t.imms.begin(), t.imms.end());
        if (keys.size() != t.imms.size()) report(f.name, b.id, "duplicate case", "");
        break;
      }
      case Opcode::Return:
        if (!t.targets.empty()) report(f.name, b.id, "operand arity", "ret");
        if (f.ret == Type::Void) {
          if (!t.args.empty()) report(f.name, b.id, "return type", "void function returns a value");
        } else if (t.args.size() != 1) {
          report(f.name, b.id, "return type", "missing return value");
        } else {
          expect_type(b, t.args[0], f.ret, "return value");
        }
        break;
      case Opcode::Throw:
        if (t.args.size() != 1 || !t.targets.empty()) report(f.name, b.id, "operand arity", "throw");
        else expect_type(b, t.args[0], Type::Int, "throw code");
        break;
      default: break;
    }
  }

  const Program& prog_;
  const Function* fn_ = nullptr;
  std::unordered_set<BlockId> ids_;
  std::unordered_set<BlockId> handlers_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> verify(const Program& program) { return Verifier(program).run(); }

}  // namespace cfo::ir
