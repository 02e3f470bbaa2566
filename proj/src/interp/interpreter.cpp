#include "cfo/interp/interpreter.hpp"

#include <charconv>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "cfo/error.hpp"

namespace cfo::interp {

using namespace cfo::ir;

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Returned: return "returned";
    case Outcome::Trapped: return "trapped";
    case Outcome::FuelExhausted: return "fuel_exhausted";
  }
  return "?";
}

std::string describe(const ExecutionResult& r) {
  std::ostringstream os;
  os << to_string(r.outcome);
  if (r.outcome == Outcome::Returned) os << ' ' << r.value;
  if (r.outcome == Outcome::Trapped) os << ' ' << ir::to_string(r.trap_kind) << ' ' << r.value;
  return os.str();
}

std::uint64_t CoverageMap::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, v] : counts) t += v;
  return t;
}

std::optional<Input> parse_input(std::string_view text) {
  Input in;
  std::istringstream is{std::string(text)};
  std::string tok;
  bool first = true;
  while (is >> tok) {
    if (tok == "null") {
      if (!first) return std::nullopt;
      in.null = true;
      first = false;
      continue;
    }
    if (in.null) return std::nullopt;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
    in.values.push_back(v);
    first = false;
  }
  return in;
}

std::string to_string(const Input& in) {
  if (in.null) return "null";
  std::ostringstream os;
  for (std::size_t i = 0; i < in.values.size(); ++i) os << (i ? " " : "") << in.values[i];
  return os.str();
}

std::uint64_t default_fuel() {
  if (const char* env = std::getenv("CFO_FUEL")) {
    std::uint64_t v = 0;
    std::string_view s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size() && v > 0) return v;
  }
  return kDefaultFuel;
}

namespace {

struct PreparedTrap {
  std::uint32_t start, end;
  std::size_t handler;  // block index
  TrapKindSet kinds;
};

struct PreparedFunction {
  const Function* fn = nullptr;
  std::vector<std::size_t> block_of_id;            // id -> index
  std::vector<std::vector<PreparedTrap>> traps;    // per block index, in table order
  std::vector<std::vector<std::size_t>> callees;   // per block: per instruction, callee index
  std::vector<std::vector<std::size_t>> targets;   // per block: terminator targets as indices
  std::vector<std::size_t> coverage_base;          // per block: offset into coverage counters
  std::size_t entry = 0;
};

struct Frame {
  std::size_t func;
  std::vector<std::int64_t> regs;
  std::size_t block;
  std::size_t index;
  std::int64_t pending_code = 0;
};

struct Fault {
  TrapKind kind;
  std::int64_t code;
};

constexpr std::int64_t kNull = -1;

class Machine {
 public:
  Machine(const Program& p, const RunOptions& opts) : program_(p), opts_(opts) { prepare(); }

  ExecutionResult run(const Input& input) {
    ExecutionResult res;
    auto main_it = index_.find(program_.entry);
    if (main_it == index_.end()) throw Error(ErrorCode::InvalidInput, "no entry function");
    std::int64_t arg = kNull;
    if (!input.null) arg = alloc(input.values);
    push_frame(main_it->second, {arg});

    while (true) {
      Frame& f = frames_.back();
      const PreparedFunction& pf = funcs_[f.func];
      const BasicBlock& bb = pf.fn->blocks[f.block];
      const std::size_t n = bb.instrs.size();
      if (steps_ >= opts_.fuel) {
        res.outcome = Outcome::FuelExhausted;
        break;
      }
      ++steps_;
      if (opts_.coverage) ++counters_[pf.coverage_base[f.block] + f.index];

      std::optional<Fault> fault;
      if (f.index < n) {
        fault = step(f, pf, bb.instrs[f.index]);
        if (!fault) {
          // step() may have pushed a frame (call); only advance when it did not.
          if (call_pushed_) call_pushed_ = false;
          else ++frames_.back().index;
          continue;
        }
      } else {
        const Instruction& t = bb.term;
        switch (t.op) {
          case Opcode::Jump: enter(f, pf.targets[f.block][0]); continue;
          case Opcode::Branch:
            enter(f, pf.targets[f.block][f.regs[t.args[0]] ? 0 : 1]);
            continue;
          case Opcode::Switch: {
            std::int64_t v = f.regs[t.args[0]];
            std::size_t k = 0;
            for (; k < t.imms.size(); ++k)
              if (t.imms[k] == v) break;
            enter(f, pf.targets[f.block][k]);
            continue;
          }
          case Opcode::Return: {
            std::int64_t v = t.args.empty() ? 0 : f.regs[t.args[0]];
            frames_.pop_back();
            if (frames_.empty()) {
              res.outcome = Outcome::Returned;
              res.value = v;
              goto done;
            }
            Frame& caller = frames_.back();
            const Instruction& call =
                funcs_[caller.func].fn->blocks[caller.block].instrs[caller.index];
            if (call.dst) caller.regs[*call.dst] = v;
            ++caller.index;
            continue;
          }
          case Opcode::Throw: fault = Fault{TrapKind::User, f.regs[t.args[0]]}; break;
          default: throw Error(ErrorCode::Internal, "bad terminator");
        }
      }
      // Unwind.
      if (!dispatch(*fault)) {
        res.outcome = Outcome::Trapped;
        res.trap_kind = fault->kind;
        res.value = fault->code;
        break;
      }
    }
  done:
    res.output = std::move(output_);
    res.steps = steps_;
    if (opts_.coverage) flush_coverage();
    return res;
  }

 private:
  void prepare() {
    for (std::size_t i = 0; i < program_.functions.size(); ++i) index_[program_.functions[i].name] = i;
    std::size_t cov = 0;
    funcs_.resize(program_.functions.size());
    for (std::size_t i = 0; i < program_.functions.size(); ++i) {
      const Function& fn = program_.functions[i];
      PreparedFunction& pf = funcs_[i];
      pf.fn = &fn;
      BlockId max_id = 0;
      for (const auto& b : fn.blocks) max_id = std::max(max_id, b.id);
      pf.block_of_id.assign(static_cast<std::size_t>(max_id) + 1, 0);
      for (std::size_t k = 0; k < fn.blocks.size(); ++k) pf.block_of_id[fn.blocks[k].id] = k;
      pf.entry = pf.block_of_id.at(fn.entry);
      pf.traps.resize(fn.blocks.size());
      for (const auto& t : fn.traps)
        pf.traps[pf.block_of_id.at(t.block)].push_back(
            PreparedTrap{t.start, t.end, pf.block_of_id.at(t.handler), t.kinds});
      pf.callees.resize(fn.blocks.size());
      pf.targets.resize(fn.blocks.size());
      pf.coverage_base.resize(fn.blocks.size());
      for (std::size_t k = 0; k < fn.blocks.size(); ++k) {
        const auto& b = fn.blocks[k];
        pf.coverage_base[k] = cov;
        cov += b.instrs.size() + 1;
        for (const auto& in : b.instrs) {
          std::size_t c = 0;
          if (in.op == Opcode::Call) c = index_.at(in.text);
          pf.callees[k].push_back(c);
        }
        for (BlockId t : b.term.targets) pf.targets[k].push_back(pf.block_of_id.at(t));
      }
    }
    if (opts_.coverage) counters_.assign(cov, 0);
  }

  void flush_coverage() {
    for (const auto& pf : funcs_)
      for (std::size_t k = 0; k < pf.fn->blocks.size(); ++k) {
        const auto& b = pf.fn->blocks[k];
        for (std::size_t i = 0; i <= b.instrs.size(); ++i)
          opts_.coverage->counts[{pf.fn->name, b.id, static_cast<std::uint32_t>(i)}] +=
              counters_[pf.coverage_base[k] + i];
      }
  }

  void push_frame(std::size_t func, const std::vector<std::int64_t>& args) {
    const PreparedFunction& pf = funcs_[func];
    Frame fr{func, std::vector<std::int64_t>(pf.fn->regs.size(), 0), pf.entry, 0, 0};
    for (std::size_t i = 0; i < args.size(); ++i) fr.regs[pf.fn->params[i]] = args[i];
    frames_.push_back(std::move(fr));
    if (opts_.trace) opts_.trace->push_back(BlockVisit{pf.fn->name, pf.fn->blocks[pf.entry].id});
  }

  void enter(Frame& f, std::size_t block) {
    f.block = block;
    f.index = 0;
    if (opts_.trace) {
      const Function* fn = funcs_[f.func].fn;
      opts_.trace->push_back(BlockVisit{fn->name, fn->blocks[block].id});
    }
  }

  std::int64_t alloc(std::vector<std::int64_t> values) {
    heap_used_ += values.size();
    heap_.push_back(std::move(values));
    return static_cast<std::int64_t>(heap_.size() - 1);
  }

  /// Finds the innermost matching handler in the current frame, popping frames
  /// until one is found. Returns false when the fault escapes main.
  bool dispatch(Fault fault) {
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      const PreparedFunction& pf = funcs_[f.func];
      const PreparedTrap* best = nullptr;
      for (const auto& t : pf.traps[f.block]) {
        if (f.index < t.start || f.index >= t.end || !t.kinds.contains(fault.kind)) continue;
        if (!best || (t.end - t.start) < (best->end - best->start)) best = &t;
      }
      if (best) {
        f.pending_code = fault.code;
        enter(f, best->handler);
        return true;
      }
      frames_.pop_back();
    }
    return false;
  }

  static bool checked_index(const std::vector<std::int64_t>& arr, std::int64_t i) {
    return i >= 0 && static_cast<std::uint64_t>(i) < arr.size();
  }

  std::optional<Fault> step(Frame& f, const PreparedFunction& pf, const Instruction& in) {
    auto& r = f.regs;
    auto arg = [&](std::size_t k) { return r[in.args[k]]; };
    switch (in.op) {
      case Opcode::Const: r[*in.dst] = in.imm; return std::nullopt;
      case Opcode::Move: r[*in.dst] = arg(0); return std::nullopt;
      case Opcode::Binary: {
        const std::uint64_t a = static_cast<std::uint64_t>(arg(0));
        const std::uint64_t b = static_cast<std::uint64_t>(arg(1));
        const std::int64_t sa = arg(0), sb = arg(1);
        std::int64_t v = 0;
        switch (in.bin) {
          case BinOp::Add: v = static_cast<std::int64_t>(a + b); break;
          case BinOp::Sub: v = static_cast<std::int64_t>(a - b); break;
          case BinOp::Mul: v = static_cast<std::int64_t>(a * b); break;
          case BinOp::Div:
            if (sb == 0) return Fault{TrapKind::DivByZero, kDivByZeroCode};
            if (sb == -1) v = static_cast<std::int64_t>(0 - a);
            else v = sa / sb;
            break;
          case BinOp::Rem:
            if (sb == 0) return Fault{TrapKind::DivByZero, kDivByZeroCode};
            v = sb == -1 ? 0 : sa % sb;
            break;
          case BinOp::Xor: v = sa ^ sb; break;
          case BinOp::And: v = sa & sb; break;
          case BinOp::Or: v = sa | sb; break;
          case BinOp::Eq: v = sa == sb; break;
          case BinOp::Ne: v = sa != sb; break;
          case BinOp::Lt: v = sa < sb; break;
          case BinOp::Le: v = sa <= sb; break;
          case BinOp::Gt: v = sa > sb; break;
          case BinOp::Ge: v = sa >= sb; break;
        }
        r[*in.dst] = v;
        return std::nullopt;
      }
      case Opcode::Unary:
        if (in.un == UnOp::Neg) r[*in.dst] = static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(arg(0)));
        else r[*in.dst] = arg(0) ? 0 : 1;
        return std::nullopt;
      case Opcode::Select: r[*in.dst] = arg(0) ? arg(1) : arg(2); return std::nullopt;
      case Opcode::NewArray: {
        std::int64_t n = arg(0);
        if (n < 0 || n > (std::int64_t{1} << 24) || heap_used_ + static_cast<std::uint64_t>(n) > kHeapLimit)
          return Fault{TrapKind::IndexOutOfBounds, kIndexOutOfBoundsCode};
        r[*in.dst] = alloc(std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
        return std::nullopt;
      }
      case Opcode::ArrayLit:
        if (heap_used_ + in.imms.size() > kHeapLimit)
          return Fault{TrapKind::IndexOutOfBounds, kIndexOutOfBoundsCode};
        r[*in.dst] = alloc(in.imms);
        return std::nullopt;
      case Opcode::Load: {
        std::int64_t h = arg(0);
        if (h == kNull) return Fault{TrapKind::NullAccess, kNullAccessCode};
        const auto& arr = heap_[static_cast<std::size_t>(h)];
        std::int64_t i = arg(1);
        if (!checked_index(arr, i)) return Fault{TrapKind::IndexOutOfBounds, kIndexOutOfBoundsCode};
        r[*in.dst] = arr[static_cast<std::size_t>(i)];
        return std::nullopt;
      }
      case Opcode::Store: {
        std::int64_t h = arg(0);
        if (h == kNull) return Fault{TrapKind::NullAccess, kNullAccessCode};
        auto& arr = heap_[static_cast<std::size_t>(h)];
        std::int64_t i = arg(1);
        if (!checked_index(arr, i)) return Fault{TrapKind::IndexOutOfBounds, kIndexOutOfBoundsCode};
        arr[static_cast<std::size_t>(i)] = arg(2);
        return std::nullopt;
      }
      case Opcode::Len: {
        std::int64_t h = arg(0);
        if (h == kNull) return Fault{TrapKind::NullAccess, kNullAccessCode};
        r[*in.dst] = static_cast<std::int64_t>(heap_[static_cast<std::size_t>(h)].size());
        return std::nullopt;
      }
      case Opcode::Call: {
        if (frames_.size() >= kMaxCallDepth) {
          // Treated as resource exhaustion, like running out of fuel.
          steps_ = opts_.fuel;
          call_pushed_ = true;
          return std::nullopt;
        }
        std::vector<std::int64_t> args;
        args.reserve(in.args.size());
        for (Reg a : in.args) args.push_back(r[a]);
        std::size_t callee = pf.callees[f.block][f.index];
        push_frame(callee, args);  // invalidates f
        call_pushed_ = true;
        return std::nullopt;
      }
      case Opcode::Intrinsic:
        switch (in.intrinsic) {
          case IntrinsicFn::Print: output_.push_back(std::to_string(arg(0))); break;
          case IntrinsicFn::PrintStr: output_.push_back(in.text); break;
          case IntrinsicFn::Min: r[*in.dst] = std::min(arg(0), arg(1)); break;
        }
        return std::nullopt;
      case Opcode::Catch: r[*in.dst] = f.pending_code; return std::nullopt;
      default: throw Error(ErrorCode::Internal, "terminator inside block body");
    }
  }

  const Program& program_;
  RunOptions opts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<PreparedFunction> funcs_;
  std::vector<Frame> frames_;
  std::vector<std::vector<std::int64_t>> heap_;
  std::uint64_t heap_used_ = 0;
  std::vector<std::string> output_;
  std::vector<std::uint64_t> counters_;
  std::uint64_t steps_ = 0;
  bool call_pushed_ = false;
};

}  // namespace

ExecutionResult execute(const Program& program, const Input& input, const RunOptions& options) {
  Machine m(program, options);
  return m.run(input);
}

ExecutionResult run(const Program& program, const Input& input, std::uint64_t fuel) {
  RunOptions o;
  o.fuel = fuel;
  return execute(program, input, o);
}

std::pair<ExecutionResult, CoverageMap> run_with_coverage(const Program& program, const Input& input,
                                                          std::uint64_t fuel) {
  CoverageMap cov;
  RunOptions o;
  o.fuel = fuel;
  o.coverage = &cov;
  auto r = execute(program, input, o);
  return {std::move(r), std::move(cov)};
}

}  // namespace cfo::interp
