#include <algorithm>
#include <map>

#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/ir/analysis.hpp"

namespace cfo::frontend {

using namespace cfo::ir;

namespace {

class FunctionLowerer {
 public:
  FunctionLowerer(const std::map<std::string, Type>& rets, const Node& f) : rets_(rets) {
    fn_.name = f.name;
    fn_.ret = f.type;
    scopes_.emplace_back();
    for (const auto& p : f.params) {
      Reg r = fn_.new_reg(p.type);
      fn_.params.push_back(r);
      scopes_.back()[p.name] = r;
    }
    span_ = f.span;
    cur_ = new_block();
    fn_.entry = cur_;
    body_ = &f.children.at(0);
  }

  Function run() {
    for (const auto& s : body_->children) statement(s);
    if (!terminated_) {
      if (fn_.ret == Type::Void) {
        terminate(make_return(std::nullopt));
      } else {
        Reg r = fn_.new_reg(fn_.ret);
        emit(make_const(r, default_value(fn_.ret)));
        terminate(make_return(r));
      }
    }
    emit_traps();
    prune_and_renumber();
    return std::move(fn_);
  }

 private:
  struct Control {
    BlockId break_target;
    std::optional<BlockId> continue_target;
  };
  struct TryRegion {
    std::vector<BlockId> blocks;
    BlockId handler = 0;
    TrapKindSet kinds;
    int depth = 0;
  };

  static std::int64_t default_value(Type t) { return t == Type::Array ? -1 : 0; }

  BlockId new_block() {
    BasicBlock b;
    b.id = static_cast<BlockId>(fn_.blocks.size());
    fn_.blocks.push_back(std::move(b));
    has_term_.push_back(false);
    for (std::size_t r : active_tries_) tries_[r].blocks.push_back(fn_.blocks.back().id);
    return fn_.blocks.back().id;
  }

  void switch_to(BlockId b) {
    cur_ = b;
    terminated_ = has_term_[b];
  }

  void emit(Instruction in) {
    if (terminated_) switch_to(new_block());
    in.span = span_;
    fn_.blocks[cur_].instrs.push_back(std::move(in));
  }

  void terminate(Instruction in) {
    if (terminated_) switch_to(new_block());
    in.span = span_;
    fn_.blocks[cur_].term = std::move(in);
    has_term_[cur_] = true;
    terminated_ = true;
  }

  void jump_if_open(BlockId target) {
    if (!terminated_) terminate(make_jump(target));
  }

  Reg lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    throw Error(ErrorCode::Internal, "unresolved identifier '" + name + "' after checking");
  }

  Reg target(std::optional<Reg> dst, Type t) { return dst ? *dst : fn_.new_reg(t); }

  static BinOp binop(const std::string& op) {
    if (op == "+") return BinOp::Add;
    if (op == "-") return BinOp::Sub;
    if (op == "*") return BinOp::Mul;
    if (op == "/") return BinOp::Div;
    if (op == "%") return BinOp::Rem;
    if (op == "^") return BinOp::Xor;
    if (op == "==") return BinOp::Eq;
    if (op == "!=") return BinOp::Ne;
    if (op == "<") return BinOp::Lt;
    if (op == "<=") return BinOp::Le;
    if (op == ">") return BinOp::Gt;
    if (op == ">=") return BinOp::Ge;
    throw Error(ErrorCode::Internal, "unknown operator " + op);
  }

  /// Evaluates `e`; the final operation writes `dst` when given.
  Reg value(const Node& e, std::optional<Reg> dst = std::nullopt) {
    Span saved = span_;
    span_ = e.span;
    Reg out = value_inner(e, dst);
    span_ = saved;
    return out;
  }

  Reg value_inner(const Node& e, std::optional<Reg> dst) {
    switch (e.kind) {
      case NodeKind::Literal: {
        Reg r = target(dst, e.type);
        if (e.type == Type::Array && !e.is_null) {
          Instruction in;
          in.op = Opcode::ArrayLit;
          in.dst = r;
          in.imms = e.values;
          emit(std::move(in));
        } else {
          emit(make_const(r, e.type == Type::Array ? -1 : e.value));
        }
        return r;
      }
      case NodeKind::VarRef: {
        Reg v = lookup(e.name);
        if (dst && *dst != v) {
          emit(make_move(*dst, v));
          return *dst;
        }
        return v;
      }
      case NodeKind::Index: {
        Reg a = value(e.children[0]);
        Reg i = value(e.children[1]);
        Reg r = target(dst, Type::Int);
        emit(make_load(r, a, i));
        return r;
      }
      case NodeKind::UnaryOp: {
        Reg a = value(e.children[0]);
        Reg r = target(dst, e.type);
        emit(make_unary(e.name == "-" ? UnOp::Neg : UnOp::Not, r, a));
        return r;
      }
      case NodeKind::BinaryOp: {
        if (e.name == "&&" || e.name == "||") {
          Reg tmp = fn_.new_reg(Type::Bool);
          BlockId t = new_block(), f = new_block(), join = new_block();
          cond(e, t, f);
          switch_to(t);
          emit(make_const(tmp, 1));
          terminate(make_jump(join));
          switch_to(f);
          emit(make_const(tmp, 0));
          terminate(make_jump(join));
          switch_to(join);
          if (dst) {
            emit(make_move(*dst, tmp));
            return *dst;
          }
          return tmp;
        }
        Reg a = value(e.children[0]);
        Reg b = value(e.children[1]);
        Reg r = target(dst, e.type);
        emit(make_binary(binop(e.name), r, a, b));
        return r;
      }
      case NodeKind::Call: {
        std::vector<Reg> args;
        for (const auto& c : e.children) args.push_back(value(c));
        Type rt = rets_.at(e.name);
        std::optional<Reg> r;
        if (rt != Type::Void) r = target(dst, rt);
        emit(make_call(r, e.name, args));
        return r.value_or(0);
      }
      case NodeKind::IntrinsicCall: {
        if (e.name == "print") {
          Reg a = value(e.children[0]);
          emit(make_print(a));
          return 0;
        }
        if (e.name == "print_str") {
          Instruction in;
          in.op = Opcode::Intrinsic;
          in.intrinsic = IntrinsicFn::PrintStr;
          in.text = e.text;
          emit(std::move(in));
          return 0;
        }
        if (e.name == "len") {
          Reg a = value(e.children[0]);
          Reg r = target(dst, Type::Int);
          emit(make_len(r, a));
          return r;
        }
        if (e.name == "min") {
          Reg a = value(e.children[0]);
          Reg b = value(e.children[1]);
          Reg r = target(dst, Type::Int);
          Instruction in;
          in.op = Opcode::Intrinsic;
          in.intrinsic = IntrinsicFn::Min;
          in.dst = r;
          in.args = {a, b};
          emit(std::move(in));
          return r;
        }
        // new int[n]
        Reg n = value(e.children[0]);
        Reg r = target(dst, Type::Array);
        Instruction in;
        in.op = Opcode::NewArray;
        in.dst = r;
        in.args = {n};
        emit(std::move(in));
        return r;
      }
      default: throw Error(ErrorCode::Internal, std::string("cannot lower expression ") + to_string(e.kind));
    }
  }

  /// Lowers a boolean expression as control flow.
  void cond(const Node& e, BlockId t, BlockId f) {
    Span saved = span_;
    span_ = e.span;
    if (e.kind == NodeKind::BinaryOp && (e.name == "&&" || e.name == "||")) {
      BlockId mid = new_block();
      if (e.name == "&&") cond(e.children[0], mid, f);
      else cond(e.children[0], t, mid);
      switch_to(mid);
      cond(e.children[1], t, f);
    } else if (e.kind == NodeKind::UnaryOp && e.name == "!") {
      cond(e.children[0], f, t);
    } else if (e.kind == NodeKind::Literal && e.type == Type::Bool) {
      terminate(make_jump(e.value ? t : f));
    } else {
      Reg c = value(e);
      terminate(make_branch(c, t, f));
    }
    span_ = saved;
  }

  void block(const Node& b) {
    scopes_.emplace_back();
    for (const auto& s : b.children) statement(s);
    scopes_.pop_back();
  }

  void statement(const Node& s) {
    Span saved = span_;
    span_ = s.span;
    statement_inner(s);
    span_ = saved;
  }

  void statement_inner(const Node& s) {
    switch (s.kind) {
      case NodeKind::Block: block(s); break;
      case NodeKind::VarDecl: {
        Reg r = fn_.new_reg(s.type);
        if (!s.children.empty()) value(s.children[0], r);
        else emit(make_const(r, default_value(s.type)));
        scopes_.back()[s.name] = r;
        break;
      }
      case NodeKind::Assign: {
        const Node& t = s.children[0];
        if (t.kind == NodeKind::VarRef) {
          value(s.children[1], lookup(t.name));
        } else {
          Reg a = value(t.children[0]);
          Reg i = value(t.children[1]);
          Reg v = value(s.children[1]);
          emit(make_store(a, i, v));
        }
        break;
      }
      case NodeKind::If: {
        BlockId then_b = new_block();
        bool has_else = s.children.size() > 2;
        BlockId else_b = has_else ? new_block() : 0;
        BlockId join = new_block();
        cond(s.children[0], then_b, has_else ? else_b : join);
        switch_to(then_b);
        block(s.children[1]);
        jump_if_open(join);
        if (has_else) {
          switch_to(else_b);
          const Node& e = s.children[2];
          if (e.kind == NodeKind::If) {
            scopes_.emplace_back();
            statement(e);
            scopes_.pop_back();
          } else {
            block(e);
          }
          jump_if_open(join);
        }
        switch_to(join);
        break;
      }
      case NodeKind::While: {
        BlockId header = new_block();
        terminate(make_jump(header));
        switch_to(header);
        BlockId body = new_block();
        BlockId exit = new_block();
        cond(s.children[0], body, exit);
        switch_to(body);
        controls_.push_back(Control{exit, header});
        block(s.children[1]);
        controls_.pop_back();
        jump_if_open(header);
        switch_to(exit);
        break;
      }
      case NodeKind::For: {
        scopes_.emplace_back();
        statement(s.children[0]);
        BlockId header = new_block();
        terminate(make_jump(header));
        switch_to(header);
        BlockId body = new_block();
        BlockId update = new_block();
        BlockId exit = new_block();
        cond(s.children[1], body, exit);
        switch_to(body);
        controls_.push_back(Control{exit, update});
        block(s.children[3]);
        controls_.pop_back();
        jump_if_open(update);
        switch_to(update);
        statement(s.children[2]);
        jump_if_open(header);
        switch_to(exit);
        scopes_.pop_back();
        break;
      }
      case NodeKind::Switch: {
        Reg v = value(s.children[0]);
        std::vector<BlockId> cases;
        for (std::size_t i = 0; i < s.values.size(); ++i) cases.push_back(new_block());
        std::optional<BlockId> dflt;
        if (s.has_default()) dflt = new_block();
        BlockId exit = new_block();
        terminate(make_switch(v, s.values, cases, dflt.value_or(exit)));
        std::optional<BlockId> cont;
        for (auto it = controls_.rbegin(); it != controls_.rend(); ++it)
          if (it->continue_target) {
            cont = it->continue_target;
            break;
          }
        controls_.push_back(Control{exit, cont});
        for (std::size_t i = 0; i < cases.size(); ++i) {
          switch_to(cases[i]);
          block(s.children[i + 1]);
          jump_if_open(exit);
        }
        if (dflt) {
          switch_to(*dflt);
          block(s.children.back());
          jump_if_open(exit);
        }
        controls_.pop_back();
        switch_to(exit);
        break;
      }
      case NodeKind::Break: terminate(make_jump(controls_.back().break_target)); break;
      case NodeKind::Continue:
        for (auto it = controls_.rbegin(); it != controls_.rend(); ++it)
          if (it->continue_target) {
            terminate(make_jump(*it->continue_target));
            break;
          }
        break;
      case NodeKind::Return:
        if (s.children.empty()) {
          terminate(make_return(std::nullopt));
        } else {
          Reg r = value(s.children[0]);
          terminate(make_return(r));
        }
        break;
      case NodeKind::Throw: {
        Reg r = value(s.children[0]);
        terminate(make_throw(r));
        break;
      }
      case NodeKind::TryCatch: {
        std::size_t region = tries_.size();
        tries_.push_back(TryRegion{{}, 0, s.kinds, static_cast<int>(active_tries_.size())});
        active_tries_.push_back(region);
        BlockId body = new_block();
        terminate(make_jump(body));
        switch_to(body);
        block(s.children[0]);
        active_tries_.pop_back();
        BlockId after = new_block();
        jump_if_open(after);
        BlockId handler = new_block();
        tries_[region].handler = handler;
        switch_to(handler);
        scopes_.emplace_back();
        Reg code = fn_.new_reg(Type::Int);
        if (!s.name.empty()) scopes_.back()[s.name] = code;
        emit(make_catch(code));
        block(s.children[1]);
        scopes_.pop_back();
        jump_if_open(after);
        switch_to(after);
        break;
      }
      case NodeKind::Call:
      case NodeKind::IntrinsicCall: value(s); break;
      default: throw Error(ErrorCode::Internal, std::string("cannot lower statement ") + to_string(s.kind));
    }
  }

  void emit_traps() {
    std::vector<std::size_t> order(tries_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return tries_[a].depth > tries_[b].depth; });
    for (std::size_t i : order) {
      const auto& r = tries_[i];
      for (BlockId b : r.blocks) {
        auto n = static_cast<std::uint32_t>(fn_.blocks[b].instrs.size());
        fn_.traps.push_back(TrapEntry{b, 0, n + 1, r.handler, r.kinds});
      }
    }
  }

  void prune_and_renumber() {
    Digraph g = to_digraph(fn_, true);
    auto live = reachable(g);
    std::map<BlockId, BlockId> remap;
    std::vector<BasicBlock> kept;
    for (std::size_t i = 0; i < fn_.blocks.size(); ++i) {
      if (!live[i]) continue;
      remap[fn_.blocks[i].id] = static_cast<BlockId>(kept.size());
      kept.push_back(std::move(fn_.blocks[i]));
    }
    for (auto& b : kept) {
      b.id = remap.at(b.id);
      for (auto& t : b.term.targets) t = remap.at(t);
    }
    std::vector<TrapEntry> traps;
    for (auto t : fn_.traps) {
      if (!remap.count(t.block)) continue;
      t.block = remap.at(t.block);
      t.handler = remap.at(t.handler);
      traps.push_back(t);
    }
    fn_.blocks = std::move(kept);
    fn_.traps = std::move(traps);
    fn_.entry = remap.at(fn_.entry);
  }

  const std::map<std::string, Type>& rets_;
  Function fn_;
  const Node* body_ = nullptr;
  BlockId cur_ = 0;
  bool terminated_ = false;
  std::vector<bool> has_term_;
  Span span_;
  std::vector<std::map<std::string, Reg>> scopes_;
  std::vector<Control> controls_;
  std::vector<TryRegion> tries_;
  std::vector<std::size_t> active_tries_;
};

}  // namespace

Program lower(const Node& unit) {
  Program p;
  std::map<std::string, Type> rets;
  for (const auto& f : unit.children) rets[f.name] = f.type;
  if (!rets.count("main")) throw Error(ErrorCode::InvalidInput, "missing function 'main'");
  for (const auto& f : unit.children) p.functions.push_back(FunctionLowerer(rets, f).run());
  p.entry = "main";
  return p;
}

Program compile(std::string_view source) {
  auto r = parse(source);
  if (!r.ast) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += (msg.empty() ? "" : "\n") + to_string(d);
    throw Error(ErrorCode::InvalidInput, msg);
  }
  return lower(*r.ast);
}

}  // namespace cfo::frontend
