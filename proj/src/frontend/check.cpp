#include <map>
#include <set>

#include "cfo/frontend/frontend.hpp"

namespace cfo::frontend {

namespace {

struct Signature {
  std::vector<Type> params;
  Type ret;
};

const char* type_name(Type t) { return ir::to_string(t); }

class Checker {
 public:
  std::vector<SourceDiagnostic> run(Node& unit) {
    for (auto& f : unit.children) {
      if (sigs_.count(f.name)) {
        error(f.span, "duplicate declaration of function '" + f.name + "'");
        continue;
      }
      if (f.name == "print" || f.name == "print_str" || f.name == "len" || f.name == "min") {
        error(f.span, "function name '" + f.name + "' is reserved");
        continue;
      }
      Signature s;
      for (const auto& p : f.params) s.params.push_back(p.type);
      s.ret = f.type;
      sigs_[f.name] = s;
    }
    auto main = sigs_.find("main");
    // A unit without main is a library; only running it needs an entry.
    if (main != sigs_.end() && (main->second.params != std::vector<Type>{Type::Array} || main->second.ret != Type::Int)) {
      error(unit.span, "function 'main' must have signature (int[]) -> int");
    }
    for (auto& f : unit.children) function(f);
    return std::move(diags_);
  }

 private:
  void error(Span sp, std::string msg) { diags_.push_back(SourceDiagnostic{sp, std::move(msg)}); }

  bool visible(const std::string& name) const {
    for (const auto& s : scopes_)
      if (s.count(name)) return true;
    return false;
  }
  const Type* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }
  void declare(Span sp, const std::string& name, Type t) {
    if (visible(name)) {
      error(sp, "duplicate declaration of '" + name + "'");
      return;
    }
    scopes_.back()[name] = t;
  }

  void function(Node& f) {
    ret_ = f.type;
    scopes_.clear();
    scopes_.emplace_back();
    loops_ = 0;
    breakables_ = 0;
    for (const auto& p : f.params) {
      if (p.type == Type::Void) error(f.span, "parameter cannot be void");
      declare(f.span, p.name, p.type);
    }
    block(f.children.at(0), false);
  }

  void block(Node& b, bool new_scope = true) {
    if (new_scope) scopes_.emplace_back();
    for (auto& s : b.children) statement(s);
    if (new_scope) scopes_.pop_back();
  }

  void expect_type(const Node& e, Type want, const char* what) {
    if (e.type != want && e.type != Type::Void)
      error(e.span, std::string(what) + ": expected " + type_name(want) + ", found " + type_name(e.type));
  }

  void statement(Node& s) {
    switch (s.kind) {
      case NodeKind::Block: block(s); break;
      case NodeKind::VarDecl:
        if (!s.children.empty()) {
          Node& init = s.children[0];
          if (init.kind == NodeKind::Literal && init.type == Type::Array && !init.is_null && s.type != Type::Array)
            error(init.span, "array literal initializer requires an int[] variable");
          value(init);
          expect_type(init, s.type, "initializer");
        }
        declare(s.span, s.name, s.type);
        break;
      case NodeKind::Assign: {
        Node& target = s.children[0];
        value(target);
        value(s.children[1]);
        expect_type(s.children[1], target.type, "assignment");
        break;
      }
      case NodeKind::If:
        value(s.children[0]);
        expect_type(s.children[0], Type::Bool, "condition");
        block(s.children[1]);
        if (s.children.size() > 2) statement(s.children[2]);
        break;
      case NodeKind::While:
        value(s.children[0]);
        expect_type(s.children[0], Type::Bool, "condition");
        ++loops_;
        ++breakables_;
        block(s.children[1]);
        --loops_;
        --breakables_;
        break;
      case NodeKind::For:
        scopes_.emplace_back();
        statement(s.children[0]);
        value(s.children[1]);
        expect_type(s.children[1], Type::Bool, "condition");
        statement(s.children[2]);
        ++loops_;
        ++breakables_;
        block(s.children[3]);
        --loops_;
        --breakables_;
        scopes_.pop_back();
        break;
      case NodeKind::Switch: {
        value(s.children[0]);
        expect_type(s.children[0], Type::Int, "switch scrutinee");
        std::set<std::int64_t> seen;
        for (auto v : s.values)
          if (!seen.insert(v).second) error(s.span, "duplicate case label " + std::to_string(v));
        ++breakables_;
        for (std::size_t i = 1; i < s.children.size(); ++i) block(s.children[i]);
        --breakables_;
        break;
      }
      case NodeKind::Break:
        if (breakables_ == 0) error(s.span, "'break' outside loop or switch");
        break;
      case NodeKind::Continue:
        if (loops_ == 0) error(s.span, "'continue' outside loop");
        break;
      case NodeKind::Return:
        if (s.children.empty()) {
          if (ret_ != Type::Void) error(s.span, "missing return value");
        } else {
          value(s.children[0]);
          if (ret_ == Type::Void) error(s.span, "void function returns a value");
          else expect_type(s.children[0], ret_, "return value");
        }
        break;
      case NodeKind::Throw:
        value(s.children[0]);
        expect_type(s.children[0], Type::Int, "throw code");
        break;
      case NodeKind::TryCatch:
        block(s.children[0]);
        scopes_.emplace_back();
        if (!s.name.empty()) declare(s.span, s.name, Type::Int);
        block(s.children[1]);
        scopes_.pop_back();
        if (s.kinds.empty()) error(s.span, "catch clause matches no trap kind");
        break;
      case NodeKind::Call:
      case NodeKind::IntrinsicCall: expr(s); break;
      default: error(s.span, std::string("unexpected ") + to_string(s.kind) + " in statement position");
    }
  }

  /// An expression used for its value; void calls are rejected.
  void value(Node& e) {
    expr(e);
    bool is_void_call = (e.kind == NodeKind::IntrinsicCall && (e.name == "print" || e.name == "print_str")) ||
                        (e.kind == NodeKind::Call && sigs_.count(e.name) && sigs_.at(e.name).ret == Type::Void);
    if (is_void_call) error(e.span, "void call '" + e.name + "' used as a value");
  }

  void expr(Node& e) {
    for (auto& c : e.children) value(c);
    switch (e.kind) {
      case NodeKind::Literal: break;
      case NodeKind::VarRef: {
        const Type* t = lookup(e.name);
        if (!t) {
          error(e.span, "unknown identifier '" + e.name + "'");
          e.type = Type::Void;
        } else {
          e.type = *t;
        }
        break;
      }
      case NodeKind::Index:
        expect_type(e.children[0], Type::Array, "indexed value");
        expect_type(e.children[1], Type::Int, "index");
        e.type = Type::Int;
        break;
      case NodeKind::UnaryOp:
        if (e.name == "-") {
          expect_type(e.children[0], Type::Int, "operand of '-'");
          e.type = Type::Int;
        } else {
          expect_type(e.children[0], Type::Bool, "operand of '!'");
          e.type = Type::Bool;
        }
        break;
      case NodeKind::BinaryOp: {
        const Node& l = e.children[0];
        const Node& r = e.children[1];
        const std::string& op = e.name;
        if (op == "&&" || op == "||") {
          expect_type(l, Type::Bool, "logical operand");
          expect_type(r, Type::Bool, "logical operand");
          e.type = Type::Bool;
        } else if (op == "^") {
          if (l.type != Type::Int && l.type != Type::Bool && l.type != Type::Void)
            error(l.span, "operand of '^' must be int or bool");
          expect_type(r, l.type, "operand of '^'");
          e.type = l.type == Type::Void ? Type::Int : l.type;
        } else if (op == "==" || op == "!=") {
          expect_type(r, l.type, "comparison operand");
          e.type = Type::Bool;
        } else if (op == "<" || op == "<=" || op == ">" || op == ">=") {
          expect_type(l, Type::Int, "comparison operand");
          expect_type(r, Type::Int, "comparison operand");
          e.type = Type::Bool;
        } else {
          expect_type(l, Type::Int, "arithmetic operand");
          expect_type(r, Type::Int, "arithmetic operand");
          e.type = Type::Int;
        }
        break;
      }
      case NodeKind::IntrinsicCall:
        if (e.name == "new") {
          expect_type(e.children.at(0), Type::Int, "array size");
          e.type = Type::Array;
        } else if (e.name == "len") {
          if (e.children.size() != 1) error(e.span, "len expects 1 argument");
          else expect_type(e.children[0], Type::Array, "argument of len");
          e.type = Type::Int;
        } else if (e.name == "min") {
          if (e.children.size() != 2) error(e.span, "min expects 2 arguments");
          for (auto& c : e.children) expect_type(c, Type::Int, "argument of min");
          e.type = Type::Int;
        } else if (e.name == "print") {
          if (e.children.size() != 1) error(e.span, "print expects 1 argument");
          else if (e.children[0].type == Type::Array) error(e.span, "print expects int or bool");
          e.type = Type::Void;
        } else {
          e.type = Type::Void;  // print_str
        }
        break;
      case NodeKind::Call: {
        auto it = sigs_.find(e.name);
        if (it == sigs_.end()) {
          error(e.span, "unknown identifier '" + e.name + "'");
          e.type = Type::Void;
          break;
        }
        const auto& sig = it->second;
        if (sig.params.size() != e.children.size()) {
          error(e.span, "call to '" + e.name + "' expects " + std::to_string(sig.params.size()) + " arguments");
        } else {
          for (std::size_t i = 0; i < sig.params.size(); ++i) expect_type(e.children[i], sig.params[i], "argument");
        }
        e.type = sig.ret;
        break;
      }
      default: error(e.span, std::string("unexpected ") + to_string(e.kind) + " in expression");
    }
  }

  std::map<std::string, Signature> sigs_;
  std::vector<std::map<std::string, Type>> scopes_;
  Type ret_ = Type::Void;
  int loops_ = 0;
  int breakables_ = 0;
  std::vector<SourceDiagnostic> diags_;
};

}  // namespace

std::vector<SourceDiagnostic> check(Node& unit) { return Checker{}.run(unit); }

}  // namespace cfo::frontend
