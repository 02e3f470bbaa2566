#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cfo/ir/ir.hpp"

namespace cfo::frontend {

enum class NodeKind : std::uint8_t {
  Unit,
  Function,
  Block,
  VarDecl,
  Assign,
  If,
  While,
  For,
  Switch,
  Break,
  Continue,
  Return,
  Throw,
  TryCatch,
  Call,
  IntrinsicCall,
  BinaryOp,
  UnaryOp,
  Index,
  Literal,
  VarRef,
};

const char* to_string(NodeKind k);

using ir::Span;
using ir::Type;

struct Param {
  std::string name;
  Type type = Type::Int;
  friend bool operator==(const Param&, const Param&) = default;
};

/// Uniform AST node. Child layout by kind:
///   Unit: functions            Function: [body Block]; params, type = return type
///   Block: statements          VarDecl: [init]?; name, type
///   Assign: [target, value]    If: [cond, then, else?] (else is a Block or an If)
///   While: [cond, body]        For: [init, cond, update, body]
///   Switch: [scrutinee, case blocks..., default?]; values = case labels
///   Return: [value]?           Throw: [code]
///   TryCatch: [body, handler]; name = binding (may be empty), kinds
///   Call / IntrinsicCall: args; name = callee (intrinsics: print, print_str, len, min, new)
///   BinaryOp / UnaryOp: operands; name = operator symbol
///   Index: [array, index]      Literal: value (Int/Bool), or Array: null or values
///   VarRef: name
/// `type` on expression nodes is filled in by the checker.
struct Node {
  NodeKind kind = NodeKind::Block;
  std::vector<Node> children;
  std::string name;
  std::string text;  // print_str literal
  std::int64_t value = 0;
  std::vector<std::int64_t> values;
  bool is_null = false;  // array literal `null`
  Type type = Type::Void;
  std::vector<Param> params;
  ir::TrapKindSet kinds = ir::TrapKindSet::all();
  Span span;

  bool has_default() const { return kind == NodeKind::Switch && children.size() == values.size() + 2; }

  /// Structural equality; spans are ignored.
  friend bool operator==(const Node& a, const Node& b) {
    return a.kind == b.kind && a.children == b.children && a.name == b.name && a.text == b.text &&
           a.value == b.value && a.values == b.values && a.is_null == b.is_null && a.type == b.type &&
           a.params == b.params && a.kinds == b.kinds;
  }
};

Node make_node(NodeKind kind, Span span = {});

struct SourceDiagnostic {
  Span span;
  std::string message;
};

std::string to_string(const SourceDiagnostic& d);

/// A parsed and checked compilation unit.
struct SourceUnit {
  std::string path;
  std::string text;
  Node ast;  // kind Unit
};

}  // namespace cfo::frontend
