#include <sstream>

#include "cfo/frontend/frontend.hpp"

namespace cfo::frontend {

namespace {

int precedence(const Node& e) {
  if (e.kind != NodeKind::BinaryOp) return 100;
  const std::string& op = e.name;
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "^") return 3;
  if (op == "==" || op == "!=") return 4;
  if (op == "<" || op == "<=" || op == ">" || op == ">=") return 5;
  if (op == "+" || op == "-") return 6;
  return 7;
}

std::string type_text(Type t) {
  switch (t) {
    case Type::Int: return "int";
    case Type::Bool: return "bool";
    case Type::Array: return "int[]";
    case Type::Void: return "void";
  }
  return "?";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

class Printer {
 public:
  std::string unit(const Node& u) {
    for (std::size_t i = 0; i < u.children.size(); ++i) {
      if (i) os_ << '\n';
      function(u.children[i]);
    }
    return os_.str();
  }

 private:
  void indent() {
    for (int i = 0; i < depth_; ++i) os_ << "  ";
  }

  void function(const Node& f) {
    os_ << "fn " << f.name << '(';
    for (std::size_t i = 0; i < f.params.size(); ++i)
      os_ << (i ? ", " : "") << f.params[i].name << ": " << type_text(f.params[i].type);
    os_ << ')';
    if (f.type != Type::Void) os_ << " -> " << type_text(f.type);
    os_ << ' ';
    block(f.children.at(0));
    os_ << '\n';
  }

  void block(const Node& b) {
    os_ << "{\n";
    ++depth_;
    for (const auto& s : b.children) statement(s);
    --depth_;
    indent();
    os_ << '}';
  }

  void simple(const Node& s) {
    switch (s.kind) {
      case NodeKind::VarDecl:
        os_ << type_text(s.type) << ' ' << s.name;
        if (!s.children.empty()) {
          const Node& init = s.children[0];
          os_ << " = ";
          if (init.kind == NodeKind::Literal && init.type == Type::Array && !init.is_null) {
            os_ << '{';
            for (std::size_t i = 0; i < init.values.size(); ++i) os_ << (i ? ", " : "") << init.values[i];
            os_ << '}';
          } else {
            expr(init);
          }
        }
        break;
      case NodeKind::Assign:
        expr(s.children[0]);
        os_ << " = ";
        expr(s.children[1]);
        break;
      default: expr(s);
    }
  }

  void if_chain(const Node& s) {
    os_ << "if (";
    expr(s.children[0]);
    os_ << ") ";
    block(s.children[1]);
    if (s.children.size() > 2) {
      os_ << " else ";
      if (s.children[2].kind == NodeKind::If) if_chain(s.children[2]);
      else block(s.children[2]);
    }
  }

  void statement(const Node& s) {
    indent();
    switch (s.kind) {
      case NodeKind::Block: block(s); break;
      case NodeKind::If: if_chain(s); break;
      case NodeKind::While:
        os_ << "while (";
        expr(s.children[0]);
        os_ << ") ";
        block(s.children[1]);
        break;
      case NodeKind::For:
        os_ << "for (";
        simple(s.children[0]);
        os_ << "; ";
        expr(s.children[1]);
        os_ << "; ";
        simple(s.children[2]);
        os_ << ") ";
        block(s.children[3]);
        break;
      case NodeKind::Switch:
        os_ << "switch (";
        expr(s.children[0]);
        os_ << ") {\n";
        ++depth_;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
          indent();
          os_ << "case " << s.values[i] << ": ";
          block(s.children[i + 1]);
          os_ << '\n';
        }
        if (s.has_default()) {
          indent();
          os_ << "default: ";
          block(s.children.back());
          os_ << '\n';
        }
        --depth_;
        indent();
        os_ << '}';
        break;
      case NodeKind::Break: os_ << "break;"; break;
      case NodeKind::Continue: os_ << "continue;"; break;
      case NodeKind::Return:
        os_ << "return";
        if (!s.children.empty()) {
          os_ << ' ';
          expr(s.children[0]);
        }
        os_ << ';';
        break;
      case NodeKind::Throw:
        os_ << "throw(";
        expr(s.children[0]);
        os_ << ");";
        break;
      case NodeKind::TryCatch: {
        os_ << "try ";
        block(s.children[0]);
        os_ << " catch ";
        if (!s.name.empty()) {
          os_ << '(' << s.name;
          if (!(s.kinds == ir::TrapKindSet::all())) {
            os_ << ": ";
            const char* names[] = {"null", "index", "div", "user"};
            bool first = true;
            for (unsigned k = 0; k < 4; ++k)
              if (s.kinds.contains(static_cast<ir::TrapKind>(k))) {
                os_ << (first ? "" : ", ") << names[k];
                first = false;
              }
          }
          os_ << ") ";
        }
        block(s.children[1]);
        break;
      }
      default:
        simple(s);
        os_ << ';';
    }
    os_ << '\n';
  }

  void operand(const Node& e, int min_prec) {
    bool parens = precedence(e) < min_prec;
    if (parens) os_ << '(';
    expr(e);
    if (parens) os_ << ')';
  }

  void expr(const Node& e) {
    switch (e.kind) {
      case NodeKind::Literal:
        if (e.type == Type::Bool) os_ << (e.value ? "true" : "false");
        else if (e.type == Type::Array) os_ << "null";
        else os_ << e.value;
        break;
      case NodeKind::VarRef: os_ << e.name; break;
      case NodeKind::Index:
        operand(e.children[0], 100);
        os_ << '[';
        expr(e.children[1]);
        os_ << ']';
        break;
      case NodeKind::UnaryOp: {
        os_ << e.name;
        const Node& c = e.children[0];
        // `-5` would re-parse as a literal; `--x` is not a token sequence we lex.
        bool wrap = c.kind == NodeKind::BinaryOp || (c.kind == NodeKind::Literal && c.type == Type::Int) ||
                    c.kind == NodeKind::UnaryOp;
        if (wrap) os_ << '(';
        expr(c);
        if (wrap) os_ << ')';
        break;
      }
      case NodeKind::BinaryOp: {
        int p = precedence(e);
        operand(e.children[0], p);
        os_ << ' ' << e.name << ' ';
        operand(e.children[1], p + 1);
        break;
      }
      case NodeKind::Call:
      case NodeKind::IntrinsicCall:
        if (e.name == "new") {
          os_ << "new int[";
          expr(e.children[0]);
          os_ << ']';
          break;
        }
        os_ << e.name << '(';
        if (e.name == "print_str") os_ << quote(e.text);
        for (std::size_t i = 0; i < e.children.size(); ++i) {
          if (i) os_ << ", ";
          expr(e.children[i]);
        }
        os_ << ')';
        break;
      default: os_ << "/* " << to_string(e.kind) << " */";
    }
  }

  std::ostringstream os_;
  int depth_ = 0;
};

}  // namespace

std::string print_source(const Node& unit) { return Printer{}.unit(unit); }

}  // namespace cfo::frontend
