#include <cctype>
#include <charconv>
#include <sstream>

#include "cfo/frontend/frontend.hpp"

namespace cfo::frontend {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Unit: return "unit";
    case NodeKind::Function: return "function";
    case NodeKind::Block: return "block";
    case NodeKind::VarDecl: return "var-decl";
    case NodeKind::Assign: return "assign";
    case NodeKind::If: return "if";
    case NodeKind::While: return "while";
    case NodeKind::For: return "for";
    case NodeKind::Switch: return "switch";
    case NodeKind::Break: return "break";
    case NodeKind::Continue: return "continue";
    case NodeKind::Return: return "return";
    case NodeKind::Throw: return "throw";
    case NodeKind::TryCatch: return "try-catch";
    case NodeKind::Call: return "call";
    case NodeKind::IntrinsicCall: return "intrinsic-call";
    case NodeKind::BinaryOp: return "binary-op";
    case NodeKind::UnaryOp: return "unary-op";
    case NodeKind::Index: return "index";
    case NodeKind::Literal: return "literal";
    case NodeKind::VarRef: return "var-ref";
  }
  return "?";
}

Node make_node(NodeKind kind, Span span) {
  Node n;
  n.kind = kind;
  n.span = span;
  return n;
}

std::string to_string(const SourceDiagnostic& d) {
  std::ostringstream os;
  os << d.span.line << ':' << d.span.column << ": " << d.message;
  return os.str();
}

namespace {

enum class Tok { Ident, Int, String, Punct, Keyword, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::uint64_t number = 0;  // Int magnitude (may be 2^63 only under unary minus)
  Span span;
};

struct SyntaxError {
  SourceDiagnostic diag;
};

bool is_keyword(std::string_view w) {
  static constexpr std::string_view kws[] = {"fn",     "int",   "bool",  "if",    "else",   "while",
                                             "for",    "switch", "case", "default", "break", "continue",
                                             "return", "throw", "try",   "catch", "true",   "false",
                                             "null",   "new"};
  for (auto k : kws)
    if (k == w) return true;
  return false;
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "string literal";
    default: return "'" + t.text + "'";
  }
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::uint32_t line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto fail = [&](Span sp, std::string msg) { throw SyntaxError{SourceDiagnostic{sp, std::move(msg)}}; };

  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      Span start{line, col};
      advance(2);
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= src.size()) fail(start, "unterminated comment");
      advance(2);
      continue;
    }
    Token t;
    t.span = Span{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.text = std::string(src.substr(i, j - i));
      t.kind = is_keyword(t.text) ? Tok::Keyword : Tok::Ident;
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.text = std::string(src.substr(i, j - i));
      t.kind = Tok::Int;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || t.number > (std::uint64_t{1} << 63)) fail(t.span, "integer literal out of range");
      advance(j - i);
    } else if (c == '"') {
      advance(1);
      t.kind = Tok::String;
      while (true) {
        if (i >= src.size() || src[i] == '\n') fail(t.span, "unterminated string literal");
        char d = src[i];
        if (d == '"') {
          advance(1);
          break;
        }
        if (d == '\\') {
          if (i + 1 >= src.size()) fail(t.span, "unterminated string literal");
          char e = src[i + 1];
          switch (e) {
            case 'n': t.text += '\n'; break;
            case 't': t.text += '\t'; break;
            case '"': t.text += '"'; break;
            case '\\': t.text += '\\'; break;
            default: fail(Span{line, col}, "unknown escape sequence");
          }
          advance(2);
          continue;
        }
        t.text += d;
        advance(1);
      }
    } else {
      static constexpr std::string_view two[] = {"==", "!=", "<=", ">=", "&&", "||", "->"};
      t.kind = Tok::Punct;
      for (auto p : two)
        if (src.substr(i, 2) == p) t.text = std::string(p);
      if (t.text.empty()) {
        static constexpr std::string_view one = "(){}[];,:=+-*/%<>!^";
        if (one.find(c) == std::string_view::npos) fail(t.span, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.span = Span{line, col};
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Node unit() {
    Node u = make_node(NodeKind::Unit, peek().span);
    while (peek().kind != Tok::End) {
      if (!is("fn")) expected({"'fn'"});
      u.children.push_back(function());
    }
    return u;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool is(std::string_view text, std::size_t k = 0) const {
    const Token& t = peek(k);
    return (t.kind == Tok::Punct || t.kind == Tok::Keyword) && t.text == text;
  }
  Token take() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    take();
    return true;
  }
  [[noreturn]] void expected(std::vector<std::string> what) const {
    std::ostringstream os;
    os << "syntax error: expected ";
    if (what.size() > 1) os << "one of {";
    for (std::size_t i = 0; i < what.size(); ++i) os << (i ? ", " : "") << what[i];
    if (what.size() > 1) os << '}';
    os << ", found " << describe(peek());
    throw SyntaxError{SourceDiagnostic{peek().span, os.str()}};
  }
  Token expect(std::string_view text) {
    if (!is(text)) expected({"'" + std::string(text) + "'"});
    return take();
  }
  std::string ident() {
    if (peek().kind != Tok::Ident) expected({"identifier"});
    return take().text;
  }

  bool at_type() const { return is("int") || is("bool"); }

  Type type() {
    if (accept("bool")) return Type::Bool;
    if (accept("int")) {
      if (accept("[")) {
        expect("]");
        return Type::Array;
      }
      return Type::Int;
    }
    expected({"'int'", "'bool'"});
  }

  Node function() {
    Node f = make_node(NodeKind::Function, expect("fn").span);
    f.name = ident();
    expect("(");
    if (!is(")")) {
      do {
        Param p;
        p.name = ident();
        expect(":");
        p.type = type();
        f.params.push_back(p);
      } while (accept(","));
    }
    expect(")");
    f.type = Type::Void;
    if (accept("->")) f.type = type();
    f.children.push_back(block());
    return f;
  }

  Node block() {
    Node b = make_node(NodeKind::Block, expect("{").span);
    while (!is("}")) {
      if (peek().kind == Tok::End) expected({"'}'"});
      statement(b.children);
    }
    take();
    return b;
  }

  /// Appends one or more statements (multi-declarations split here).
  void statement(std::vector<Node>& out) {
    const Token& t = peek();
    Span sp = t.span;
    if (at_type()) {
      declarations(out);
      expect(";");
      return;
    }
    if (is("{")) {
      out.push_back(block());
      return;
    }
    if (accept("if")) {
      out.push_back(if_rest(sp));
      return;
    }
    if (accept("while")) {
      Node w = make_node(NodeKind::While, sp);
      expect("(");
      w.children.push_back(expr());
      expect(")");
      w.children.push_back(block());
      out.push_back(std::move(w));
      return;
    }
    if (accept("for")) {
      Node f = make_node(NodeKind::For, sp);
      expect("(");
      if (at_type()) {
        std::vector<Node> decls;
        declarations(decls);
        if (decls.size() != 1) throw SyntaxError{{sp, "syntax error: for-loop init declares one variable"}};
        f.children.push_back(std::move(decls[0]));
      } else {
        f.children.push_back(assignment());
      }
      expect(";");
      f.children.push_back(expr());
      expect(";");
      f.children.push_back(assignment());
      expect(")");
      f.children.push_back(block());
      out.push_back(std::move(f));
      return;
    }
    if (accept("switch")) {
      Node s = make_node(NodeKind::Switch, sp);
      expect("(");
      s.children.push_back(expr());
      expect(")");
      expect("{");
      bool seen_default = false;
      while (!accept("}")) {
        if (!seen_default && accept("case")) {
          s.values.push_back(int_constant());
          expect(":");
          s.children.push_back(block());
        } else if (!seen_default && accept("default")) {
          expect(":");
          s.children.push_back(block());
          seen_default = true;
        } else {
          if (seen_default) expected({"'}'"});
          expected({"'case'", "'default'", "'}'"});
        }
      }
      out.push_back(std::move(s));
      return;
    }
    if (accept("break")) {
      expect(";");
      out.push_back(make_node(NodeKind::Break, sp));
      return;
    }
    if (accept("continue")) {
      expect(";");
      out.push_back(make_node(NodeKind::Continue, sp));
      return;
    }
    if (accept("return")) {
      Node r = make_node(NodeKind::Return, sp);
      if (!is(";")) r.children.push_back(expr());
      expect(";");
      out.push_back(std::move(r));
      return;
    }
    if (accept("throw")) {
      Node r = make_node(NodeKind::Throw, sp);
      expect("(");
      r.children.push_back(expr());
      expect(")");
      expect(";");
      out.push_back(std::move(r));
      return;
    }
    if (accept("try")) {
      Node tc = make_node(NodeKind::TryCatch, sp);
      tc.children.push_back(block());
      expect("catch");
      if (accept("(")) {
        tc.name = ident();
        if (accept(":")) {
          tc.kinds = ir::TrapKindSet{};
          do {
            // `null` lexes as a keyword, the other kinds as identifiers.
            std::string k = peek().kind == Tok::Ident || is("null") ? take().text : "";
            if (k == "null") tc.kinds.insert(ir::TrapKind::NullAccess);
            else if (k == "index") tc.kinds.insert(ir::TrapKind::IndexOutOfBounds);
            else if (k == "div") tc.kinds.insert(ir::TrapKind::DivByZero);
            else if (k == "user") tc.kinds.insert(ir::TrapKind::User);
            else expected({"'null'", "'index'", "'div'", "'user'"});
          } while (accept(","));
        }
        expect(")");
      }
      tc.children.push_back(block());
      out.push_back(std::move(tc));
      return;
    }
    if (peek().kind == Tok::Ident) {
      if (is("(", 1)) {
        out.push_back(postfix_call());
        expect(";");
        return;
      }
      out.push_back(assignment());
      expect(";");
      return;
    }
    expected({"statement"});
  }

  std::int64_t int_constant() {
    bool neg = accept("-");
    if (peek().kind != Tok::Int) expected({"integer constant"});
    std::uint64_t mag = take().number;
    if (!neg && mag > static_cast<std::uint64_t>(INT64_MAX))
      throw SyntaxError{{peek().span, "integer literal out of range"}};
    return neg ? static_cast<std::int64_t>(0 - mag) : static_cast<std::int64_t>(mag);
  }

  void declarations(std::vector<Node>& out) {
    Span sp = peek().span;
    Type t = type();
    do {
      Node d = make_node(NodeKind::VarDecl, sp);
      d.type = t;
      d.name = ident();
      if (accept("=")) {
        if (is("{")) {
          Node lit = make_node(NodeKind::Literal, take().span);
          lit.type = Type::Array;
          if (!is("}")) {
            do lit.values.push_back(int_constant());
            while (accept(","));
          }
          expect("}");
          d.children.push_back(std::move(lit));
        } else {
          d.children.push_back(expr());
        }
      }
      out.push_back(std::move(d));
      sp = peek().span;
    } while (accept(","));
  }

  Node assignment() {
    Span sp = peek().span;
    Node target = make_node(NodeKind::VarRef, sp);
    target.name = ident();
    if (is("[")) {
      Node idx = make_node(NodeKind::Index, take().span);
      idx.children.push_back(std::move(target));
      idx.children.push_back(expr());
      expect("]");
      target = std::move(idx);
    }
    Node a = make_node(NodeKind::Assign, sp);
    expect("=");
    a.children.push_back(std::move(target));
    a.children.push_back(expr());
    return a;
  }

  Node if_rest(Span sp) {
    Node n = make_node(NodeKind::If, sp);
    expect("(");
    n.children.push_back(expr());
    expect(")");
    n.children.push_back(block());
    if (accept("else")) {
      Span esp = peek().span;
      if (accept("if")) n.children.push_back(if_rest(esp));
      else n.children.push_back(block());
    }
    return n;
  }

  // Precedence climbing: || < && < ^ < equality < relational < additive < multiplicative.
  static int precedence(std::string_view op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "^") return 3;
    if (op == "==" || op == "!=") return 4;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 5;
    if (op == "+" || op == "-") return 6;
    if (op == "*" || op == "/" || op == "%") return 7;
    return 0;
  }

  Node expr(int min_prec = 1) {
    Node lhs = unary();
    while (peek().kind == Tok::Punct) {
      int p = precedence(peek().text);
      if (p == 0 || p < min_prec) break;
      Token op = take();
      Node rhs = expr(p + 1);
      Node b = make_node(NodeKind::BinaryOp, op.span);
      b.name = op.text;
      b.children.push_back(std::move(lhs));
      b.children.push_back(std::move(rhs));
      lhs = std::move(b);
    }
    return lhs;
  }

  Node unary() {
    Span sp = peek().span;
    if (is("-") && peek(1).kind == Tok::Int) {
      take();
      std::uint64_t mag = take().number;
      Node lit = make_node(NodeKind::Literal, sp);
      lit.type = Type::Int;
      lit.value = static_cast<std::int64_t>(0 - mag);
      return postfix(std::move(lit));
    }
    if (is("-") || is("!")) {
      Node u = make_node(NodeKind::UnaryOp, sp);
      u.name = take().text;
      u.children.push_back(unary());
      return u;
    }
    return postfix(primary());
  }

  Node postfix(Node base) {
    while (is("[")) {
      Node idx = make_node(NodeKind::Index, take().span);
      idx.children.push_back(std::move(base));
      idx.children.push_back(expr());
      expect("]");
      base = std::move(idx);
    }
    return base;
  }

  Node postfix_call() {
    Span sp = peek().span;
    std::string name = ident();
    expect("(");
    Node c;
    if (name == "print" || name == "print_str" || name == "len" || name == "min") {
      c = make_node(NodeKind::IntrinsicCall, sp);
    } else {
      c = make_node(NodeKind::Call, sp);
    }
    c.name = name;
    if (name == "print_str") {
      if (peek().kind != Tok::String) expected({"string literal"});
      c.text = take().text;
    } else if (!is(")")) {
      do c.children.push_back(expr());
      while (accept(","));
    }
    expect(")");
    return c;
  }

  Node primary() {
    const Token& t = peek();
    Span sp = t.span;
    if (t.kind == Tok::Int) {
      std::uint64_t mag = take().number;
      if (mag > static_cast<std::uint64_t>(INT64_MAX))
        throw SyntaxError{{sp, "integer literal out of range"}};
      Node lit = make_node(NodeKind::Literal, sp);
      lit.type = Type::Int;
      lit.value = static_cast<std::int64_t>(mag);
      return lit;
    }
    if (is("true") || is("false")) {
      Node lit = make_node(NodeKind::Literal, sp);
      lit.type = Type::Bool;
      lit.value = take().text == "true" ? 1 : 0;
      return lit;
    }
    if (accept("null")) {
      Node lit = make_node(NodeKind::Literal, sp);
      lit.type = Type::Array;
      lit.is_null = true;
      return lit;
    }
    if (accept("new")) {
      expect("int");
      expect("[");
      Node n = make_node(NodeKind::IntrinsicCall, sp);
      n.name = "new";
      n.children.push_back(expr());
      expect("]");
      return n;
    }
    if (accept("(")) {
      Node e = expr();
      expect(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      if (is("(", 1)) return postfix_call();
      Node v = make_node(NodeKind::VarRef, sp);
      v.name = take().text;
      return v;
    }
    expected({"expression"});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ParseResult parse(std::string_view source) {
  ParseResult r;
  try {
    Parser p(lex(source));
    Node u = p.unit();
    r.diagnostics = check(u);
    if (r.diagnostics.empty()) r.ast = std::move(u);
  } catch (const SyntaxError& e) {
    r.diagnostics.push_back(e.diag);
  }
  return r;
}

}  // namespace cfo::frontend
