#include "cfo/ir/text.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace cfo::ir {

namespace {

void emit_reg(std::ostringstream& os, Reg r) { os << '%' << r; }

void emit_quoted(std::ostringstream& os, const std::string& s) {
  os << '"';
  for (char c : s) {
    switch (c) {
      case '"': os << "\\\""; break;
      case '\\': os << "\\\\"; break;
      case '\n': os << "\\n"; break;
      case '\t': os << "\\t"; break;
      default: os << c;
    }
  }
  os << '"';
}

void emit_args(std::ostringstream& os, const std::vector<Reg>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    emit_reg(os, args[i]);
  }
}

}  // namespace

std::string emit_instruction(const Function& fn, const Instruction& in) {
  std::ostringstream os;
  if (in.dst) {
    emit_reg(os, *in.dst);
    os << " = ";
  }
  switch (in.op) {
    case Opcode::Const: {
      Type t = in.dst && *in.dst < fn.regs.size() ? fn.regs[*in.dst] : Type::Int;
      os << "const ";
      if (t == Type::Bool) os << (in.imm ? "true" : "false");
      else if (t == Type::Array) os << "null";
      else os << in.imm;
      break;
    }
    case Opcode::Move: os << "move "; emit_args(os, in.args); break;
    case Opcode::Binary: os << to_string(in.bin) << ' '; emit_args(os, in.args); break;
    case Opcode::Unary: os << to_string(in.un) << ' '; emit_args(os, in.args); break;
    case Opcode::Select: os << "select "; emit_args(os, in.args); break;
    case Opcode::NewArray: os << "newarr "; emit_args(os, in.args); break;
    case Opcode::ArrayLit:
      os << "arrlit [";
      for (std::size_t i = 0; i < in.imms.size(); ++i) os << (i ? ", " : "") << in.imms[i];
      os << ']';
      break;
    case Opcode::Load: os << "load "; emit_args(os, in.args); break;
    case Opcode::Store: os << "store "; emit_args(os, in.args); break;
    case Opcode::Len: os << "len "; emit_args(os, in.args); break;
    case Opcode::Call:
      os << "call " << in.text << '(';
      emit_args(os, in.args);
      os << ')';
      break;
    case Opcode::Intrinsic:
      os << to_string(in.intrinsic);
      if (in.intrinsic == IntrinsicFn::PrintStr) {
        os << ' ';
        emit_quoted(os, in.text);
      } else {
        os << ' ';
        emit_args(os, in.args);
      }
      break;
    case Opcode::Catch: os << "catch"; break;
    case Opcode::Jump: os << "jump " << in.targets.at(0); break;
    case Opcode::Branch:
      os << "br ";
      emit_args(os, in.args);
      os << ", " << in.targets.at(0) << ", " << in.targets.at(1);
      break;
    case Opcode::Switch:
      os << "switch ";
      emit_args(os, in.args);
      os << " [";
      for (std::size_t i = 0; i < in.imms.size(); ++i)
        os << (i ? ", " : "") << in.imms[i] << " -> " << in.targets.at(i);
      os << "] default " << in.targets.back();
      break;
    case Opcode::Return:
      os << "ret";
      if (!in.args.empty()) {
        os << ' ';
        emit_args(os, in.args);
      }
      break;
    case Opcode::Throw: os << "throw "; emit_args(os, in.args); break;
  }
  if (in.tag != Tag::Original) os << " !" << to_string(in.tag);
  return os.str();
}

std::string emit_text(const Program& program) {
  std::ostringstream os;
  os << "program entry " << program.entry << "\n";
  for (const auto& f : program.functions) {
    os << "\nfunction " << f.name << '(';
    emit_args(os, f.params);
    os << ") -> " << to_string(f.ret) << "\n";
    os << "  regs";
    for (std::size_t r = 0; r < f.regs.size(); ++r) os << " %" << r << ':' << to_string(f.regs[r]);
    os << "\n  entry " << f.entry << "\n";
    for (const auto& b : f.blocks) {
      os << "block " << b.id << ":\n";
      for (const auto& in : b.instrs) os << "  " << emit_instruction(f, in) << "\n";
      os << "  " << emit_instruction(f, b.term) << "\n";
    }
    for (const auto& t : f.traps) {
      os << "trap " << t.block << ' ' << t.start << ' ' << t.end << " -> " << t.handler << " [";
      bool first = true;
      for (unsigned k = 0; k < 4; ++k) {
        auto kind = static_cast<TrapKind>(k);
        if (!t.kinds.contains(kind)) continue;
        os << (first ? "" : ",") << to_string(kind);
        first = false;
      }
      os << "]\n";
    }
    os << "end\n";
  }
  return os.str();
}

namespace {

struct ParseFailure {
  std::string message;
};

/// Cursor over a single line.
class LineScanner {
 public:
  explicit LineScanner(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  bool accept(std::string_view word) {
    skip_ws();
    if (s_.substr(pos_, word.size()) != word) return false;
    std::size_t after = pos_ + word.size();
    if (after < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[after])) || s_[after] == '_'))
      return false;
    pos_ = after;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '[' ||
            s_[pos_] == ']'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return std::string(s_.substr(start, pos_ - start));
  }
  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected identifier");
    return std::string(s_.substr(start, pos_ - start));
  }
  std::int64_t integer() {
    skip_ws();
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("expected integer");
    pos_ = static_cast<std::size_t>(p - s_.data());
    return v;
  }
  std::uint32_t unsigned_int() {
    std::int64_t v = integer();
    if (v < 0 || v > 0xFFFFFFFFLL) fail("expected non-negative integer");
    return static_cast<std::uint32_t>(v);
  }
  Reg reg() {
    if (!accept('%')) fail("expected register");
    return unsigned_int();
  }
  std::string quoted() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '"') fail("expected string literal");
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("bad escape");
        char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail("bad escape");
        }
      } else {
        out += c;
      }
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }
  std::string_view rest() {
    skip_ws();
    return s_.substr(pos_);
  }
  [[noreturn]] static void fail(std::string msg) { throw ParseFailure{std::move(msg)}; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

Type parse_type(const std::string& w) {
  if (w == "int") return Type::Int;
  if (w == "bool") return Type::Bool;
  if (w == "int[]") return Type::Array;
  if (w == "void") return Type::Void;
  LineScanner::fail("unknown type '" + w + "'");
}

const std::map<std::string, BinOp, std::less<>>& binops() {
  static const std::map<std::string, BinOp, std::less<>> m = {
      {"add", BinOp::Add}, {"sub", BinOp::Sub}, {"mul", BinOp::Mul}, {"div", BinOp::Div},
      {"rem", BinOp::Rem}, {"xor", BinOp::Xor}, {"and", BinOp::And}, {"or", BinOp::Or},
      {"eq", BinOp::Eq},   {"ne", BinOp::Ne},   {"lt", BinOp::Lt},   {"le", BinOp::Le},
      {"gt", BinOp::Gt},   {"ge", BinOp::Ge}};
  return m;
}

Tag parse_tag(const std::string& w) {
  for (auto t : {Tag::Original, Tag::Opaque, Tag::Dead, Tag::Irrelevant, Tag::Dispatcher, Tag::Buffer})
    if (w == to_string(t)) return t;
  LineScanner::fail("unknown tag '" + w + "'");
}

std::vector<Reg> reg_list(LineScanner& sc) {
  std::vector<Reg> out;
  if (!sc.peek('%')) return out;
  out.push_back(sc.reg());
  while (sc.accept(',')) out.push_back(sc.reg());
  return out;
}

/// Splits a trailing " !tag" suffix (outside string literals).
std::string_view strip_tag(std::string_view line, Tag& tag) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '!') {
      LineScanner sc(line.substr(i + 1));
      tag = parse_tag(sc.ident());
      if (!sc.at_end()) LineScanner::fail("trailing text after tag");
      return line.substr(0, i);
    }
  }
  tag = Tag::Original;
  return line;
}

Instruction parse_instruction(std::string_view raw, const Function& fn) {
  Instruction in;
  std::string_view line = strip_tag(raw, in.tag);
  LineScanner sc(line);
  if (sc.peek('%')) {
    in.dst = sc.reg();
    sc.expect('=');
  }
  std::string op = sc.ident();
  if (op == "const") {
    in.op = Opcode::Const;
    if (sc.accept("true")) in.imm = 1;
    else if (sc.accept("false")) in.imm = 0;
    else if (sc.accept("null")) in.imm = -1;
    else in.imm = sc.integer();
  } else if (op == "move") {
    in.op = Opcode::Move;
    in.args = reg_list(sc);
  } else if (auto it = binops().find(op); it != binops().end()) {
    in.op = Opcode::Binary;
    in.bin = it->second;
    in.args = reg_list(sc);
  } else if (op == "neg" || op == "not") {
    in.op = Opcode::Unary;
    in.un = op == "neg" ? UnOp::Neg : UnOp::Not;
    in.args = reg_list(sc);
  } else if (op == "select") {
    in.op = Opcode::Select;
    in.args = reg_list(sc);
  } else if (op == "newarr") {
    in.op = Opcode::NewArray;
    in.args = reg_list(sc);
  } else if (op == "arrlit") {
    in.op = Opcode::ArrayLit;
    sc.expect('[');
    if (!sc.peek(']')) {
      in.imms.push_back(sc.integer());
      while (sc.accept(',')) in.imms.push_back(sc.integer());
    }
    sc.expect(']');
  } else if (op == "load") {
    in.op = Opcode::Load;
    in.args = reg_list(sc);
  } else if (op == "store") {
    in.op = Opcode::Store;
    in.args = reg_list(sc);
  } else if (op == "len") {
    in.op = Opcode::Len;
    in.args = reg_list(sc);
  } else if (op == "call") {
    in.op = Opcode::Call;
    in.text = sc.ident();
    sc.expect('(');
    in.args = reg_list(sc);
    sc.expect(')');
  } else if (op == "print") {
    in.op = Opcode::Intrinsic;
    in.intrinsic = IntrinsicFn::Print;
    in.args = reg_list(sc);
  } else if (op == "print_str") {
    in.op = Opcode::Intrinsic;
    in.intrinsic = IntrinsicFn::PrintStr;
    in.text = sc.quoted();
  } else if (op == "min") {
    in.op = Opcode::Intrinsic;
    in.intrinsic = IntrinsicFn::Min;
    in.args = reg_list(sc);
  } else if (op == "catch") {
    in.op = Opcode::Catch;
  } else if (op == "jump") {
    in.op = Opcode::Jump;
    in.targets = {sc.unsigned_int()};
  } else if (op == "br") {
    in.op = Opcode::Branch;
    in.args = {sc.reg()};
    sc.expect(',');
    BlockId t = sc.unsigned_int();
    sc.expect(',');
    BlockId f = sc.unsigned_int();
    in.targets = {t, f};
  } else if (op == "switch") {
    in.op = Opcode::Switch;
    in.args = {sc.reg()};
    sc.expect('[');
    if (!sc.peek(']')) {
      do {
        in.imms.push_back(sc.integer());
        sc.expect('-');
        sc.expect('>');
        in.targets.push_back(sc.unsigned_int());
      } while (sc.accept(','));
    }
    sc.expect(']');
    if (!sc.accept("default")) LineScanner::fail("expected 'default'");
    in.targets.push_back(sc.unsigned_int());
  } else if (op == "ret") {
    in.op = Opcode::Return;
    if (sc.peek('%')) in.args = {sc.reg()};
  } else if (op == "throw") {
    in.op = Opcode::Throw;
    in.args = {sc.reg()};
  } else {
    LineScanner::fail("unknown opcode '" + op + "'");
  }
  if (!sc.at_end()) LineScanner::fail("trailing text '" + std::string(sc.rest()) + "'");
  if (in.op == Opcode::Const && in.dst && *in.dst < fn.regs.size() && fn.regs[*in.dst] == Type::Array &&
      in.imm != -1)
    LineScanner::fail("array constant must be null");
  return in;
}

}  // namespace

TextParseResult parse_text(std::string_view text) {
  TextParseResult result;
  Program prog;
  Function* fn = nullptr;
  BasicBlock* block = nullptr;
  bool block_open = false;  // block seen its terminator?
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto close_block = [&]() {
    if (block && !block_open) LineScanner::fail("block " + std::to_string(block->id) + " has no terminator");
    block = nullptr;
  };

  try {
    bool seen_header = false;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      LineScanner sc(line);
      if (sc.at_end() || sc.peek('#')) {
        if (nl == text.size()) break;
        continue;
      }
      if (!seen_header) {
        if (!sc.accept("program") || !sc.accept("entry")) LineScanner::fail("expected 'program entry <name>'");
        prog.entry = sc.ident();
        seen_header = true;
      } else if (sc.accept("function")) {
        if (fn) LineScanner::fail("missing 'end'");
        prog.functions.emplace_back();
        fn = &prog.functions.back();
        fn->name = sc.ident();
        sc.expect('(');
        fn->params = reg_list(sc);
        sc.expect(')');
        sc.expect('-');
        sc.expect('>');
        fn->ret = parse_type(sc.word());
      } else if (!fn) {
        LineScanner::fail("expected 'function'");
      } else if (sc.accept("regs")) {
        while (!sc.at_end()) {
          Reg r = sc.reg();
          if (r != fn->regs.size()) LineScanner::fail("registers must be listed in order");
          sc.expect(':');
          fn->regs.push_back(parse_type(sc.word()));
        }
      } else if (sc.accept("entry")) {
        fn->entry = sc.unsigned_int();
      } else if (sc.accept("block")) {
        close_block();
        BasicBlock b;
        b.id = sc.unsigned_int();
        sc.expect(':');
        fn->blocks.push_back(std::move(b));
        block = &fn->blocks.back();
        block_open = false;
      } else if (sc.accept("trap")) {
        close_block();
        TrapEntry t;
        t.block = sc.unsigned_int();
        t.start = sc.unsigned_int();
        t.end = sc.unsigned_int();
        sc.expect('-');
        sc.expect('>');
        t.handler = sc.unsigned_int();
        sc.expect('[');
        t.kinds = TrapKindSet{};
        if (!sc.peek(']')) {
          do {
            std::string k = sc.ident();
            bool found = false;
            for (unsigned i = 0; i < 4; ++i)
              if (k == to_string(static_cast<TrapKind>(i))) {
                t.kinds.insert(static_cast<TrapKind>(i));
                found = true;
              }
            if (!found) LineScanner::fail("unknown trap kind '" + k + "'");
          } while (sc.accept(','));
        }
        sc.expect(']');
        fn->traps.push_back(t);
      } else if (sc.accept("end")) {
        close_block();
        fn = nullptr;
      } else {
        if (!block) LineScanner::fail("instruction outside block");
        if (block_open) LineScanner::fail("code after terminator");
        Instruction in = parse_instruction(line, *fn);
        if (in.is_terminator()) {
          block->term = std::move(in);
          block_open = true;
        } else {
          block->instrs.push_back(std::move(in));
        }
      }
      if (nl == text.size()) break;
    }
    if (fn) LineScanner::fail("missing 'end'");
    if (!seen_header) LineScanner::fail("empty input");
  } catch (const ParseFailure& e) {
    result.diagnostics.push_back(TextDiagnostic{line_no, e.message});
    return result;
  }
  result.program = std::move(prog);
  return result;
}

}  // namespace cfo::ir
