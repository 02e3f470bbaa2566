#include <algorithm>
#include <sstream>

#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/interp/interpreter.hpp"
#include "cfo/util/rng.hpp"

namespace cfo::harness {

namespace {

struct Var {
  std::string name;
  ir::Type type = ir::Type::Int;
  std::int64_t size = 0;  // arrays: fixed length
  bool readonly = false;  // loop counters
};

class Generator {
 public:
  Generator(const GenConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
    max_loop_ = std::clamp(cfg.max_loop_depth, 0, 3);
  }

  std::string run() {
    int helpers = 0;
    if (has(Feature::MultiFunction)) helpers = static_cast<int>(rng_.range(1, std::max(1, cfg_.max_functions - 1)));
    for (int h = 0; h < helpers; ++h) helper(h);
    main_function(helpers);
    return out_.str();
  }

 private:
  bool has(Feature f) const { return cfg_.features.count(f) != 0; }

  std::string fresh(const char* stem) { return stem + std::to_string(next_name_++); }

  void line(const std::string& s) { out_ << std::string(static_cast<std::size_t>(indent_) * 2, ' ') << s << '\n'; }
  void open(const std::string& s) {
    line(s);
    ++indent_;
  }
  void close(const std::string& s = "}") {
    --indent_;
    line(s);
  }

  void declare(Var v) { scopes_.back().push_back(std::move(v)); }
  void push() { scopes_.emplace_back(); }
  void pop() { scopes_.pop_back(); }

  std::vector<const Var*> visible(ir::Type t, bool writable = false) const {
    std::vector<const Var*> out;
    for (const auto& s : scopes_)
      for (const auto& v : s)
        if (v.type == t && !(writable && v.readonly)) out.push_back(&v);
    return out;
  }

  std::int64_t small() { return rng_.range(-9, 20); }

  std::string int_atom() {
    auto vars = visible(ir::Type::Int);
    if (!vars.empty() && rng_.chance(2, 3)) return rng_.pick(vars)->name;
    std::int64_t c = small();
    return c < 0 ? "(" + std::to_string(c) + ")" : std::to_string(c);
  }

  std::string index_into(const Var& a, int depth) {
    std::string k = std::to_string(a.size);
    return "((" + int_expr(depth + 1) + ") % " + k + " + " + k + ") % " + k;
  }

  std::string int_expr(int depth = 0) {
    if (depth >= 2) return int_atom();
    auto arrays = visible(ir::Type::Array);
    switch (rng_.below(10)) {
      case 0:
      case 1: return int_atom();
      case 2: return "(" + int_expr(depth + 1) + " + " + int_expr(depth + 1) + ")";
      case 3: return "(" + int_expr(depth + 1) + " - " + int_expr(depth + 1) + ")";
      case 4: return "(" + int_expr(depth + 1) + " * " + int_atom() + ")";
      case 5: {
        // Divisor in [2, 14]: never zero.
        const char* op = rng_.coin() ? " / " : " % ";
        return "(" + int_expr(depth + 1) + op + "(" + int_atom() + " % 7 + 8))";
      }
      case 6: return "min(" + int_expr(depth + 1) + ", " + int_expr(depth + 1) + ")";
      case 7:
        if (!arrays.empty()) {
          const Var& a = *rng_.pick(arrays);
          if (rng_.coin()) return "len(" + a.name + ")";
          return a.name + "[" + index_into(a, depth) + "]";
        }
        return int_atom();
      case 8:
        if (callable_ > 0) {
          int h = static_cast<int>(rng_.below(static_cast<std::uint64_t>(callable_)));
          return "h" + std::to_string(h) + "(" + int_expr(depth + 1) + ", " + int_expr(depth + 1) + ")";
        }
        return "-" + int_atom();
      default: return int_atom();
    }
  }

  std::string cmp() {
    static const char* const ops[] = {" < ", " <= ", " > ", " >= ", " == ", " != "};
    return int_expr(1) + ops[rng_.below(6)] + int_expr(1);
  }

  std::string bool_expr(int depth = 0) {
    auto bools = visible(ir::Type::Bool);
    if (depth >= 2) return bools.empty() || rng_.coin() ? cmp() : rng_.pick(bools)->name;
    switch (rng_.below(6)) {
      case 0: return "(" + bool_expr(depth + 1) + " && " + bool_expr(depth + 1) + ")";
      case 1: return "(" + bool_expr(depth + 1) + " || " + bool_expr(depth + 1) + ")";
      case 2: return "!(" + bool_expr(depth + 1) + ")";
      case 3:
        if (!bools.empty()) return rng_.pick(bools)->name;
        return cmp();
      default: return cmp();
    }
  }

  // Statements ---------------------------------------------------------

  void simple() {
    auto ints = visible(ir::Type::Int, true);
    auto arrays = visible(ir::Type::Array);
    switch (rng_.below(9)) {
      case 0:
      case 1:
        if (!ints.empty()) {
          line(rng_.pick(ints)->name + " = " + int_expr() + ";");
          return;
        }
        [[fallthrough]];
      case 2: {
        std::string n = fresh("x");
        line("int " + n + " = " + int_expr() + ";");
        declare({n, ir::Type::Int});
        return;
      }
      case 3: {
        std::string n = fresh("b");
        line("bool " + n + " = " + bool_expr() + ";");
        declare({n, ir::Type::Bool});
        return;
      }
      case 4: {
        auto bools = visible(ir::Type::Bool);
        if (!bools.empty()) {
          line(rng_.pick(bools)->name + " = " + bool_expr() + ";");
          return;
        }
        line("print(" + int_expr() + ");");
        return;
      }
      case 5:
        if (has(Feature::Arrays) && !arrays.empty()) {
          const Var& a = *rng_.pick(arrays);
          line(a.name + "[" + index_into(a, 0) + "] = " + int_expr() + ";");
          return;
        }
        [[fallthrough]];
      case 6: line("print(" + int_expr() + ");"); return;
      case 7: {
        auto bools = visible(ir::Type::Bool);
        if (!bools.empty() && rng_.coin()) {
          line("print(" + rng_.pick(bools)->name + ");");
          return;
        }
        line("print(" + int_expr() + ");");
        return;
      }
      default: line("print_str(\"s" + std::to_string(rng_.below(4)) + "\");"); return;
    }
  }

  void array_decl() {
    std::string n = fresh("a");
    std::int64_t size = rng_.range(1, 6);
    if (rng_.coin()) {
      line("int[] " + n + " = new int[" + std::to_string(size) + "];");
    } else {
      std::string vals;
      for (std::int64_t i = 0; i < size; ++i) vals += (i ? ", " : "") + std::to_string(small());
      line("int[] " + n + " = {" + vals + "};");
    }
    declare({n, ir::Type::Array, size});
  }

  void body(int budget) {
    push();
    int n = std::max(1, budget);
    for (int i = 0; i < n && budget_ > 0; ++i) statement();
    // Once the budget is spent, bodies still get one plain statement.
    if (budget_ <= 0 && n > 0 && rng_.chance(3, 4)) simple();
    pop();
  }

  int sub_budget() { return static_cast<int>(rng_.range(1, 3)); }

  void if_stmt(bool with_else, bool force_nested = false) {
    ++if_depth_;
    ++nest_;
    open("if (" + bool_expr() + ") {");
    if (force_nested) {
      if_stmt(rng_.coin() && has(Feature::IfElse));
    } else {
      body(sub_budget());
    }
    if (with_else) {
      --indent_;
      open_cont("} else {");
      body(sub_budget());
    }
    close();
    --nest_;
    --if_depth_;
  }

  void open_cont(const std::string& s) {
    line(s);
    ++indent_;
  }

  void while_stmt() {
    std::string c = fresh("c");
    line("int " + c + " = 0;");
    declare({c, ir::Type::Int, 0, true});
    ++loop_depth_;
    ++nest_;
    open("while (" + c + " < " + std::to_string(rng_.range(1, 5)) + ") {");
    line(c + " = " + c + " + 1;");
    body(sub_budget());
    close();
    --nest_;
    --loop_depth_;
  }

  void for_stmt() {
    std::string i = fresh("i");
    ++loop_depth_;
    ++nest_;
    open("for (int " + i + " = 0; " + i + " < " + std::to_string(rng_.range(1, 5)) + "; " + i + " = " + i + " + 1) {");
    push();
    declare({i, ir::Type::Int, 0, true});
    body(sub_budget());
    pop();
    close();
    --nest_;
    --loop_depth_;
  }

  void switch_stmt() {
    ++nest_;
    ++switch_depth_;
    open("switch (" + int_expr(1) + " % 4) {");
    std::vector<std::int64_t> labels{-3, -2, -1, 0, 1, 2, 3};
    rng_.shuffle(labels);
    labels.resize(static_cast<std::size_t>(rng_.range(1, 3)));
    std::sort(labels.begin(), labels.end());
    for (auto l : labels) {
      open("case " + std::to_string(l) + ": {");
      body(sub_budget());
      if (rng_.chance(1, 3)) line("break;");
      close();
    }
    if (rng_.coin()) {
      open("default: {");
      body(sub_budget());
      close();
    }
    close();
    --switch_depth_;
    --nest_;
  }

  void risky() {
    auto arrays = visible(ir::Type::Array);
    switch (rng_.below(4)) {
      case 0: line("print(" + int_expr(1) + " / " + int_atom() + ");"); return;
      case 1:
        if (!arrays.empty()) {
          const Var& a = *rng_.pick(arrays);
          line("print(" + a.name + "[" + int_atom() + "]);");
          return;
        }
        line("print(" + int_expr(1) + " % " + int_atom() + ");");
        return;
      case 2:
        // The guarded throw is an if statement, so it obeys the mask and the depth cap.
        if ((has(Feature::If) || has(Feature::IfElse)) && nest_ < 3) {
          line("if (" + bool_expr(1) + ") { throw(" + std::to_string(rng_.range(10, 99)) + "); }");
          return;
        }
        line("print(" + int_expr(1) + " / " + int_atom() + ");");
        return;
      default: line("print(" + int_expr(1) + " % " + int_atom() + ");"); return;
    }
  }

  void try_stmt() {
    ++nest_;
    open("try {");
    push();
    simple();
    risky();
    if (budget_ > 0) statement();
    pop();
    switch (rng_.below(3)) {
      case 0: {
        --indent_;
        open_cont("} catch {");
        body(1);
        break;
      }
      case 1: {
        std::string e = fresh("e");
        --indent_;
        open_cont("} catch (" + e + ") {");
        push();
        declare({e, ir::Type::Int, 0, true});
        line("print(" + e + ");");
        pop();
        break;
      }
      default: {
        std::string e = fresh("e");
        --indent_;
        open_cont("} catch (" + e + ": div, index, user) {");
        push();
        declare({e, ir::Type::Int, 0, true});
        line("print(" + e + " + 1000);");
        pop();
      }
    }
    close();
    --nest_;
  }

  void statement() {
    --budget_;
    bool may_nest = nest_ < 3;
    std::vector<int> kinds{0, 0, 0, 0};  // simple statements dominate
    if (may_nest) {
      bool in_if = if_depth_ > 0 && !has(Feature::NestedConditionals);
      if (has(Feature::If) && !in_if) kinds.push_back(1);
      if (has(Feature::IfElse) && !in_if) kinds.push_back(2);
      if (has(Feature::While) && loop_depth_ < max_loop_) kinds.push_back(3);
      if (has(Feature::For) && loop_depth_ < max_loop_) kinds.push_back(4);
      if (has(Feature::Switch) && !in_if) kinds.push_back(5);
      if (has(Feature::TryCatch)) kinds.push_back(6);
    }
    if (loop_depth_ > 0 && may_nest) kinds.push_back(7);
    if (has(Feature::Arrays)) kinds.push_back(8);
    switch (rng_.pick(kinds)) {
      case 1: if_stmt(false); return;
      case 2: if_stmt(true); return;
      case 3: while_stmt(); return;
      case 4: for_stmt(); return;
      case 5: switch_stmt(); return;
      case 6: try_stmt(); return;
      case 7:
        // Loop exits; the while counter is bumped first so `continue` is safe.
        if (has(Feature::If) || has(Feature::IfElse)) {
          if (switch_depth_ > 0 || rng_.coin()) {
            line("if (" + bool_expr(1) + ") { continue; }");
          } else {
            line("if (" + bool_expr(1) + ") { break; }");
          }
          return;
        }
        simple();
        return;
      case 8: array_decl(); return;
      default: simple(); return;
    }
  }

  void required() {
    // One statement per requested feature, so the mask is always exercised.
    if (has(Feature::Arrays)) array_decl();
    if (has(Feature::If)) if_stmt(false);
    if (has(Feature::IfElse)) if_stmt(true);
    if (has(Feature::NestedConditionals) && (has(Feature::If) || has(Feature::IfElse))) if_stmt(false, true);
    if (has(Feature::While) && max_loop_ > 0) while_stmt();
    if (has(Feature::For) && max_loop_ > 0) for_stmt();
    if (has(Feature::Switch)) switch_stmt();
    if (has(Feature::TryCatch)) try_stmt();
  }

  void helper(int index) {
    scopes_.clear();
    push();
    declare({"p", ir::Type::Int});
    declare({"q", ir::Type::Int});
    callable_ = index;
    budget_ = std::max(2, cfg_.max_blocks_per_function / 3);
    open("fn h" + std::to_string(index) + "(p: int, q: int) -> int {");
    std::string r = fresh("r");
    line("int " + r + " = p;");
    declare({r, ir::Type::Int});
    while (budget_ > 0) statement();
    line("return " + r + " + q;");
    close();
    out_ << '\n';
  }

  void main_function(int helpers) {
    scopes_.clear();
    push();
    callable_ = helpers;
    budget_ = std::max(4, cfg_.max_blocks_per_function);
    open("fn main(args: int[]) -> int {");
    for (int i = 0; i < 2; ++i) {
      std::string n = fresh("x");
      line("int " + n + " = " + std::to_string(small()) + ";");
      declare({n, ir::Type::Int});
    }
    if (has(Feature::ReadsInput)) {
      auto ints = visible(ir::Type::Int, true);
      open("if (args != null) {");
      line("if (len(args) > 0) { " + ints[0]->name + " = args[0]; }");
      line("if (len(args) > 1) { " + ints[1]->name + " = " + ints[1]->name + " + args[len(args) - 1]; }");
      close();
    }
    if (helpers > 0) {
      std::string n = fresh("x");
      line("int " + n + " = h" + std::to_string(helpers - 1) + "(" + int_atom() + ", " + int_atom() + ");");
      declare({n, ir::Type::Int});
    }
    required();
    while (budget_ > 0) statement();
    line("return " + int_expr() + ";");
    close();
  }

  const GenConfig& cfg_;
  Rng rng_;
  std::ostringstream out_;
  int indent_ = 0;
  int next_name_ = 0;
  std::vector<std::vector<Var>> scopes_;
  int budget_ = 0;
  int callable_ = 0;
  int max_loop_ = 2;
  int loop_depth_ = 0;
  int if_depth_ = 0;
  int switch_depth_ = 0;
  int nest_ = 0;
};

}  // namespace

const char* to_string(Feature f) {
  switch (f) {
    case Feature::If: return "if";
    case Feature::IfElse: return "if_else";
    case Feature::While: return "while";
    case Feature::For: return "for";
    case Feature::Switch: return "switch";
    case Feature::NestedConditionals: return "nested_conditionals";
    case Feature::TryCatch: return "try_catch";
    case Feature::Arrays: return "arrays";
    case Feature::MultiFunction: return "multi_function";
    case Feature::ReadsInput: return "reads_input";
  }
  return "?";
}

std::optional<Feature> parse_feature(std::string_view s) {
  for (Feature f : all_features())
    if (s == to_string(f)) return f;
  return std::nullopt;
}

const std::set<Feature>& all_features() {
  static const std::set<Feature> all{Feature::If,     Feature::IfElse,   Feature::While,
                                     Feature::For,    Feature::Switch,   Feature::NestedConditionals,
                                     Feature::TryCatch, Feature::Arrays, Feature::MultiFunction,
                                     Feature::ReadsInput};
  return all;
}

frontend::SourceUnit gen_program(const GenConfig& config) {
  auto inputs = standard_inputs(8, config.seed);
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    std::string text = Generator(config, mix_seed(config.seed, attempt)).run();
    auto parsed = frontend::parse(text);
    if (!parsed.ast)
      throw Error(ErrorCode::Internal, "generated program does not parse: " + frontend::to_string(parsed.diagnostics[0]) +
                                           "\n" + text);
    auto program = frontend::lower(*parsed.ast);
    bool terminates = std::all_of(inputs.begin(), inputs.end(), [&](const interp::Input& in) {
      return interp::run(program, in, 1'000'000).outcome != interp::Outcome::FuelExhausted;
    });
    if (!terminates) continue;
    frontend::SourceUnit unit;
    unit.path = "gen-" + std::to_string(config.seed) + ".mini";
    unit.text = std::move(text);
    unit.ast = std::move(*parsed.ast);
    return unit;
  }
  throw Error(ErrorCode::Internal, "generator kept producing non-terminating programs");
}

}  // namespace cfo::harness
